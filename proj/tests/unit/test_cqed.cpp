#include "pl/cavity.hpp"
#include "pl/cqed.hpp"
#include "pl/spectra.hpp"
#include "pl/units.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace pl;

namespace
{

constexpr double pi = std::numbers::pi;
const double gamma_fs = 658.2119569 / 256.0;
const double kappa_paper = 972425.0 / 1.12e4;

Spectrum paper_fs(double half_span, double step)
{
    return build_fs_spectrum(EmitterModel::paper_default(), EnergyGrid::centered(0.0, half_span, step));
}

Spectrum zpl_only(const EnergyGrid &g, double dw, double gamma_star)
{
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const double h = 0.5 * gamma_star, x = g.at(i);
        v[i] = 2.0 * pi * dw * (h / pi) / (x * x + h * h);
    }
    return Spectrum(g, v, Normalization::raw_counts);
}

} // namespace

TEST_CASE("Purcell factor from mode volume and effective Q")
{
    const double pref = 3.0 / (4.0 * pi * pi);
    CHECK(pref == doctest::Approx(0.0759909).epsilon(1e-6));
    CHECK(purcell_factor(1275.0, 1.0, pref * 3390.0, 3390.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(purcell_factor(1275.0, 1.0, 2.49, 1.12e4) == doctest::Approx(341.8).epsilon(1e-3));
    CHECK(purcell_factor(1275.0, 1.0, 1.245, 1.12e4) ==
          doctest::Approx(2.0 * purcell_factor(1275.0, 1.0, 2.49, 1.12e4)).epsilon(1e-12));

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> v(0.5, 20.0), q(100.0, 1e5), n(1.0, 2.5);
    for (int k = 0; k < 500; ++k)
    {
        const double vv = v(rng), qq = q(rng), nn = n(rng);
        REQUIRE(purcell_factor(1275.0, nn, 2.0 * vv, 2.0 * qq) ==
                doctest::Approx(purcell_factor(1275.0, nn, vv, qq)).epsilon(1e-12));
    }
}

TEST_CASE("brightening and decay ratios")
{
    const auto sat = brightening_ratios(0.65, 29.0, 0.0);
    CHECK(sat.flux_ratio_sat == doctest::Approx(18.85));
    CHECK(sat.flux_ratio_linear == sat.flux_ratio_sat);
    CHECK(sat.decay_ratio == 1.0);
    CHECK(brightening_ratios(0.65, 29.0, 0.01).decay_ratio == doctest::Approx(1.1885).epsilon(1e-6));
}

TEST_CASE("solving for the Purcell factor and quantum yield")
{
    const auto sol = solve_fp_and_qy(19.0, 1.19, 0.65);
    CHECK(sol.f_p == doctest::Approx(19.0 / 0.65).epsilon(1e-12));
    CHECK(sol.f_p == doctest::Approx(29.2).epsilon(2e-3));
    CHECK(sol.eta_qy == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(solve_fp_and_qy(0.65 * 29.0, 1.0, 0.65).eta_qy == 0.0);
    CHECK_ERROR_CODE(solve_fp_and_qy(19.0, 0.99, 0.65), "decay_ratio_below_one");
}

TEST_CASE("forward and inverse Purcell maps are exact inverses")
{
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> dw(0.05, 1.0), fp(0.0, 500.0), eta(0.0, 1.0);
    for (int k = 0; k < 2000; ++k)
    {
        const double d = dw(rng), f = fp(rng) + 1e-3, e = eta(rng);
        const auto fwd = brightening_ratios(d, f, e);
        REQUIRE(fwd.decay_ratio >= 1.0);
        REQUIRE(fwd.flux_ratio_sat >= fwd.flux_ratio_linear);
        const auto back = solve_fp_and_qy(fwd.flux_ratio_sat, fwd.decay_ratio, d);
        REQUIRE(test::rel_err(back.f_p, f) < 1e-12);
        REQUIRE(std::abs(back.eta_qy - e) < 1e-12);
    }
}

TEST_CASE("brightness profile of a pure ZPL at the cavity-convolved peak")
{
    const CouplingParams c{25.0, 2.571, 87.0};
    const double s_peak = 4.0 * 1.0 / (200.0 + 87.0);
    const double x = 625.0 * s_peak / 2.571;
    CHECK(x == doctest::Approx(3.389).epsilon(1e-3));
    CHECK(brightness(c, s_peak) == doctest::Approx(x / (1.0 + x)).epsilon(1e-14));
    CHECK(brightness(c, s_peak) == doctest::Approx(0.772).epsilon(1e-3));

    const EnergyGrid g = EnergyGrid::centered(0.0, 20000.0, 5.0);
    const Spectrum s_t = convolve_lorentzian(zpl_only(g, 1.0, 200.0), 87.0);
    const Spectrum beta = brightness_profile(c, s_t);
    CHECK(std::abs(beta.peak() - 0.772) < 0.005);

    const Spectrum none = brightness_profile(CouplingParams{0.0, 2.571, 87.0}, s_t);
    CHECK(none.peak() == 0.0);

    const Spectrum other(EnergyGrid::centered(0.0, 100.0, 5.0), std::vector<double>(41, 0.0),
                         Normalization::raw_counts);
    CHECK_ERROR_CODE(brightness_profile(c, s_t, other), "grid_mismatch");
}

TEST_CASE("brightness stays in [0, 1) and rises with g")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> lg(-2.0, 3.0), ls(-6.0, 0.0), lr(-1.0, 3.0);
    for (int k = 0; k < 5000; ++k)
    {
        const double g = std::pow(10.0, lg(rng)), gamma = std::pow(10.0, lr(rng)), kappa = std::pow(10.0, lr(rng));
        const double se = std::pow(10.0, ls(rng)), sa = std::pow(10.0, ls(rng));
        const double b1 = brightness({g, gamma, kappa}, se, sa);
        const double b2 = brightness({1.1 * g, gamma, kappa}, se, sa);
        REQUIRE(b1 >= 0.0);
        REQUIRE(b1 < 1.0);
        REQUIRE(b2 > b1);
    }
    // deep saturation approaches 1 monotonically
    double prev = 0.0;
    for (double g : {1.0, 10.0, 100.0, 1000.0, 1e4})
    {
        const double b = brightness({g, 2.571, 87.0}, 0.01);
        CHECK(b > prev);
        prev = b;
    }
    CHECK(prev > 0.9999);
}

TEST_CASE("steady state limits")
{
    const CouplingParams c{25.0, gamma_fs, kappa_paper};
    const auto zero = steady_state(0.0, c, 0.009, 0.001);
    CHECK(zero.exciton_population == 0.0);
    CHECK(zero.photon_number == 0.0);

    const auto dark = steady_state(1e-3, CouplingParams{0.0, gamma_fs, kappa_paper}, 0.009);
    CHECK(dark.photon_number == 0.0);
    CHECK(dark.exciton_population == doctest::Approx(1e-3 / gamma_fs).epsilon(1e-14));

    CHECK(steady_state(10.0, c, 0.009).weak_pump_violated);
    CHECK_FALSE(steady_state(1e-4, c, 0.009).weak_pump_violated);
}

TEST_CASE("steady-state photon number equals (pump/kappa) beta")
{
    // independent 2x2 solve of the rate equations
    const auto oracle = [](double p, const CouplingParams &c, double se, double sa) {
        const double g2 = c.g_ueV * c.g_ueV;
        Eigen::Matrix2d m;
        m << c.gamma_ueV + g2 * se, -g2 * sa, -g2 * se, c.kappa_ueV + g2 * sa;
        return Eigen::Vector2d(m.fullPivLu().solve(Eigen::Vector2d(p, 0.0)));
    };

    const Spectrum s_t = convolve_lorentzian(paper_fs(15000.0, 5.0), kappa_paper);
    const CouplingParams c{25.0, gamma_fs, kappa_paper};
    for (double w : {-2000.0, -300.0, 0.0, 150.0})
    {
        const double se = s_t.at(w);
        const auto ss = steady_state(1e-3, c, se);
        const Eigen::Vector2d ref = oracle(1e-3, c, se, 0.0);
        CHECK(test::rel_err(ss.photon_number, ref(1)) < 1e-10);
        CHECK(test::rel_err(ss.exciton_population, ref(0)) < 1e-10);
        CHECK(test::rel_err(ss.photon_number, 1e-3 / c.kappa_ueV * brightness(c, se)) < 1e-10);
    }

    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> lg(-1.0, 2.0), ls(-5.0, -1.0), lr(-1.0, 3.0), lp(-8.0, -3.0);
    for (int k = 0; k < 10000; ++k)
    {
        const CouplingParams r{std::pow(10.0, lg(rng)), std::pow(10.0, lr(rng)), std::pow(10.0, lr(rng))};
        const double se = std::pow(10.0, ls(rng)), sa = std::pow(10.0, ls(rng)), p = std::pow(10.0, lp(rng));
        const auto ss = steady_state(p, r, se, sa);
        REQUIRE(test::rel_err(ss.photon_number, p / r.kappa_ueV * brightness(r, se, sa)) < 1e-10);
    }
}

TEST_CASE("emitted spectrum is a kappa-wide Lorentzian weighted by beta")
{
    const Spectrum s_t = convolve_lorentzian(zpl_only(EnergyGrid::centered(0.0, 15000.0, 5.0), 0.65, 200.0), kappa_paper);
    const CouplingParams c{25.0, gamma_fs, kappa_paper};
    const EnergyGrid out_grid = EnergyGrid::centered(0.0, 30000.0, 2.0);
    const Spectrum on = emitted_spectrum(0.0, c, s_t, 1e-3, out_grid);
    const Spectrum off = emitted_spectrum(400.0, c, s_t, 1e-3, out_grid);
    CHECK(test::rel_err(on.integral() / off.integral(), brightness(c, s_t.at(0.0)) / brightness(c, s_t.at(400.0))) <
          1e-6);
    CHECK(std::abs(on.fwhm() - kappa_paper) < out_grid.step());
    CHECK(std::abs(off.fwhm() - kappa_paper) < out_grid.step());
    // the cavity narrows the line it filters
    const double ratio = on.fwhm() / s_t.fwhm();
    CHECK(ratio < 1.0);
    CHECK(test::rel_err(ratio, kappa_paper / (200.0 + kappa_paper)) < 0.01);
}

TEST_CASE("modulation envelope limits")
{
    const double kappa = 20.0;
    const EnergyGrid g = EnergyGrid::centered(0.0, 1000.0 * kappa, kappa / 5.0);
    const Spectrum flat(g, std::vector<double>(g.size(), 0.3), Normalization::raw_counts);
    const Spectrum e = modulation_envelope(flat, kappa);
    CHECK(test::rel_err(e.at(0.0), 0.3) < 1e-3);
    CHECK(test::rel_err(e.at(500.0 * kappa), 0.3) < 1e-3);
}

TEST_CASE("modulation envelope converges to beta as kappa shrinks")
{
    // the Lorentzian has no second moment, so the approach is first order in kappa
    const EnergyGrid g = EnergyGrid::centered(0.0, 4000.0, 0.4);
    std::vector<double> s(g.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = 0.01 * std::exp(-0.5 * std::pow(g.at(i) / 200.0, 2));
    const Spectrum beta = brightness_profile({25.0, gamma_fs, 87.0}, Spectrum(g, s, Normalization::raw_counts));
    const auto error = [&](double kappa) {
        const Spectrum e = modulation_envelope(beta, kappa);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (std::abs(g.at(i)) < 1000.0)
                worst = std::max(worst, std::abs(e[i] - beta[i]));
        return worst / beta.peak();
    };
    const double coarse = error(20.0), fine = error(2.0);
    CHECK(fine < coarse);
    CHECK(coarse / fine > 5.0);
    CHECK(fine < 5e-3);
}

TEST_CASE("Hill form approximates the true envelope at paper-like parameters")
{
    const Spectrum s_t = convolve_lorentzian(paper_fs(15000.0, 5.0), kappa_paper);
    const Spectrum s_tt = convolve_lorentzian(s_t, kappa_paper);
    const CouplingParams c{25.0, gamma_fs, kappa_paper};
    const Spectrum truth = modulation_envelope(brightness_profile(c, s_t), kappa_paper);
    const Spectrum hill = hill_envelope(s_tt, c.a(), 1.0);
    CHECK(profile_residual_std_unit_sum(truth, hill) < 5e-5);

    // inverting the true envelope with the true (a, c) returns S-double-tilde near its peak
    const double scale = truth.peak() / hill.peak();
    const Spectrum back = invert_envelope(truth, c.a(), scale);
    const std::size_t ip = s_tt.peak_index();
    CHECK(test::rel_err(back[ip], s_tt[ip]) < 1e-3);
}

TEST_CASE("envelope inversion is exact on the Hill form")
{
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> ls(-6.0, -1.0), la(-1.0, 3.0), lc(-3.0, 3.0);
    const EnergyGrid g(-50.0, 1.0, 101);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial)
    {
        std::vector<double> s(g.size());
        for (double &x : s)
            x = std::pow(10.0, ls(rng));
        const double a = std::pow(10.0, la(rng)), c = std::pow(10.0, lc(rng));
        const Spectrum sd(g, s, Normalization::raw_counts);
        const Spectrum back = invert_envelope(hill_envelope(sd, a, c), a, c);
        for (std::size_t i = 0; i < s.size(); ++i)
            worst = std::max(worst, test::rel_err(back[i], s[i]));
    }
    CHECK(worst < 1e-12);

    // small envelopes invert linearly
    const Spectrum small(g, std::vector<double>(g.size(), 1e-9), Normalization::raw_counts);
    CHECK(invert_envelope(small, 2.0, 3.0)[0] == doctest::Approx(1e-9 / 6.0).epsilon(1e-8));
}

TEST_CASE("inversion reports where the denominator fails")
{
    const EnergyGrid g(-2.0, 1.0, 5);
    const Spectrum e(g, {0.1, 0.5, 1.2, 0.5, 0.1}, Normalization::raw_counts);
    try
    {
        (void)invert_envelope(e, 1.0, 1.0);
        FAIL("expected an inversion error");
    }
    catch (const ValidationError &err)
    {
        CHECK(err.code() == "inversion_denominator");
        CHECK(std::string(err.what()).find("energy 0 ueV") != std::string::npos);
    }
}

TEST_CASE("fitting g from a noiseless envelope")
{
    const Spectrum s_fs = paper_fs(15000.0, 5.0);
    const Spectrum s_tt = convolve_lorentzian(convolve_lorentzian(s_fs, kappa_paper), kappa_paper);
    for (double g : {5.0, 25.0})
    {
        const Spectrum e = hill_envelope(s_tt, g * g / gamma_fs, 7.0);
        const EnvelopeFit fit = fit_g_from_envelope(e, s_fs, kappa_paper, gamma_fs);
        CHECK(fit.converged);
        CHECK_FALSE(fit.below_noise_floor);
        CHECK(test::rel_err(fit.g_ueV, g) < 1e-3);
        CHECK(test::rel_err(fit.c, 7.0) < 1e-3);
        CHECK(fit.a == doctest::Approx(fit.g_ueV * fit.g_ueV / gamma_fs).epsilon(1e-12));
    }

    // a flat envelope carries no coupling information
    const Spectrum flat(s_tt.grid(), std::vector<double>(s_tt.size(), 0.0), Normalization::raw_counts);
    CHECK(fit_g_from_envelope_double_tilde(flat, s_tt, gamma_fs).below_noise_floor);
}

TEST_CASE("g from the lifetime change")
{
    CHECK(g_from_lifetime(4.0, 1.0, 1.0) == doctest::Approx(1.0));
    const double g = g_from_lifetime(200.0, 0.19 * 2.571, 0.65);
    CHECK(g == doctest::Approx(0.5 * std::sqrt(200.0 * 0.48849 / 0.65)).epsilon(1e-4));
    CHECK(std::abs(g - 6.13) < 0.01);
    CHECK(25.0 / g == doctest::Approx(4.08).epsilon(2e-3));
}

TEST_CASE("line through the origin")
{
    const auto exact = fit_line_through_origin({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0});
    CHECK(exact.slope == doctest::Approx(2.0));
    CHECK(exact.r_squared == doctest::Approx(1.0));
    const auto noisy = fit_line_through_origin({1.0, 2.0, 3.0, 4.0}, {1.0, 3.0, 2.0, 5.0});
    CHECK(noisy.r_squared < 0.9);
    CHECK_ERROR_CODE(fit_line_through_origin({0.0, 0.0}, {1.0, 2.0}), "regression_degenerate");
}
