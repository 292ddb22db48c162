#include "pl/dynamics.hpp"
#include "pl/rng.hpp"
#include "pl/spectrum.hpp"
#include "pl/units.hpp"
#include "support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

using namespace pl;

namespace
{

const double hbar = 658.2119569;
const double gamma_fs = hbar / 256.0;

TimeGrid decay_grid() { return TimeGrid{-200.0, 4.0, 451}; } // -200 .. 1600 ps

// Bright-state population after a detection, from RK4 integration of the
// three-level rate equations, divided by its stationary value.
double g2_rk4(const LevelScheme &s, double tau_ps)
{
    const double r = s.pump_ueV / hbar, g = s.gamma_total_ueV / hbar, ks = s.k_shelve_ueV / hbar,
                 kd = s.k_deshelve_ueV / hbar;
    using State = std::array<double, 3>;
    const auto deriv = [&](const State &p) {
        return State{-r * p[0] + g * p[1] + kd * p[2], r * p[0] - (g + ks) * p[1], ks * p[1] - kd * p[2]};
    };
    State p{1.0, 0.0, 0.0};
    const int steps = std::max(2000, static_cast<int>(std::abs(tau_ps) * (r + g + ks + kd) * 20.0));
    const double h = std::abs(tau_ps) / steps;
    for (int i = 0; i < steps; ++i)
    {
        const State k1 = deriv(p);
        State q;
        for (int j = 0; j < 3; ++j)
            q[j] = p[j] + 0.5 * h * k1[j];
        const State k2 = deriv(q);
        for (int j = 0; j < 3; ++j)
            q[j] = p[j] + 0.5 * h * k2[j];
        const State k3 = deriv(q);
        for (int j = 0; j < 3; ++j)
            q[j] = p[j] + h * k3[j];
        const State k4 = deriv(q);
        for (int j = 0; j < 3; ++j)
            p[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    // stationary: pe = r pg / (g + ks), pd = ks pe / kd
    const double pe = r / (g + ks), pd = kd > 0.0 ? ks * pe / kd : 0.0;
    return p[1] / (pe / (1.0 + pe + pd));
}

} // namespace

TEST_CASE("cavity acceleration shortens the long lifetime")
{
    const TimeGrid grid = decay_grid();
    const auto fs = simulate_decay(gamma_fs, 1.0, {}, GaussianIrf{32.0}, grid);
    const auto again = simulate_decay(gamma_fs, 1.0, {}, GaussianIrf{32.0}, grid);
    CHECK(fs.counts == again.counts);

    const auto cav = simulate_decay(gamma_fs, 1.19, {}, GaussianIrf{0.0}, TimeGrid{0.0, 1.0, 1500});
    // long tail slope gives tau2 = 256 / 1.19 = 215 ps
    const double t1 = 800.0, t2 = 1200.0;
    const double tau = (t2 - t1) / std::log(cav.counts[800] / cav.counts[1200]);
    CHECK(tau == doctest::Approx(256.0 / 1.19).epsilon(1e-4));
    CHECK(std::abs(tau - 216.0) < 15.0);

    CHECK_ERROR_CODE(simulate_decay(gamma_fs, 1.0, {}, GaussianIrf{32.0}, TimeGrid{0.0, 4.0, 100}), "trace_too_short");
}

TEST_CASE("zero-width IRF gives the bare biexponential, recovered to 1e-6")
{
    const TimeGrid grid{0.0, 2.0, 800};
    const DecayWeights w{1.0, 23.0, 0.3};
    const auto trace = scaled_to_peak(simulate_decay(gamma_fs, 1.0, w, GaussianIrf{0.0}, grid), 1e5);
    const double scale = 1e5 / (w.a1 + w.a2);
    CHECK(trace.counts[10] == doctest::Approx(scale * (std::exp(-20.0 / 23.0) + 0.3 * std::exp(-20.0 / 256.0))));

    fit::LmOptions tight;
    tight.relative_tolerance = 1e-14;
    const BiexpFit fit = fit_biexponential(trace, tight);
    CHECK(fit.converged);
    CHECK(test::rel_err(fit.tau1_ps, 23.0) < 1e-6);
    CHECK(test::rel_err(fit.tau2_ps, 256.0) < 1e-6);
    CHECK(test::rel_err(fit.a2 / fit.a1, 0.3) < 1e-6);
}

TEST_CASE("noiseless biexponential recovery across lifetime ratios")
{
    std::mt19937_64 engine(rng::derive_seed(31, 0));
    std::uniform_real_distribution<double> ratio(3.0, 30.0), weight(0.1, 0.9);
    int good = 0;
    for (int k = 0; k < 100; ++k)
    {
        const double tau1 = 256.0 / ratio(engine);
        const DecayWeights w{1.0, tau1, weight(engine)};
        const auto trace = scaled_to_peak(simulate_decay(gamma_fs, 1.0, w, GaussianIrf{32.0}, decay_grid()), 1e5);
        const BiexpFit fit = fit_biexponential(trace);
        if (test::rel_err(fit.tau1_ps, tau1) < 1e-3 && test::rel_err(fit.tau2_ps, 256.0) < 1e-3 &&
            test::rel_err(fit.a2 / fit.a1, w.a2 / w.a1) < 1e-3)
            ++good;
    }
    CHECK(good == 100);
}

TEST_CASE("Poisson-noise fits at paper amplitudes")
{
    const DecayWeights w{};
    const auto clean = scaled_to_peak(simulate_decay(gamma_fs, 1.0, w, GaussianIrf{32.0}, decay_grid()), 1e5);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        const BiexpFit fit = fit_biexponential(with_poisson_noise(clean, seed));
        CHECK(fit.converged);
        CHECK(std::abs(fit.tau2_ps - 256.0) < 4.0);
        CHECK(std::abs(fit.tau1_ps - 23.0) < 5.0);
        CHECK(fit.long_weight > 0.8);
        CHECK(fit.tau1_ps < fit.tau2_ps);
        CHECK(fit.long_weight ==
              doctest::Approx(fit.a2 * fit.tau2_ps / (fit.a1 * fit.tau1_ps + fit.a2 * fit.tau2_ps)));
    }
}

TEST_CASE("single-exponential input collapses to one component")
{
    const DecayWeights w{0.0, 23.0, 1.0};
    const auto trace = scaled_to_peak(simulate_decay(gamma_fs, 1.0, w, GaussianIrf{32.0}, decay_grid()), 1e5);
    const BiexpFit fit = fit_biexponential(trace);
    CHECK(fit.long_weight > 0.999);
    CHECK(test::rel_err(fit.tau2_ps, 256.0) < 1e-3);
}

TEST_CASE("fit preconditions")
{
    DecayTrace small{TimeGrid{0.0, 1.0, 20}, std::vector<double>(20, 1.0), GaussianIrf{}};
    CHECK_ERROR_CODE(fit_biexponential(small), "trace_too_few_bins");
    DecayTrace empty{TimeGrid{0.0, 1.0, 60}, std::vector<double>(60, 0.0), GaussianIrf{}};
    CHECK_ERROR_CODE(fit_biexponential(empty), "trace_zero");
}

TEST_CASE("IRF convolution preserves total counts")
{
    const TimeGrid grid{-300.0, 1.0, 3300};
    const BiexpComponents c{2.0, 23.0, 0.5, 256.0};
    const auto gauss = biexp_model(c, GaussianIrf{32.0}, grid);
    const double area = trapezoid(gauss, grid.step_ps);
    CHECK(test::rel_err(area, c.a1 * c.tau1_ps + c.a2 * c.tau2_ps) < 1e-4);

    // a tabulated IRF: a discrete triangle 40 ps wide centred at 0
    TabulatedIrf tab{-20.0, {}};
    for (int k = 0; k <= 40; ++k)
        tab.values.push_back(20.0 - std::abs(k - 20.0));
    const auto bare = biexp_model(c, GaussianIrf{0.0}, grid);
    const auto tri = biexp_model(c, tab, grid);
    const double sum_bare = std::accumulate(bare.begin(), bare.end(), 0.0);
    const double sum_tri = std::accumulate(tri.begin(), tri.end(), 0.0);
    CHECK(test::rel_err(sum_tri, sum_bare) < 1e-4);
}

TEST_CASE("saturation curves")
{
    const std::vector<double> p{0.1, 0.8, 2.0, 50.0};
    const auto cw = saturation_curve(p, 1000.0, 0.8, Excitation::cw);
    const auto pulsed = saturation_curve(p, 1000.0, 0.8, Excitation::pulsed);
    CHECK(cw[1] == doctest::Approx(500.0));
    CHECK(pulsed[1] == doctest::Approx(1000.0 * (1.0 - std::exp(-1.0))));

    std::vector<double> sweep(160); // up to 30 P_sat
    for (std::size_t i = 0; i < sweep.size(); ++i)
        sweep[i] = 0.01 * std::pow(1.05, static_cast<double>(i));
    for (auto mode : {Excitation::cw, Excitation::pulsed})
    {
        const auto curve = saturation_curve(sweep, 1768.0, 0.8, mode);
        for (std::size_t i = 1; i < curve.size(); ++i)
        {
            REQUIRE(curve[i] > curve[i - 1]);
            REQUIRE(curve[i] <= 1768.0);
        }
    }
    CHECK_ERROR_CODE(saturation_curve(std::vector<double>{0.0}, 1.0, 1.0, Excitation::cw), "power_not_positive");
}

TEST_CASE("saturation fits recover I_sat and P_sat at 1% noise")
{
    std::vector<double> p;
    for (double x = 0.05; x < 8.0; x *= 1.3)
        p.push_back(x);
    for (auto mode : {Excitation::cw, Excitation::pulsed})
    {
        const auto clean = saturation_curve(p, 1768.0, 0.8, mode);
        for (std::uint64_t seed = 0; seed < 50; ++seed)
        {
            std::mt19937_64 engine(rng::derive_seed(seed, 7));
            std::normal_distribution<double> noise(0.0, 0.01);
            std::vector<double> y(clean);
            for (double &v : y)
                v *= 1.0 + noise(engine);
            const auto fit = fit_saturation(p, y, mode);
            REQUIRE(fit.converged);
            CHECK(test::rel_err(fit.i_sat, 1768.0) < 0.03);
            CHECK(test::rel_err(fit.p_sat, 0.8) < 0.03);
        }
    }
}

TEST_CASE("quantum yield from the saturation intensity")
{
    CHECK(qy_from_saturation(0.5 * 38.26e6, 0.5, 38.26e6).eta_qy == doctest::Approx(1.0));
    const double i_sat = 0.0066 * 0.007 * 38.26e6;
    CHECK(i_sat == doctest::Approx(1768.0).epsilon(1e-3));
    const auto qy = qy_from_saturation(i_sat, 0.0066, 38.26e6);
    CHECK(qy.eta_qy == doctest::Approx(0.007).epsilon(1e-12));
    CHECK_FALSE(qy.unphysical);
    CHECK(qy_from_saturation(i_sat, 0.0033, 38.26e6).eta_qy == doctest::Approx(0.014).epsilon(1e-12));
    CHECK(qy_from_saturation(1e8, 0.0066, 38.26e6).unphysical);
}

TEST_CASE("three-level correlation matches direct integration of the rate equations")
{
    const double g = 1.19 * gamma_fs;
    for (const LevelScheme s : {LevelScheme{0.3 * g, g, 0.0, 0.0, 0.0}, LevelScheme{0.5 * g, g, 0.02 * g, 0.001 * g, 0.0},
                                LevelScheme{2.0 * g, g, 0.2 * g, 0.05 * g, 0.0}})
    {
        for (double tau : {0.0, 50.0, 300.0, 2000.0, 20000.0})
            CHECK(g2_cw_emitter(s, tau) == doctest::Approx(g2_rk4(s, tau)).epsilon(1e-7));

        // the same curve through the eigen-rates and bunching amplitude
        const ThreeLevelModes m = three_level_modes(s);
        for (double tau : {10.0, 200.0, 5000.0})
        {
            const double closed = 1.0 - (1.0 + m.amplitude) * std::exp(-m.lambda1_per_ps * tau) +
                                  m.amplitude * std::exp(-m.lambda2_per_ps * tau);
            CHECK(g2_cw_emitter(s, tau) == doctest::Approx(closed).epsilon(1e-9));
        }
    }
}

TEST_CASE("no shelving and no background: perfect antibunching, no bunching")
{
    const double g = 1.19 * gamma_fs;
    const LevelScheme s{0.5 * g, g, 0.0, 0.0, 0.0};
    const auto trace = g2_correlation(s, Excitation::cw, TimeGrid::symmetric(5000.0, 5.0), GaussianIrf{0.0});
    CHECK(std::abs(g2_at_zero(trace)) < 1e-12);
    CHECK(*std::max_element(trace.g2.begin(), trace.g2.end()) <= 1.0 + 1e-12);
    CHECK(trace.g2.back() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("g2 tends to 1 and g2(0) = b (2 - b) with a background")
{
    std::mt19937_64 engine(rng::derive_seed(32, 0));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double g = gamma_fs;
    for (int k = 0; k < 50; ++k)
    {
        const double b = 0.9 * u(engine);
        const LevelScheme s{(0.05 + 3.0 * u(engine)) * g, g, 0.3 * u(engine) * g, (0.001 + 0.1 * u(engine)) * g, b};
        const auto trace = g2_correlation(s, Excitation::cw, TimeGrid::symmetric(2e6, 1e5), GaussianIrf{0.0});
        REQUIRE(g2_at_zero(trace) == doctest::Approx(b * (2.0 - b)).epsilon(1e-9));
        REQUIRE(trace.g2.front() == doctest::Approx(1.0).epsilon(1e-6));
        REQUIRE(trace.g2.back() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("timing jitter fills the dip but leaves the baseline")
{
    const double g = 1.19 * gamma_fs;
    const LevelScheme s{0.5 * g, g, 0.0, 0.0, 0.0};
    const auto sharp = g2_correlation(s, Excitation::cw, TimeGrid::symmetric(3000.0, 2.0), GaussianIrf{0.0});
    const auto blurred = g2_correlation(s, Excitation::cw, TimeGrid::symmetric(3000.0, 2.0), GaussianIrf{32.0});
    CHECK(g2_at_zero(blurred) > g2_at_zero(sharp));
    CHECK(blurred.g2.back() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tuned scheme reproduces raw, deconvolved and bunching targets")
{
    const double g = 1.19 * gamma_fs;
    const LevelScheme s = tune_level_scheme(LevelScheme{0.0, g, 0.02 * g, 0.0, 0.0}, GaussianIrf{32.0}, {});
    CHECK(s.background == doctest::Approx(0.2).epsilon(1e-9));

    const auto raw = g2_correlation(s, Excitation::cw, TimeGrid::symmetric(60000.0, 2.0), GaussianIrf{32.0});
    CHECK(g2_at_zero(raw) == doctest::Approx(0.4).epsilon(1e-6));
    const auto deconv = g2_correlation(s, Excitation::cw, TimeGrid::symmetric(60000.0, 2.0), GaussianIrf{0.0});
    CHECK(g2_at_zero(deconv) == doctest::Approx(0.36).epsilon(1e-6));
    CHECK(1.0 / three_level_modes(s).lambda2_per_ps == doctest::Approx(1e4).epsilon(1e-6));
    CHECK(std::abs(bunching_decay_time(raw, 3000.0, 40000.0) / 1e4 - 1.0) < 0.1);

    CHECK_ERROR_CODE(tune_level_scheme(LevelScheme{0.0, g, 0.02 * g, 0.0, 0.0}, GaussianIrf{32.0}, {0.3, 0.36, 1e4}),
                     "g2_target");
}

TEST_CASE("pulsed correlation: empty central peak without background")
{
    const double g = 1.19 * gamma_fs;
    const PulsedOptions pulsed{};
    const LevelScheme clean{0.0, g, 0.0, 0.0, 0.0};
    const auto areas = pulsed_peak_areas(clean, pulsed, 5);
    CHECK(areas[0] == 0.0);
    for (int k = 1; k < 5; ++k)
        CHECK(areas[static_cast<std::size_t>(k)] == doctest::Approx(1.0).epsilon(1e-9));

    const double period = 1e12 / pulsed.f_rep_hz;
    const TimeGrid grid = TimeGrid::symmetric(4.5 * period, 4.0);
    const auto trace = g2_correlation(clean, Excitation::pulsed, grid, GaussianIrf{32.0}, pulsed);
    CHECK(pulsed_g2_zero(trace, pulsed.f_rep_hz) < 1e-3);

    LevelScheme bg = clean;
    bg.background = 0.2;
    const auto with_bg = g2_correlation(bg, Excitation::pulsed, grid, GaussianIrf{32.0}, pulsed);
    CHECK(pulsed_g2_zero(with_bg, pulsed.f_rep_hz) == doctest::Approx(0.2 * 1.8).epsilon(2e-3));
}

TEST_CASE("pulsed correlation: shelving lifts the near side peaks")
{
    const double g = 1.19 * gamma_fs;
    const LevelScheme s{0.0, g, 0.1 * g, 0.002 * g, 0.0};
    const auto areas = pulsed_peak_areas(s, PulsedOptions{}, 40);
    CHECK(areas[1] > areas[39]);
    CHECK(areas[39] == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("correlation grid must be symmetric")
{
    const LevelScheme s{1.0, 2.0, 0.0, 0.0, 0.0};
    CHECK_ERROR_CODE(g2_correlation(s, Excitation::cw, TimeGrid{-10.0, 1.0, 15}, GaussianIrf{0.0}),
                     "tau_grid_not_symmetric");
    CHECK_ERROR_CODE(LevelScheme({1.0, 2.0, 0.5, 0.0, 0.0}).validate(), "dark_state_trap");
}
