#include "pl/spectra.hpp"
#include "pl/units.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace pl;

namespace
{

constexpr double pi = std::numbers::pi;

// Independent references, written out from the textbook forms.
double lorentz(double x, double fwhm, double area)
{
    const double h = 0.5 * fwhm;
    return area * (h / pi) / (x * x + h * h);
}

double bose(double e_ueV, double t_K) { return 1.0 / (std::exp(e_ueV / (86.17333262 * t_K)) - 1.0); }

EmitterModel emitter(double dw, double gamma_star, double t_K)
{
    EmitterModel m;
    m.zpl_energy_ueV = 972425.0;
    m.zpl_fwhm_ueV = gamma_star;
    m.debye_waller = dw;
    m.temperature_K = t_K;
    m.gamma_fs_ueV = 2.5711;
    m.eta_qy = 0.01;
    return m;
}

Spectrum raw_lorentzian(const EnergyGrid &g, double fwhm)
{
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = lorentz(g.at(i), fwhm, 1.0);
    return Spectrum(g, v, Normalization::raw_counts);
}

} // namespace

TEST_CASE("pure Lorentzian emitter peaks at 4/gamma*")
{
    const double gs = 4.0;
    const Spectrum s = build_fs_spectrum(emitter(1.0, gs, 4.0), EnergyGrid::centered(0.0, 500.0 * gs, gs / 10.0));
    CHECK(s.normalization() == Normalization::area_two_pi);
    CHECK(s.integral() == doctest::Approx(2.0 * pi).epsilon(1e-12));
    CHECK(test::rel_err(s.peak(), 4.0 / gs) < 2e-3);
}

TEST_CASE("zero temperature leaves no blue sideband")
{
    const EmitterModel m = emitter(0.65, 200.0, 0.0);
    const EnergyGrid g = EnergyGrid::centered(0.0, 12000.0, 10.0);
    const Spectrum wing = sideband_component(m, g);
    const double red = wing.integral(g.front(), 0.0);
    const double blue = wing.integral(0.0, g.back());
    CHECK(red > 0.0);
    CHECK(blue / red < 1e-12);
}

TEST_CASE("built spectra are positive and area 2pi with the Stokes side heavier")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dw(0.3, 0.95), t(0.0, 300.0), gs(50.0, 300.0);
    for (int k = 0; k < 20; ++k)
    {
        const EmitterModel m = emitter(dw(rng), gs(rng), t(rng));
        const EnergyGrid g = EnergyGrid::centered(0.0, 15000.0, m.zpl_fwhm_ueV / 10.0);
        const Spectrum s = build_fs_spectrum(m, g);
        CHECK(std::abs(s.integral() / (2.0 * pi) - 1.0) < 1e-6);
        for (double v : s.values())
            REQUIRE(v > 0.0);
        const Spectrum wing = sideband_component(m, g);
        CHECK(wing.integral(g.front(), 0.0) >= wing.integral(0.0, g.back()));
    }
}

TEST_CASE("Debye-Waller factor round-trips through the ZPL fit")
{
    for (double dw : {0.6, 0.65, 0.7})
    {
        const EmitterModel m = emitter(dw, 200.0, 4.0);
        const Spectrum s = build_fs_spectrum(m, EnergyGrid::centered(0.0, 15000.0, 5.0));
        const auto r = debye_waller(s, 800.0, 0.0, DebyeWallerMethod::zpl_fit);
        CHECK(std::abs(r.debye_waller - dw) < 1e-3);
        CHECK(test::rel_err(r.zpl_fwhm, 200.0) < 0.02);
    }
}

TEST_CASE("window integral of a Lorentzian matches the arctan form")
{
    // FWHM 2 so a half-width is 1; grid spans +-2000 half-widths
    const Spectrum s = build_fs_spectrum(emitter(1.0, 2.0, 4.0), EnergyGrid::centered(0.0, 2000.0, 0.2));
    const double dw = debye_waller(s, 50.0).debye_waller;
    const double on_grid = std::atan(50.0) / std::atan(2000.0);
    CHECK(std::abs(dw - 0.987) < 0.002);
    CHECK(std::abs(dw - on_grid) < 1e-4);
}

TEST_CASE("paper-like spectrum has a window Debye-Waller factor in 0.6-0.8")
{
    const EmitterModel m = EmitterModel::paper_default();
    const Spectrum s = build_fs_spectrum(m, EnergyGrid::centered(0.0, 15000.0, 5.0));
    const double dw = debye_waller(s, 4.0 * m.zpl_fwhm_ueV).debye_waller;
    CHECK(dw >= 0.6);
    CHECK(dw <= 0.8);
}

TEST_CASE("spectrum and window preconditions are diagnosed")
{
    const EmitterModel m = emitter(0.65, 200.0, 4.0);
    CHECK_ERROR_CODE(build_fs_spectrum(m, EnergyGrid::centered(0.0, 5000.0, 25.0)), "grid_too_coarse");
    CHECK_ERROR_CODE(build_fs_spectrum(m, EnergyGrid::centered(0.0, 1500.0, 10.0)), "grid_too_narrow");

    const Spectrum s = build_fs_spectrum(m, EnergyGrid::centered(0.0, 3000.0, 10.0));
    CHECK_ERROR_CODE(debye_waller(s, 4000.0), "window_exceeds_grid");
    CHECK_ERROR_CODE(debye_waller(s, 300.0), "window_too_narrow");
    CHECK_ERROR_CODE(convolve_lorentzian(s, 20.0), "kappa_below_resolution");
    CHECK_ERROR_CODE(convolve_lorentzian(s, 0.0), "kappa_not_positive");

    EmitterModel bad = m;
    bad.debye_waller = 1.2;
    CHECK_ERROR_CODE(bad.validate(), "emitter_debye_waller");
}

TEST_CASE("Lorentzian convolution adds widths pointwise")
{
    const double g1 = 20.0, kappa = 10.0;
    // kernel mass beyond the grid (~kappa / (pi L)) is folded back onto it, so span widely
    const Spectrum out = convolve_lorentzian(raw_lorentzian(EnergyGrid::centered(0.0, 5000.0, 0.5), g1), kappa);
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double x = out.energy(i);
        if (std::abs(x) <= 5.0 * (g1 + kappa))
            worst = std::max(worst, test::rel_err(out[i], lorentz(x, g1 + kappa, 1.0)));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("convolved FWHM equals input FWHM plus kappa over a decade either side")
{
    const double g1 = 20.0;
    const EnergyGrid g = EnergyGrid::centered(0.0, 2000.0, 0.4);
    const Spectrum in = raw_lorentzian(g, g1);
    for (double ratio : {0.1, 0.3, 1.0, 3.0, 10.0})
    {
        const double kappa = ratio * g1;
        CHECK(test::rel_err(convolve_lorentzian(in, kappa).fwhm(), g1 + kappa) < 5e-3);
    }
}

TEST_CASE("a spike convolves into the cavity Lorentzian")
{
    const double kappa = 10.0, h = kappa / 20.0;
    const EnergyGrid g = EnergyGrid::centered(0.0, 400.0, h);
    std::vector<double> v(g.size(), 0.0);
    const std::size_t mid = g.size() / 2 + 40;
    v[mid] = 1.0 / h;
    const Spectrum out = convolve_lorentzian(Spectrum(g, v, Normalization::raw_counts), kappa);
    CHECK(out.peak_index() == mid);
    // the Lorentzian mass that would fall off the grid is folded back onto it
    const double x0 = g.at(mid), hw = 0.5 * kappa;
    const double on_grid = (std::atan((g.back() + 0.5 * h - x0) / hw) - std::atan((g.front() - 0.5 * h - x0) / hw)) / pi;
    for (double dx : {0.0, 2.5, 5.0, 15.0, 40.0})
    {
        const double cavity = 1.0 / ((pi * kappa / 2.0) * (1.0 + std::pow(2.0 * dx / kappa, 2)));
        CHECK(test::rel_err(out.at(x0 + dx), cavity / on_grid) < 5e-3);
    }
}

TEST_CASE("convolution conserves area on arbitrary positive inputs")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial)
    {
        const double kappa = 5.0 + 50.0 * u(rng);
        const double half = 500.0;
        const EnergyGrid g = EnergyGrid::centered(0.0, half + 10.0 * kappa, kappa / 5.0);
        std::vector<double> v(g.size(), 0.0);
        for (int bump = 0; bump < 5; ++bump)
        {
            const double c = (2.0 * u(rng) - 1.0) * half, w = 5.0 + 40.0 * u(rng), a = u(rng);
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] += a * std::exp(-0.5 * std::pow((g.at(i) - c) / w, 2));
        }
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += 1e-3 * u(rng) * std::exp(-std::abs(g.at(i)) / 50.0);
        const Spectrum in(g, v, Normalization::raw_counts);
        const Spectrum out = convolve_lorentzian(in, kappa);
        CHECK(test::rel_err(out.integral(), in.integral()) < 1e-4);
    }
}

TEST_CASE("S-tilde maximum from the width-addition rule")
{
    CHECK(s_tilde_max(1.0, 4.0, 0.0) == doctest::Approx(1.0));
    CHECK(s_tilde_max(0.65, 200.0, 87.0) == doctest::Approx(9.06e-3).epsilon(1e-3));

    // a DW-weighted ZPL convolved numerically has the same peak
    const EnergyGrid g = EnergyGrid::centered(0.0, 10000.0, 5.0);
    const Spectrum zpl(g, sampled_lorentzian(g, 0.0, 200.0, 2.0 * pi * 0.65), Normalization::raw_counts);
    const double peak = convolve_lorentzian(zpl, 87.0).peak();
    CHECK(test::rel_err(peak, 4.0 * 0.65 / 287.0) < 0.02);
}

TEST_CASE("absorption spectrum of a pure ZPL at zero temperature equals emission")
{
    const EmitterModel m = emitter(1.0, 200.0, 0.0);
    const Spectrum emi = build_fs_spectrum(m, EnergyGrid::centered(0.0, 4000.0, 10.0));
    const Spectrum abs = absorption_spectrum(emi, m);
    for (std::size_t i = 0; i < emi.size(); ++i)
        REQUIRE(abs[i] == doctest::Approx(emi[i]).epsilon(1e-12));
}

TEST_CASE("absorption weights the mirrored sideband by detailed balance")
{
    const EmitterModel m = emitter(0.65, 2.0, 300.0);
    const EnergyGrid g = EnergyGrid::centered(0.0, 5000.0, 0.2);
    const double n = bose(1000.0, 300.0);
    CHECK(std::abs(n - 25.3) < 0.1);

    const Spectrum emi = build_fs_spectrum(m, g);
    const double ratio = absorption_spectrum(emi, m).at(-1000.0) / emi.at(-1000.0);
    CHECK(std::abs(ratio - 0.962) < 1e-3);

    // on the wing alone the ratio is exact
    const Spectrum wing = sideband_component(m, g).rescaled_to(Normalization::area_two_pi);
    const double wing_ratio = absorption_spectrum(wing, m).at(-1000.0) / wing.at(-1000.0);
    CHECK(std::abs(wing_ratio - n / (n + 1.0)) < 1e-9);

    // zero temperature: the absorption spectrum has no red wing at all
    const EmitterModel cold = emitter(0.65, 200.0, 0.0);
    const Spectrum cold_emi = build_fs_spectrum(cold, EnergyGrid::centered(0.0, 12000.0, 10.0));
    const Spectrum cold_abs = absorption_spectrum(cold_emi, cold);
    const Spectrum cold_zpl(cold_emi.grid(), sampled_lorentzian(cold_emi.grid(), 0.0, 200.0, 2.0 * pi * 0.65),
                            Normalization::raw_counts);
    CHECK(cold_abs.at(-3000.0) == doctest::Approx(cold_zpl.at(-3000.0)).epsilon(1e-9));
}

TEST_CASE("sideband point ratios obey detailed balance")
{
    for (double t : {4.0, 30.0, 77.0, 300.0})
    {
        const EmitterModel m = emitter(0.65, 50.0, t);
        const EnergyGrid g = EnergyGrid::centered(0.0, 12000.0, 5.0);
        const Spectrum wing = sideband_component(m, g);
        const double floor = 1e-12 * wing.peak();
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size() / 2; ++i)
        {
            const double red = wing[i], blue = wing[g.size() - 1 - i];
            if (red <= floor || blue <= floor)
                continue;
            const double n = bose(-g.at(i), t);
            worst = std::max(worst, test::rel_err(red / blue, (n + 1.0) / n));
        }
        CHECK(worst < 1e-6);
    }
}
