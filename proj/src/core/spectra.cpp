#include "pl/spectra.hpp"

#include "pl/error.hpp"
#include "pl/units.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pl
{

void EmitterModel::validate() const
{
    require(std::isfinite(zpl_energy_ueV), "emitter_energy", "ZPL energy must be finite");
    require(zpl_fwhm_ueV > 0.0, "emitter_gamma_star", "ZPL FWHM gamma* must be > 0");
    require(debye_waller > 0.0 && debye_waller <= 1.0, "emitter_debye_waller", "Debye-Waller factor must lie in (0, 1]");
    require(sideband.exponent >= 1.0, "emitter_sideband_exponent", "sideband exponent must be >= 1");
    require(sideband.cutoff_ueV > 0.0, "emitter_sideband_cutoff", "sideband cutoff must be > 0");
    require(temperature_K >= 0.0, "emitter_temperature", "temperature must be >= 0");
    require(gamma_fs_ueV > 0.0, "emitter_gamma_fs", "free-space decay rate must be > 0");
    require(eta_qy >= 0.0 && eta_qy <= 1.0, "emitter_quantum_yield", "quantum yield must lie in [0, 1]");
}

EmitterModel EmitterModel::paper_default()
{
    EmitterModel m;
    m.zpl_energy_ueV = units::energy_from_wavelength(1275.0);
    m.zpl_fwhm_ueV = 200.0;
    m.debye_waller = 0.65;
    m.sideband = SidebandShape{1.0, 1000.0};
    m.temperature_K = 4.0;
    m.gamma_fs_ueV = units::rate_from_lifetime(256.0);
    m.eta_qy = 0.01;
    return m;
}

double zpl_center(const EmitterModel &model, EnergyAxis axis)
{
    return axis == EnergyAxis::absolute ? model.zpl_energy_ueV : 0.0;
}

std::vector<double> sampled_lorentzian(const EnergyGrid &grid, double center, double fwhm, double area)
{
    const double half = 0.5 * fwhm;
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const double d = grid.at(i) - center;
        v[i] = (half / units::pi) / (d * d + half * half);
    }
    const double a = trapezoid(v, grid.step());
    for (double &x : v)
        x *= area / a;
    return v;
}

namespace
{

void check_fs_grid(const EmitterModel &model, const EnergyGrid &grid, double center)
{
    const double g = model.zpl_fwhm_ueV;
    if (grid.step() > g / 10.0 * (1.0 + 1e-12))
        throw ValidationError("grid_too_coarse", "grid spacing " + std::to_string(grid.step()) +
                                                     " ueV exceeds gamma*/10 = " + std::to_string(g / 10.0));
    if (grid.front() > center - 10.0 * g + 1e-9 * g || grid.back() < center + 10.0 * g - 1e-9 * g)
        throw ValidationError("grid_too_narrow", "grid must span at least +-10 gamma* (" + std::to_string(10.0 * g) +
                                                     " ueV) around the ZPL");
}

// One-phonon wing density at detuning d (unnormalized).
double wing_density(const SidebandShape &shape, double temperature_K, double d)
{
    const double w = std::abs(d);
    if (w == 0.0)
    {
        // lim_{w->0} J(w) n_B(w): finite only for the ohmic case
        if (shape.exponent == 1.0 && temperature_K > 0.0)
            return units::boltzmann_ueV_per_K * temperature_K / shape.cutoff_ueV;
        return 0.0;
    }
    const double j = std::pow(w / shape.cutoff_ueV, shape.exponent) * std::exp(-w / shape.cutoff_ueV);
    const double n = units::bose_occupation(w, temperature_K);
    return d < 0.0 ? j * (n + 1.0) : j * n;
}

std::vector<double> wing_values(const EmitterModel &model, const EnergyGrid &grid, double center)
{
    std::vector<double> v(grid.size(), 0.0);
    if (model.debye_waller >= 1.0)
        return v;
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = wing_density(model.sideband, model.temperature_K, grid.at(i) - center);
    const double a = trapezoid(v, grid.step());
    require(a > 0.0, "sideband_empty", "phonon wing has zero weight on this grid");
    const double scale = units::two_pi * model.sideband_weight() / a;
    for (double &x : v)
        x *= scale;
    return v;
}

} // namespace

Spectrum sideband_component(const EmitterModel &model, const EnergyGrid &grid, EnergyAxis axis)
{
    model.validate();
    const double center = zpl_center(model, axis);
    check_fs_grid(model, grid, center);
    return Spectrum(grid, wing_values(model, grid, center), Normalization::raw_counts);
}

Spectrum build_fs_spectrum(const EmitterModel &model, const EnergyGrid &grid, EnergyAxis axis)
{
    model.validate();
    const double center = zpl_center(model, axis);
    check_fs_grid(model, grid, center);

    auto values = sampled_lorentzian(grid, center, model.zpl_fwhm_ueV, units::two_pi * model.debye_waller);
    const auto wing = wing_values(model, grid, center);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] += wing[i];
    // Rescale away the last ulps so the area-2pi tag check is exact.
    return Spectrum::normalized(grid, std::move(values), Normalization::area_two_pi);
}

namespace
{

struct ZplFit
{
    double amplitude = 0.0; // area of the fitted Lorentzian over the real line
    double half_width = 0.0;
    double sse = 0.0;
};

// Linear least squares for amplitude and wing polynomial at fixed half width.
ZplFit fit_zpl_fixed_width(const std::vector<double> &x, const std::vector<double> &y, double half_width,
                           double window)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 8);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double d = x[static_cast<std::size_t>(i)];
        const double u = d / window;
        const double neg = std::min(u, 0.0);
        const double pos = std::max(u, 0.0);
        a(i, 0) = (half_width / units::pi) / (d * d + half_width * half_width);
        a(i, 1) = 1.0;
        a(i, 2) = neg;
        a(i, 3) = pos;
        a(i, 4) = neg * neg;
        a(i, 5) = pos * pos;
        a(i, 6) = neg * neg * neg;
        a(i, 7) = pos * pos * pos;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    ZplFit fit;
    fit.amplitude = c(0);
    fit.half_width = half_width;
    fit.sse = (a * c - b).squaredNorm();
    return fit;
}

} // namespace

DebyeWallerResult debye_waller(const Spectrum &s, double zpl_window, double center, DebyeWallerMethod method)
{
    const EnergyGrid &grid = s.grid();
    require(zpl_window > 0.0, "window_not_positive", "ZPL window half-width must be > 0");
    require(center - zpl_window >= grid.front() - 1e-9 * grid.step() &&
                center + zpl_window <= grid.back() + 1e-9 * grid.step(),
            "window_exceeds_grid", "ZPL window extends beyond the spectrum grid");
    const double total = s.integral();
    require(total > 0.0, "zero_spectrum", "Debye-Waller factor of an all-zero spectrum is undefined");
    const double measured_fwhm = s.fwhm();
    require(zpl_window >= 3.0 * measured_fwhm * (1.0 - 1e-9), "window_too_narrow",
            "ZPL window must be at least 3 x the ZPL FWHM (" + std::to_string(measured_fwhm) + " ueV)");

    if (method == DebyeWallerMethod::window_integral)
        return {s.integral(center - zpl_window, center + zpl_window) / total, measured_fwhm};

    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        const double d = s.energy(i) - center;
        if (std::abs(d) <= zpl_window * (1.0 + 1e-12))
        {
            x.push_back(d);
            y.push_back(s[i]);
        }
    }
    require(x.size() >= 16, "window_too_few_points", "ZPL window holds too few grid points for a fit");

    const double lo = std::log(0.1 * grid.step());
    const double hi = std::log(zpl_window);
    const auto objective = [&](double log_hw) {
        const ZplFit f = fit_zpl_fixed_width(x, y, std::exp(log_hw), zpl_window);
        return f.amplitude > 0.0 ? f.sse : std::numeric_limits<double>::infinity();
    };
    // The objective has local minima (a broad Lorentzian can mimic the
    // wing polynomial), so bracket the global one on a log scan first.
    constexpr int scan = 64;
    double best_x = lo, best_f = std::numeric_limits<double>::infinity();
    for (int k = 0; k < scan; ++k)
    {
        const double xk = lo + (hi - lo) * k / (scan - 1);
        if (const double fk = objective(xk); fk < best_f)
        {
            best_f = fk;
            best_x = xk;
        }
    }
    require(std::isfinite(best_f), "zpl_fit_failed", "no positive Lorentzian fits the ZPL window");
    const double dx = (hi - lo) / (scan - 1);
    std::uintmax_t iterations = 200;
    const auto best = boost::math::tools::brent_find_minima(objective, std::max(lo, best_x - dx),
                                                            std::min(hi, best_x + dx), 40, iterations);
    const ZplFit fit = fit_zpl_fixed_width(x, y, std::exp(best.first), zpl_window);

    std::vector<double> zpl(grid.size());
    for (std::size_t i = 0; i < zpl.size(); ++i)
    {
        const double d = grid.at(i) - center;
        zpl[i] = fit.amplitude * (fit.half_width / units::pi) / (d * d + fit.half_width * fit.half_width);
    }
    const double dw = std::clamp(trapezoid(zpl, grid.step()) / total, 0.0, 1.0);
    return {dw, 2.0 * fit.half_width};
}

Spectrum convolve_lorentzian(const Spectrum &s, double kappa)
{
    const EnergyGrid &grid = s.grid();
    require(kappa > 0.0, "kappa_not_positive", "cavity linewidth kappa must be > 0");
    if (grid.step() > kappa / 5.0 * (1.0 + 1e-12))
        throw ValidationError("kappa_below_resolution", "grid spacing " + std::to_string(grid.step()) +
                                                            " ueV exceeds kappa/5 = " + std::to_string(kappa / 5.0));

    const std::size_t n = s.size();
    const double h = grid.step();
    const double half = 0.5 * kappa;
    const auto cdf = [&](double x) { return std::atan(x / half) / units::pi; };

    // kernel[m + n - 1] = Lorentzian mass of the cell at offset m
    std::vector<double> kernel(2 * n - 1);
    for (std::size_t k = 0; k < kernel.size(); ++k)
    {
        const double m = static_cast<double>(k) - static_cast<double>(n - 1);
        kernel[k] = cdf((m + 0.5) * h) - cdf((m - 0.5) * h);
    }

    std::vector<double> weighted(n);
    for (std::size_t j = 0; j < n; ++j)
    {
        const double jj = static_cast<double>(j);
        const double on_grid = cdf((static_cast<double>(n - 1) - jj + 0.5) * h) - cdf((-jj - 0.5) * h);
        weighted[j] = s[j] / on_grid;
    }

    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double *k = kernel.data() + (n - 1) + i; // k[-j] = kernel at offset i - j
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += weighted[j] * k[-static_cast<std::ptrdiff_t>(j)];
        out[i] = acc;
    }

    // The column renormalization conserves the plain sum exactly; this rescale
    // also absorbs the rectangle-vs-trapezoid difference at the two edge points.
    if (s.normalization() == Normalization::raw_counts)
    {
        const double area = s.integral();
        const double got = trapezoid(out, h);
        if (area > 0.0 && got > 0.0)
            for (double &x : out)
                x *= area / got;
        return Spectrum(grid, std::move(out), Normalization::raw_counts);
    }
    return Spectrum::normalized(grid, std::move(out), s.normalization());
}

double s_tilde_max(double dw, double gamma_star, double kappa)
{
    require(dw > 0.0 && dw <= 1.0, "dw_out_of_range", "Debye-Waller factor must lie in (0, 1]");
    require(gamma_star > 0.0, "gamma_star_not_positive", "gamma* must be > 0");
    require(kappa >= 0.0, "kappa_negative", "kappa must be >= 0");
    return 4.0 * dw / (gamma_star + kappa);
}

Spectrum absorption_spectrum(const Spectrum &s_emi, const EmitterModel &model, EnergyAxis axis)
{
    require(s_emi.normalization() == Normalization::area_two_pi, "not_area_two_pi",
            "absorption_spectrum expects an area-2pi emission spectrum");
    const double center = zpl_center(model, axis);
    const EnergyGrid &grid = s_emi.grid();
    std::vector<double> mirrored(grid.size());
    for (std::size_t i = 0; i < mirrored.size(); ++i)
        mirrored[i] = s_emi.at(2.0 * center - grid.at(i));
    return Spectrum::normalized(grid, std::move(mirrored), s_emi.normalization());
}

} // namespace pl
