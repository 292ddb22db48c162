#include "pl/dynamics.hpp"

#include "pl/error.hpp"
#include "pl/rng.hpp"
#include "pl/units.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace pl
{

namespace
{

constexpr double fwhm_to_sigma = 0.42466090014400953; // 1 / (2 sqrt(2 ln 2))

double scaled_erfc(double y)
{
    // exp(y^2) erfc(y) for y > 0 without overflow
    if (y < 25.0)
        return std::exp(y * y) * std::erfc(y);
    const double inv = 1.0 / (y * y);
    return (1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv * inv * inv) / (y * std::sqrt(units::pi));
}

// Exponential decay A exp(-t / tau) for t >= 0 convolved with a unit-area
// Gaussian of standard deviation sigma centred at 0.
double gaussian_exponential(double t, double amplitude, double tau, double sigma)
{
    if (sigma <= 0.0)
        return t >= 0.0 ? amplitude * std::exp(-t / tau) : 0.0;
    const double y = (sigma / tau - t / sigma) / std::sqrt(2.0);
    if (y > 0.0)
        return 0.5 * amplitude * std::exp(-t * t / (2.0 * sigma * sigma)) * scaled_erfc(y);
    return 0.5 * amplitude * std::exp(sigma * sigma / (2.0 * tau * tau) - t / tau) * std::erfc(y);
}

double pure_biexp(const BiexpComponents &c, double t)
{
    if (t < 0.0)
        return 0.0;
    return c.a1 * std::exp(-t / c.tau1_ps) + c.a2 * std::exp(-t / c.tau2_ps);
}

std::vector<double> normalized_irf(const TabulatedIrf &irf)
{
    require(!irf.values.empty(), "irf_empty", "tabulated IRF has no samples");
    const double sum = std::accumulate(irf.values.begin(), irf.values.end(), 0.0);
    require(sum > 0.0, "irf_zero", "tabulated IRF has zero area");
    std::vector<double> w(irf.values);
    for (double &x : w)
    {
        require(x >= 0.0, "irf_negative", "tabulated IRF must be >= 0");
        x /= sum;
    }
    return w;
}

} // namespace

void TimeGrid::validate() const
{
    require(step_ps > 0.0 && std::isfinite(step_ps), "time_step", "time bin width must be > 0");
    require(size >= 2, "time_grid_small", "time grid needs at least two bins");
}

TimeGrid TimeGrid::symmetric(double half_span_ps, double step_ps)
{
    const auto half = static_cast<std::size_t>(std::ceil(half_span_ps / step_ps - 1e-9));
    return TimeGrid{-static_cast<double>(half) * step_ps, step_ps, 2 * half + 1};
}

void DecayTrace::validate() const
{
    grid.validate();
    require(counts.size() == grid.size, "trace_size", "trace counts do not match the time grid");
    for (double c : counts)
        require(c >= 0.0 && std::isfinite(c), "trace_negative", "trace counts must be finite and >= 0");
}

std::vector<double> biexp_model(const BiexpComponents &c, const Irf &irf, const TimeGrid &grid)
{
    std::vector<double> out(grid.size, 0.0);
    if (const auto *g = std::get_if<GaussianIrf>(&irf))
    {
        const double sigma = g->fwhm_ps * fwhm_to_sigma;
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            const double t = grid.at(i);
            out[i] = gaussian_exponential(t, c.a1, c.tau1_ps, sigma) + gaussian_exponential(t, c.a2, c.tau2_ps, sigma);
        }
        return out;
    }
    const auto &tab = std::get<TabulatedIrf>(irf);
    const auto w = normalized_irf(tab);
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            acc += w[k] * pure_biexp(c, grid.at(i) - (tab.start_ps + grid.step_ps * static_cast<double>(k)));
        out[i] = acc;
    }
    return out;
}

DecayTrace simulate_decay(double gamma_fs_ueV, double decay_ratio, const DecayWeights &weights, const Irf &irf,
                          const TimeGrid &grid)
{
    grid.validate();
    require(gamma_fs_ueV > 0.0, "gamma_fs", "free-space decay rate must be > 0");
    require(decay_ratio > 0.0, "decay_ratio", "decay ratio must be > 0");
    require(weights.tau1_ps > 0.0 && weights.a1 >= 0.0 && weights.a2 >= 0.0, "decay_weights",
            "amplitudes must be >= 0 and tau1 > 0");
    const double tau2 = units::lifetime_from_rate(gamma_fs_ueV) / decay_ratio;
    if (grid.back() - std::max(grid.start_ps, 0.0) < 5.0 * tau2)
        throw ValidationError("trace_too_short", "time grid must extend at least 5 tau2 = " +
                                                     std::to_string(5.0 * tau2) + " ps past t = 0");
    const BiexpComponents c{weights.a1, weights.tau1_ps, weights.a2, tau2};
    return DecayTrace{grid, biexp_model(c, irf, grid), irf};
}

DecayTrace scaled_to_peak(const DecayTrace &trace, double peak_counts)
{
    const double peak = *std::max_element(trace.counts.begin(), trace.counts.end());
    require(peak > 0.0, "trace_zero", "cannot rescale an all-zero trace");
    DecayTrace out = trace;
    for (double &c : out.counts)
        c *= peak_counts / peak;
    return out;
}

DecayTrace with_poisson_noise(const DecayTrace &trace, std::uint64_t seed)
{
    std::mt19937_64 engine(rng::derive_seed(seed, 0));
    DecayTrace out = trace;
    for (double &c : out.counts)
    {
        if (c <= 0.0)
        {
            c = 0.0;
            continue;
        }
        std::poisson_distribution<long long> draw(c);
        c = static_cast<double>(draw(engine));
    }
    return out;
}

namespace
{

fit::LmResult fit_components(const DecayTrace &trace, const std::vector<double> &weights, Eigen::VectorXd start,
                             bool mono, const fit::LmOptions &options)
{
    const auto n = static_cast<Eigen::Index>(trace.counts.size());
    const fit::ResidualFunction residuals = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        BiexpComponents c;
        if (mono)
            c = {0.0, 1.0, std::exp(p(0)), std::exp(p(1))};
        else
            c = {std::exp(p(0)), std::exp(p(1)), std::exp(p(2)), std::exp(p(3))};
        const auto model = biexp_model(c, trace.irf, trace.grid);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const auto k = static_cast<std::size_t>(i);
            r(i) = (trace.counts[k] - model[k]) * weights[k];
        }
    };
    return fit::levenberg_marquardt(residuals, std::move(start), n, options);
}

} // namespace

BiexpFit fit_biexponential(const DecayTrace &trace, const fit::LmOptions &options)
{
    trace.validate();
    require(trace.counts.size() >= 50, "trace_too_few_bins", "biexponential fit needs at least 50 bins");
    const auto peak_it = std::max_element(trace.counts.begin(), trace.counts.end());
    require(*peak_it > 0.0, "trace_zero", "trace has no counts");
    const std::size_t peak_index = static_cast<std::size_t>(std::distance(trace.counts.begin(), peak_it));

    // Poisson weights 1 / max(count, 1) on the squared residual.
    std::vector<double> weights(trace.counts.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights[i] = 1.0 / std::sqrt(std::max(trace.counts[i], 1.0));

    // Starting values: log-linear regression on the tail for the long component.
    const double t_peak = trace.grid.at(peak_index);
    const double t_end = trace.grid.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = peak_index; i < trace.counts.size(); ++i)
    {
        const double t = trace.grid.at(i);
        if (t < t_peak + 0.3 * (t_end - t_peak) || trace.counts[i] < 5.0)
            continue;
        const double y = std::log(trace.counts[i]);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++m;
    }
    double tau2_0 = 0.2 * (t_end - t_peak);
    double a2_0 = 0.5 * *peak_it;
    if (m >= 3)
    {
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        if (slope < 0.0)
        {
            tau2_0 = -1.0 / slope;
            a2_0 = std::exp((sy - slope * sx) / m);
        }
    }
    a2_0 = std::clamp(a2_0, 1e-3 * *peak_it, 10.0 * *peak_it);
    const double a1_0 = std::max(*peak_it - a2_0, 0.1 * *peak_it);

    std::optional<fit::LmResult> best;
    for (double ratio : {3.0, 10.0, 30.0})
    {
        Eigen::VectorXd start(4);
        start << std::log(a1_0), std::log(tau2_0 / ratio), std::log(a2_0), std::log(tau2_0);
        auto lm = fit_components(trace, weights, start, false, options);
        if (!best || lm.chi2 < best->chi2)
            best = std::move(lm);
    }

    BiexpFit out;
    Eigen::VectorXd p = best->params;
    double tau1 = std::exp(p(1)), tau2 = std::exp(p(3));
    if (std::abs(tau1 - tau2) <= 0.05 * std::max(tau1, tau2))
    {
        Eigen::VectorXd start(2);
        start << std::log(std::exp(p(0)) + std::exp(p(2))), std::log(0.5 * (tau1 + tau2));
        const auto mono = fit_components(trace, weights, start, true, options);
        out.monoexponential = true;
        out.a2 = std::exp(mono.params(0));
        out.tau2_ps = std::exp(mono.params(1));
        out.tau1_ps = out.tau2_ps;
        out.sigma_a2 = out.a2 * std::sqrt(std::max(mono.covariance(0, 0), 0.0));
        out.sigma_tau2_ps = out.tau2_ps * std::sqrt(std::max(mono.covariance(1, 1), 0.0));
        out.sigma_tau1_ps = out.sigma_tau2_ps;
        out.long_weight = 1.0;
        out.chi2 = mono.chi2;
        out.iterations = best->iterations + mono.iterations;
        out.converged = mono.converged;
        return out;
    }

    // Order the components so that tau1 < tau2.
    int i1 = 0, i2 = 2;
    if (tau1 > tau2)
        std::swap(i1, i2);
    const auto sigma = [&](int k) { return std::sqrt(std::max(best->covariance(k, k), 0.0)); };
    out.a1 = std::exp(p(i1));
    out.tau1_ps = std::exp(p(i1 + 1));
    out.a2 = std::exp(p(i2));
    out.tau2_ps = std::exp(p(i2 + 1));
    out.sigma_a1 = out.a1 * sigma(i1);
    out.sigma_tau1_ps = out.tau1_ps * sigma(i1 + 1);
    out.sigma_a2 = out.a2 * sigma(i2);
    out.sigma_tau2_ps = out.tau2_ps * sigma(i2 + 1);
    out.long_weight = out.a2 * out.tau2_ps / (out.a1 * out.tau1_ps + out.a2 * out.tau2_ps);
    out.chi2 = best->chi2;
    out.iterations = best->iterations;
    out.converged = best->converged;
    return out;
}

std::vector<double> saturation_curve(std::span<const double> powers, double i_sat, double p_sat, Excitation mode)
{
    require(i_sat > 0.0 && p_sat > 0.0, "saturation_params", "I_sat and P_sat must be > 0");
    std::vector<double> out(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i)
    {
        const double p = powers[i];
        require(p > 0.0, "power_not_positive", "excitation powers must be > 0");
        out[i] = mode == Excitation::cw ? i_sat * p / (p + p_sat) : -i_sat * std::expm1(-p / p_sat);
    }
    return out;
}

SaturationFit fit_saturation(std::span<const double> powers, std::span<const double> counts, Excitation mode)
{
    require(powers.size() == counts.size() && powers.size() >= 3, "saturation_data",
            "saturation fit needs at least three (power, counts) pairs");
    for (double c : counts)
        require(c > 0.0, "counts_not_positive", "saturation counts must be > 0");

    const auto n = static_cast<Eigen::Index>(powers.size());
    const fit::ResidualFunction residuals = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        const auto model = saturation_curve(powers, std::exp(p(0)), std::exp(p(1)), mode);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const auto k = static_cast<std::size_t>(i);
            r(i) = (counts[k] - model[k]) / counts[k];
        }
    };

    const double i0 = 1.2 * *std::max_element(counts.begin(), counts.end());
    std::vector<double> sorted(powers.begin(), powers.end());
    std::sort(sorted.begin(), sorted.end());
    Eigen::VectorXd start(2);
    start << std::log(i0), std::log(sorted[sorted.size() / 2]);

    fit::LmOptions options;
    options.scale_covariance = true;
    const auto lm = fit::levenberg_marquardt(residuals, start, n, options);
    SaturationFit out;
    out.i_sat = std::exp(lm.params(0));
    out.p_sat = std::exp(lm.params(1));
    out.sigma_i_sat = out.i_sat * std::sqrt(std::max(lm.covariance(0, 0), 0.0));
    out.sigma_p_sat = out.p_sat * std::sqrt(std::max(lm.covariance(1, 1), 0.0));
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    return out;
}

QuantumYield qy_from_saturation(double i_sat_per_s, double eta_coll, double f_rep_hz)
{
    require(i_sat_per_s > 0.0 && eta_coll > 0.0 && f_rep_hz > 0.0, "qy_inputs",
            "I_sat, collection efficiency and repetition rate must be > 0");
    const double eta = i_sat_per_s / (eta_coll * f_rep_hz);
    return {eta, eta > 1.0};
}

// --- photon correlations ---------------------------------------------------

void LevelScheme::validate() const
{
    require(pump_ueV >= 0.0 && gamma_total_ueV > 0.0 && k_shelve_ueV >= 0.0 && k_deshelve_ueV >= 0.0,
            "level_rates", "level-scheme rates must be >= 0 (gamma_total > 0)");
    require(background >= 0.0 && background < 1.0, "background_fraction", "background fraction must lie in [0, 1)");
    require(k_shelve_ueV == 0.0 || k_deshelve_ueV > 0.0, "dark_state_trap",
            "a shelving channel needs a nonzero deshelving rate");
}

namespace
{

// Basis order: ground, bright, dark. Rates in 1/ps.
Eigen::Matrix3d rate_matrix(const LevelScheme &s, bool with_pump)
{
    const double r = with_pump ? s.pump_ueV / units::hbar_ueV_ps : 0.0;
    const double g = s.gamma_total_ueV / units::hbar_ueV_ps;
    const double ks = s.k_shelve_ueV / units::hbar_ueV_ps;
    const double kd = s.k_deshelve_ueV / units::hbar_ueV_ps;
    Eigen::Matrix3d m;
    m << -r, g, kd, //
        r, -(g + ks), 0.0, //
        0.0, ks, -kd;
    return m;
}

// Modal form of the bright-state population after a detection (start in
// ground), divided by its stationary value.
struct CwCorrelation
{
    std::array<std::complex<double>, 3> rates{};
    std::array<std::complex<double>, 3> coefficients{};

    double operator()(double tau_ps) const
    {
        std::complex<double> acc = 0.0;
        for (int k = 0; k < 3; ++k)
            acc += coefficients[k] * std::exp(rates[k] * std::abs(tau_ps));
        return acc.real();
    }
};

CwCorrelation cw_correlation(const LevelScheme &scheme)
{
    scheme.validate();
    require(scheme.pump_ueV > 0.0, "pump_zero", "cw correlation needs a nonzero pump");
    const Eigen::Matrix3d m = rate_matrix(scheme, true);
    Eigen::EigenSolver<Eigen::Matrix3d> solver(m);
    const Eigen::Matrix3cd v = solver.eigenvectors();
    const Eigen::Vector3cd lambda = solver.eigenvalues();
    const Eigen::Vector3cd start = v.fullPivLu().solve(Eigen::Vector3cd(1.0, 0.0, 0.0));

    // stationary bright population from the kernel of m
    const double r = m(1, 0), g = m(0, 1), ks = scheme.k_shelve_ueV / units::hbar_ueV_ps, kd = m(0, 2);
    const double pg = 1.0, pe = r / (g + ks), pd = kd > 0.0 ? ks * pe / kd : 0.0;
    const double stationary = pe / (pg + pe + pd);

    CwCorrelation c;
    for (int k = 0; k < 3; ++k)
    {
        c.rates[k] = lambda(k);
        c.coefficients[k] = v(1, k) * start(k) / stationary;
    }
    return c;
}

double gaussian_convolved(const std::function<double(double)> &f, double t, double sigma)
{
    if (sigma <= 0.0)
        return f(t);
    constexpr int half = 240;
    const double h = 6.0 * sigma / half;
    double acc = 0.0, norm = 0.0;
    for (int k = -half; k <= half; ++k)
    {
        const double s = k * h;
        const double w = std::exp(-0.5 * s * s / (sigma * sigma)) * ((k == -half || k == half) ? 0.5 : 1.0);
        acc += w * f(t - s);
        norm += w;
    }
    return acc / norm;
}

double irf_convolved(const std::function<double(double)> &f, double t, const Irf &irf, double step_ps)
{
    if (const auto *g = std::get_if<GaussianIrf>(&irf))
        return gaussian_convolved(f, t, g->fwhm_ps * fwhm_to_sigma);
    const auto &tab = std::get<TabulatedIrf>(irf);
    const auto w = normalized_irf(tab);
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
        acc += w[k] * f(t - (tab.start_ps + step_ps * static_cast<double>(k)));
    return acc;
}

double with_background(double g_emitter, double background)
{
    const double signal = (1.0 - background) * (1.0 - background);
    return 1.0 + signal * (g_emitter - 1.0);
}

} // namespace

ThreeLevelModes three_level_modes(const LevelScheme &scheme)
{
    const CwCorrelation c = cw_correlation(scheme);
    // index of the stationary (zero) mode
    int zero = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(c.rates[k]) < std::abs(c.rates[zero]))
            zero = k;
    std::array<int, 2> idx{};
    int j = 0;
    for (int k = 0; k < 3; ++k)
        if (k != zero)
            idx[j++] = k;
    if (std::abs(c.rates[idx[0]].real()) < std::abs(c.rates[idx[1]].real()))
        std::swap(idx[0], idx[1]);

    ThreeLevelModes modes;
    modes.lambda1_per_ps = -c.rates[idx[0]].real();
    modes.lambda2_per_ps = -c.rates[idx[1]].real();
    modes.amplitude = c.coefficients[idx[1]].real();
    modes.real = std::abs(c.rates[idx[0]].imag()) < 1e-12 * std::abs(c.rates[idx[0]]) &&
                 std::abs(c.rates[idx[1]].imag()) < 1e-12 * std::abs(c.rates[idx[1]]);
    return modes;
}

double g2_cw_emitter(const LevelScheme &scheme, double tau_ps) { return cw_correlation(scheme)(tau_ps); }

std::vector<double> pulsed_peak_areas(const LevelScheme &scheme, const PulsedOptions &pulsed, int count)
{
    scheme.validate();
    require(pulsed.f_rep_hz > 0.0, "f_rep", "repetition rate must be > 0");
    require(pulsed.excitation_probability > 0.0 && pulsed.excitation_probability <= 1.0, "pulse_probability",
            "per-pulse excitation probability must lie in (0, 1]");
    require(count >= 1, "peak_count", "need at least one peak");

    const double period = 1e12 / pulsed.f_rep_hz;
    // Without shelving the dark state is unreachable; any deshelving rate keeps
    // the stationary problem nonsingular without changing the dynamics.
    LevelScheme chain = scheme;
    if (chain.k_shelve_ueV == 0.0)
        chain.k_deshelve_ueV = chain.gamma_total_ueV;
    const Eigen::Matrix3d m0 = rate_matrix(chain, false);
    Eigen::Matrix<double, 6, 6> block = Eigen::Matrix<double, 6, 6>::Zero();
    block.topLeftCorner<3, 3>() = m0 * period;
    block.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * period;
    const Eigen::Matrix<double, 6, 6> e = block.exp();
    const Eigen::Matrix3d propagate = e.topLeftCorner<3, 3>();
    const Eigen::Matrix3d integrated = e.topRightCorner<3, 3>();

    const double q = pulsed.excitation_probability;
    Eigen::Matrix3d pulse = Eigen::Matrix3d::Identity();
    pulse(0, 0) = 1.0 - q;
    pulse(1, 0) = q;

    const double gamma = scheme.gamma_total_ueV / units::hbar_ueV_ps;
    const auto emission = [&](const Eigen::Vector3d &before_pulse) {
        return gamma * (integrated * (pulse * before_pulse))(1);
    };

    // stationary state just before a pulse
    Eigen::Matrix3d a = propagate * pulse - Eigen::Matrix3d::Identity();
    a.row(2).setOnes();
    const Eigen::Vector3d stationary = a.fullPivLu().solve(Eigen::Vector3d(0.0, 0.0, 1.0));
    const double mean = emission(stationary);

    std::vector<double> areas(static_cast<std::size_t>(count), 0.0);
    Eigen::Vector3d state(1.0, 0.0, 0.0); // emitter in ground state after a detection
    for (int k = 1; k < count; ++k)
    {
        areas[static_cast<std::size_t>(k)] = emission(state) / mean;
        state = propagate * (pulse * state);
    }
    return areas;
}

G2Trace g2_correlation(const LevelScheme &scheme, Excitation mode, const TimeGrid &tau_grid, const Irf &irf,
                       const PulsedOptions &pulsed)
{
    scheme.validate();
    tau_grid.validate();
    require(std::abs(tau_grid.start_ps + tau_grid.back()) <= 1e-9 * tau_grid.step_ps * tau_grid.size,
            "tau_grid_not_symmetric", "correlation delay grid must be symmetric about 0");

    G2Trace out;
    out.tau_ps.resize(tau_grid.size);
    out.g2.resize(tau_grid.size);
    for (std::size_t i = 0; i < tau_grid.size; ++i)
        out.tau_ps[i] = tau_grid.at(i);

    std::function<double(double)> ideal;
    if (mode == Excitation::cw)
    {
        const CwCorrelation c = cw_correlation(scheme);
        ideal = [c, b = scheme.background](double tau) { return with_background(c(tau), b); };
    }
    else
    {
        const double period = 1e12 / pulsed.f_rep_hz;
        const int peaks = static_cast<int>(std::ceil(tau_grid.back() / period)) + 2;
        auto areas = pulsed_peak_areas(scheme, pulsed, peaks);
        for (double &area : areas)
            area = with_background(area, scheme.background);
        const double decay = (scheme.gamma_total_ueV + scheme.k_shelve_ueV) / units::hbar_ueV_ps;
        ideal = [areas, period, decay](double tau) {
            // nearest peaks only; each peak is the two-sided emission autocorrelation
            const int k = static_cast<int>(std::lround(tau / period));
            double acc = 0.0;
            for (int j = k - 1; j <= k + 1; ++j)
            {
                const auto idx = static_cast<std::size_t>(std::abs(j));
                if (idx >= areas.size())
                    continue;
                acc += areas[idx] * 0.5 * decay * std::exp(-decay * std::abs(tau - j * period));
            }
            return acc;
        };
    }

    for (std::size_t i = 0; i < tau_grid.size; ++i)
        out.g2[i] = irf_convolved(ideal, out.tau_ps[i], irf, tau_grid.step_ps);
    return out;
}

double g2_at_zero(const G2Trace &trace)
{
    require(trace.tau_ps.size() >= 2, "trace_small", "correlation trace is empty");
    for (std::size_t i = 0; i + 1 < trace.tau_ps.size(); ++i)
    {
        if (trace.tau_ps[i] <= 0.0 && trace.tau_ps[i + 1] >= 0.0)
        {
            const double t = -trace.tau_ps[i] / (trace.tau_ps[i + 1] - trace.tau_ps[i]);
            return trace.g2[i] * (1.0 - t) + trace.g2[i + 1] * t;
        }
    }
    throw ValidationError("tau_zero_missing", "correlation trace does not contain tau = 0");
}

double pulsed_g2_zero(const G2Trace &trace, double f_rep_hz)
{
    require(f_rep_hz > 0.0, "f_rep", "repetition rate must be > 0");
    const double period = 1e12 / f_rep_hz;
    const auto window_area = [&](double center) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < trace.tau_ps.size(); ++i)
        {
            const double mid = 0.5 * (trace.tau_ps[i] + trace.tau_ps[i + 1]);
            if (std::abs(mid - center) < 0.5 * period)
                acc += 0.5 * (trace.g2[i] + trace.g2[i + 1]) * (trace.tau_ps[i + 1] - trace.tau_ps[i]);
        }
        return acc;
    };
    const double lo = trace.tau_ps.front(), hi = trace.tau_ps.back();
    double side = 0.0;
    int n = 0;
    for (int k = 1;; ++k)
    {
        const double c = k * period;
        if (c + 0.5 * period > hi || -c - 0.5 * period < lo)
            break;
        side += window_area(c) + window_area(-c);
        n += 2;
    }
    require(n > 0, "no_side_peaks", "delay grid too short to hold a side peak");
    return window_area(0.0) / (side / n);
}

double background_for_raw_g2_zero(const LevelScheme &scheme, const Irf &irf, double raw_target)
{
    LevelScheme clean = scheme;
    clean.background = 0.0;
    const CwCorrelation c = cw_correlation(clean);
    const double g0 = irf_convolved([&](double t) { return c(t); }, 0.0, irf, 1.0);
    require(raw_target >= g0 && raw_target < 1.0, "raw_target_unreachable",
            "raw g2(0) target must lie in [" + std::to_string(g0) + ", 1)");
    return 1.0 - std::sqrt((1.0 - raw_target) / (1.0 - g0));
}

double deshelve_for_bunching_time(const LevelScheme &scheme, double target_ps)
{
    require(target_ps > 0.0, "bunching_time", "bunching time must be > 0");
    require(scheme.k_shelve_ueV > 0.0, "no_shelving", "bunching needs a shelving rate");
    const auto slow_time = [&](double kd) {
        LevelScheme s = scheme;
        s.k_deshelve_ueV = kd;
        return 1.0 / three_level_modes(s).lambda2_per_ps;
    };
    double lo = 1e-9 * scheme.gamma_total_ueV;
    double hi = 10.0 * (scheme.gamma_total_ueV + scheme.pump_ueV + scheme.k_shelve_ueV);
    require(slow_time(lo) > target_ps && slow_time(hi) < target_ps, "bunching_time_unreachable",
            "no deshelving rate yields the requested bunching time");
    std::uintmax_t iterations = 200;
    const auto root = boost::math::tools::toms748_solve([&](double kd) { return slow_time(kd) - target_ps; }, lo, hi,
                                                        boost::math::tools::eps_tolerance<double>(40), iterations);
    return 0.5 * (root.first + root.second);
}

LevelScheme tune_level_scheme(const LevelScheme &base, const Irf &irf, const G2Targets &t)
{
    require(t.deconvolved_g2_zero >= 0.0 && t.deconvolved_g2_zero < 1.0, "g2_target",
            "deconvolved g2(0) must lie in [0, 1)");
    require(t.raw_g2_zero >= t.deconvolved_g2_zero && t.raw_g2_zero < 1.0, "g2_target",
            "raw g2(0) must lie in [deconvolved g2(0), 1)");
    // g2(0) = b (2 - b) with an ideal emitter and ideal detector
    const double b = 1.0 - std::sqrt(1.0 - t.deconvolved_g2_zero);
    const double dip = 1.0 - (1.0 - t.raw_g2_zero) / ((1.0 - b) * (1.0 - b));

    const auto tuned = [&](double pump) {
        LevelScheme s = base;
        s.pump_ueV = pump;
        s.background = 0.0;
        s.k_deshelve_ueV = deshelve_for_bunching_time(s, t.bunching_time_ps);
        return s;
    };
    const auto residual = [&](double pump) {
        const CwCorrelation c = cw_correlation(tuned(pump));
        return irf_convolved([&](double x) { return c(x); }, 0.0, irf, 1.0) - dip;
    };
    const double lo = 1e-4 * base.gamma_total_ueV, hi = 10.0 * base.gamma_total_ueV;
    require(residual(lo) < 0.0 && residual(hi) > 0.0, "g2_target_unreachable",
            "no pump rate reproduces the requested raw g2(0) with this timing response");
    std::uintmax_t iterations = 200;
    const auto root = boost::math::tools::toms748_solve(residual, lo, hi,
                                                        boost::math::tools::eps_tolerance<double>(45), iterations);
    LevelScheme out = tuned(0.5 * (root.first + root.second));
    out.background = b;
    return out;
}

double bunching_decay_time(const G2Trace &trace, double lo_ps, double hi_ps)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < trace.tau_ps.size(); ++i)
    {
        const double t = std::abs(trace.tau_ps[i]);
        const double excess = trace.g2[i] - 1.0;
        if (t < lo_ps || t > hi_ps || excess <= 0.0)
            continue;
        const double y = std::log(excess);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
    }
    require(n >= 3, "no_bunching", "no bunching excess in the requested delay window");
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    require(slope < 0.0, "no_bunching_decay", "bunching excess does not decay in the requested window");
    return -1.0 / slope;
}

} // namespace pl
