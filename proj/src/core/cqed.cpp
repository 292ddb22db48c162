#include "pl/cqed.hpp"

#include "pl/error.hpp"
#include "pl/spectra.hpp"
#include "pl/units.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pl
{

void CouplingParams::validate() const
{
    require(g_ueV >= 0.0 && std::isfinite(g_ueV), "coupling_g", "coupling g must be >= 0");
    require(gamma_ueV > 0.0, "coupling_gamma", "emitter decay rate gamma must be > 0");
    require(kappa_ueV > 0.0, "coupling_kappa", "cavity linewidth kappa must be > 0");
}

double purcell_factor(double wavelength_nm, double refractive_index, double v_eff_lambda3, double q_eff)
{
    require(wavelength_nm > 0.0 && refractive_index > 0.0 && v_eff_lambda3 > 0.0 && q_eff > 0.0,
            "purcell_inputs", "wavelength, index, mode volume and Q_eff must be > 0");
    // V_eff / (lambda/n)^3 = V_eff[lambda^3] * n^3
    const double n3 = refractive_index * refractive_index * refractive_index;
    const double v_reduced = v_eff_lambda3 * n3;
    return 3.0 / (4.0 * units::pi * units::pi) / v_reduced * q_eff;
}

PurcellResult brightening_ratios(double dw, double f_p, double eta_qy)
{
    require(dw > 0.0 && dw <= 1.0, "dw_out_of_range", "Debye-Waller factor must lie in (0, 1]");
    require(f_p >= 0.0, "purcell_negative", "Purcell factor must be >= 0");
    require(eta_qy >= 0.0 && eta_qy <= 1.0, "qy_out_of_range", "quantum yield must lie in [0, 1]");
    const double enhancement = dw * f_p;
    PurcellResult r;
    r.f_p = f_p;
    r.flux_ratio_sat = enhancement;
    r.decay_ratio = 1.0 + eta_qy * enhancement;
    r.flux_ratio_linear = enhancement / r.decay_ratio;
    return r;
}

PurcellSolution solve_fp_and_qy(double flux_ratio_sat, double decay_ratio, double dw)
{
    require(flux_ratio_sat > 0.0, "flux_ratio_not_positive", "saturated flux ratio must be > 0");
    require(dw > 0.0 && dw <= 1.0, "dw_out_of_range", "Debye-Waller factor must lie in (0, 1]");
    if (decay_ratio < 1.0)
        throw ValidationError("decay_ratio_below_one",
                              "decay ratio " + std::to_string(decay_ratio) + " < 1: the cavity cannot slow the decay");
    const double f_p = flux_ratio_sat / dw;
    return {f_p, (decay_ratio - 1.0) / flux_ratio_sat};
}

double brightness(const CouplingParams &c, double s_emi, double s_abs)
{
    const double g2 = c.g_ueV * c.g_ueV;
    const double emission = g2 * s_emi / c.gamma_ueV;
    return emission / (1.0 + emission + g2 * s_abs / c.kappa_ueV);
}

Spectrum brightness_profile(const CouplingParams &coupling, const Spectrum &s_emi_tilde,
                            const std::optional<Spectrum> &s_abs_tilde)
{
    coupling.validate();
    if (s_abs_tilde)
        require(s_abs_tilde->grid().same_as(s_emi_tilde.grid()), "grid_mismatch",
                "emission and absorption spectra must share one grid");
    std::vector<double> beta(s_emi_tilde.size());
    for (std::size_t i = 0; i < beta.size(); ++i)
        beta[i] = brightness(coupling, s_emi_tilde[i], s_abs_tilde ? (*s_abs_tilde)[i] : 0.0);
    return Spectrum(s_emi_tilde.grid(), std::move(beta), Normalization::raw_counts);
}

SteadyState steady_state(double pump_rate, const CouplingParams &coupling, double s_emi, double s_abs)
{
    coupling.validate();
    require(pump_rate >= 0.0, "pump_negative", "pump rate must be >= 0");
    require(s_emi >= 0.0 && s_abs >= 0.0, "spectral_density_negative", "spectral densities must be >= 0");
    const double g2 = coupling.g_ueV * coupling.g_ueV;
    // [ gamma + g2 Se   -g2 Sa      ] [x]   [p]
    // [ -g2 Se          kappa + g2 Sa] [n] = [0]
    // The determinant is expanded so that the g^4 Se Sa terms cancel exactly.
    const double emission = g2 * s_emi;
    const double absorption = g2 * s_abs;
    const double det = coupling.gamma_ueV * coupling.kappa_ueV + coupling.gamma_ueV * absorption +
                       coupling.kappa_ueV * emission;
    SteadyState ss;
    ss.exciton_population = pump_rate * (coupling.kappa_ueV + absorption) / det;
    ss.photon_number = pump_rate * emission / det;
    ss.weak_pump_violated = ss.exciton_population > weak_pump_threshold || ss.photon_number > weak_pump_threshold;
    return ss;
}

Spectrum emitted_spectrum(double omega_cav, const CouplingParams &coupling, const Spectrum &s_emi_tilde,
                          double pump_rate, const EnergyGrid &grid, const std::optional<Spectrum> &s_abs_tilde)
{
    const double s_abs = s_abs_tilde ? s_abs_tilde->at(omega_cav) : 0.0;
    const SteadyState ss = steady_state(pump_rate, coupling, s_emi_tilde.at(omega_cav), s_abs);
    const double flux = coupling.kappa_ueV * ss.photon_number;
    return Spectrum(grid, sampled_lorentzian(grid, omega_cav, coupling.kappa_ueV, flux), Normalization::raw_counts);
}

Spectrum modulation_envelope(const Spectrum &beta, double kappa) { return convolve_lorentzian(beta, kappa); }

Spectrum hill_envelope(const Spectrum &s_double_tilde, double a, double c)
{
    require(a >= 0.0 && c > 0.0, "hill_inputs", "a must be >= 0 and c > 0");
    std::vector<double> out(s_double_tilde.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double as = a * s_double_tilde[i];
        out[i] = c * as / (1.0 + as);
    }
    return Spectrum(s_double_tilde.grid(), std::move(out), Normalization::raw_counts);
}

Spectrum invert_envelope(const Spectrum &e_mod, double a, double c)
{
    require(a > 0.0 && c > 0.0, "inversion_inputs", "a and c must be > 0");
    std::vector<double> out(e_mod.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double denominator = a * c - a * e_mod[i];
        if (!(denominator > 0.0))
        {
            std::ostringstream msg;
            msg.precision(10);
            msg << "inversion denominator a*c - a*E_mod is not positive at energy " << e_mod.energy(i)
                << " ueV (E_mod = " << e_mod[i] << ", c = " << c << ")";
            throw ValidationError("inversion_denominator", msg.str());
        }
        out[i] = e_mod[i] / denominator;
    }
    return Spectrum(e_mod.grid(), std::move(out), Normalization::raw_counts);
}

namespace
{

double residual_std(const Spectrum &lhs, const Spectrum &rhs, double lhs_scale, double rhs_scale)
{
    require(lhs.grid().same_as(rhs.grid()), "grid_mismatch", "profiles must share one grid");
    const std::size_t n = lhs.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = lhs[i] / lhs_scale - rhs[i] / rhs_scale;
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : d)
        var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(n));
}

double sum_of(const Spectrum &s) { return std::accumulate(s.values().begin(), s.values().end(), 0.0); }

} // namespace

double profile_residual_std_unit_sum(const Spectrum &lhs, const Spectrum &rhs)
{
    return residual_std(lhs, rhs, sum_of(lhs), sum_of(rhs));
}

double profile_residual_std_unit_peak(const Spectrum &lhs, const Spectrum &rhs)
{
    return residual_std(lhs, rhs, lhs.peak(), rhs.peak());
}

EnvelopeFit fit_g_from_envelope(const Spectrum &e_mod_measured, const Spectrum &s_fs, double kappa, double gamma,
                                const EnvelopeFitOptions &options)
{
    const Spectrum s_double = convolve_lorentzian(convolve_lorentzian(s_fs, kappa), kappa);
    return fit_g_from_envelope_double_tilde(e_mod_measured, s_double, gamma, options);
}

EnvelopeFit fit_g_from_envelope_double_tilde(const Spectrum &e_mod_measured, const Spectrum &s_double, double gamma,
                                             const EnvelopeFitOptions &options)
{
    require(gamma > 0.0, "coupling_gamma", "emitter decay rate gamma must be > 0");
    require(options.min_saturation > 0.0 && options.max_saturation > options.min_saturation, "fit_bracket",
            "invalid saturation search range");

    // Measured envelope on the spectrum grid, restricted to where it was measured.
    std::vector<double> s, e;
    const bool same = e_mod_measured.grid().same_as(s_double.grid());
    for (std::size_t i = 0; i < s_double.size(); ++i)
    {
        const double energy = s_double.energy(i);
        if (!same && !e_mod_measured.grid().contains(energy))
            continue;
        s.push_back(s_double[i]);
        e.push_back(same ? e_mod_measured[i] : e_mod_measured.at(energy));
    }
    require(s.size() >= 3, "grid_incompatible", "measured envelope does not overlap the spectrum grid");

    const double s_max = *std::max_element(s.begin(), s.end());
    require(s_max > 0.0, "zero_spectrum", "free-space spectrum is zero on the envelope grid");
    const double e_max = *std::max_element(e.begin(), e.end());

    EnvelopeFit fit;
    if (!(e_max > 0.0))
    {
        fit.below_noise_floor = true;
        return fit;
    }
    for (double &x : e)
        x /= e_max;

    // For fixed a the model is linear in c, so c is profiled out in closed form.
    const auto best_c = [&](double a) {
        double ef = 0.0, ff = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            const double as = a * s[i];
            const double f = as / (1.0 + as);
            ef += e[i] * f;
            ff += f * f;
        }
        return ff > 0.0 ? ef / ff : 0.0;
    };
    const auto sse = [&](double log_a) {
        const double a = std::exp(log_a);
        const double c = best_c(a);
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            const double as = a * s[i];
            const double r = e[i] - c * as / (1.0 + as);
            acc += r * r;
        }
        return acc;
    };

    // Coarse log scan to bracket the global minimum, then Brent refinement.
    const double lo = std::log(options.min_saturation / s_max);
    const double hi = std::log(options.max_saturation / s_max);
    constexpr int scan = 81;
    std::vector<double> grid_x(scan), grid_f(scan);
    for (int k = 0; k < scan; ++k)
    {
        grid_x[k] = lo + (hi - lo) * k / (scan - 1);
        grid_f[k] = sse(grid_x[k]);
    }
    const int best = static_cast<int>(std::distance(grid_f.begin(), std::min_element(grid_f.begin(), grid_f.end())));
    const double bracket_lo = grid_x[std::max(best - 1, 0)];
    const double bracket_hi = grid_x[std::min(best + 1, scan - 1)];

    const int bits = std::max(8, static_cast<int>(std::ceil(-std::log2(options.relative_tolerance))) + 4);
    std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_iterations);
    const auto result = boost::math::tools::brent_find_minima(sse, bracket_lo, bracket_hi, bits, iterations);

    fit.a = std::exp(result.first);
    fit.g_ueV = std::sqrt(fit.a * gamma);
    fit.residual = result.second;
    fit.iterations = static_cast<int>(iterations);
    fit.converged = iterations < static_cast<std::uintmax_t>(options.max_iterations);
    fit.below_noise_floor = best == 0 && result.first <= lo + 1e-6 * std::abs(lo);
    fit.c = e_max * best_c(fit.a);
    return fit;
}

double g_from_lifetime(double gamma_star, double delta_gamma, double dw)
{
    require(gamma_star > 0.0 && delta_gamma > 0.0, "lifetime_g_inputs", "gamma* and delta gamma must be > 0");
    require(dw > 0.0 && dw <= 1.0, "dw_out_of_range", "Debye-Waller factor must lie in (0, 1]");
    return 0.5 * std::sqrt(gamma_star * delta_gamma / dw);
}

LineThroughOrigin fit_line_through_origin(const std::vector<double> &x, const std::vector<double> &y)
{
    require(x.size() == y.size() && x.size() >= 2, "regression_inputs", "need at least two (x, y) pairs");
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    require(sxx > 0.0, "regression_degenerate", "all x values are zero");
    LineThroughOrigin fit;
    fit.slope = sxy / sxx;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        ss_res += (y[i] - fit.slope * x[i]) * (y[i] - fit.slope * x[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace pl
