#ifndef PL_CQED_HPP
#define PL_CQED_HPP

#include "pl/spectrum.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pl
{

struct CouplingParams
{
    double g_ueV = 0.0;     ///< vacuum Rabi coupling
    double gamma_ueV = 0.0; ///< emitter total decay rate
    double kappa_ueV = 0.0; ///< cavity linewidth

    /// a = g^2 / gamma
    double a() const { return g_ueV * g_ueV / gamma_ueV; }
    void validate() const;
};

struct PurcellResult
{
    double f_p = 0.0;
    double flux_ratio_linear = 0.0;
    double flux_ratio_sat = 0.0;
    double decay_ratio = 0.0;
};

/// F_P = 3/(4 pi^2) (lambda/n)^3 / V_eff * Q_eff with V_eff given in lambda^3.
double purcell_factor(double wavelength_nm, double refractive_index, double v_eff_lambda3, double q_eff);

/// Cavity-vs-free-space flux ratios (linear and saturated) and decay-rate ratio.
PurcellResult brightening_ratios(double dw, double f_p, double eta_qy);

struct PurcellSolution
{
    double f_p = 0.0;
    double eta_qy = 0.0;
};

/// Inverts brightening_ratios from the saturated flux ratio and the decay ratio.
PurcellSolution solve_fp_and_qy(double flux_ratio_sat, double decay_ratio, double dw);

/// beta(w_cav) = (g^2 S_emi / gamma) / (1 + g^2 S_emi / gamma + g^2 S_abs / kappa),
/// evaluated pointwise on the grid of the cavity-convolved spectra. Values
/// are dimensionless (tag raw-counts).
Spectrum brightness_profile(const CouplingParams &coupling, const Spectrum &s_emi_tilde,
                            const std::optional<Spectrum> &s_abs_tilde = std::nullopt);

/// Scalar form of the brightness profile.
double brightness(const CouplingParams &coupling, double s_emi_tilde, double s_abs_tilde = 0.0);

struct SteadyState
{
    double exciton_population = 0.0;
    double photon_number = 0.0;
    bool weak_pump_violated = false; ///< either population exceeds 0.1
};

inline constexpr double weak_pump_threshold = 0.1;

/// Stationary solution of the incoherently pumped emitter/cavity rate
/// equations (photon loss at kappa).
SteadyState steady_state(double pump_rate, const CouplingParams &coupling, double s_emi_tilde_at,
                         double s_abs_tilde_at = 0.0);

/// Output spectrum at fixed cavity energy: kappa <n> times a unit-area
/// (on the grid) Lorentzian of FWHM kappa centred at w_cav. Its integral is
/// the emitted photon flux kappa <n> = pump * beta(w_cav).
Spectrum emitted_spectrum(double omega_cav, const CouplingParams &coupling, const Spectrum &s_emi_tilde,
                          double pump_rate, const EnergyGrid &grid,
                          const std::optional<Spectrum> &s_abs_tilde = std::nullopt);

/// E_mod = L_kappa * beta (up to the constant c).
Spectrum modulation_envelope(const Spectrum &beta, double kappa);

/// c a S / (1 + a S) evaluated pointwise; the closed-form envelope model in
/// terms of the doubly convolved spectrum S.
Spectrum hill_envelope(const Spectrum &s_double_tilde, double a, double c);

/// S = E / (a c - a E), pointwise. Rejects (naming the energy) if the
/// denominator is not strictly positive anywhere.
Spectrum invert_envelope(const Spectrum &e_mod, double a, double c);

/// Standard deviation of the difference of two profiles after each is
/// normalized to unit sum over the grid.
double profile_residual_std_unit_sum(const Spectrum &lhs, const Spectrum &rhs);
/// Same, with each profile normalized to a peak value of 1.
double profile_residual_std_unit_peak(const Spectrum &lhs, const Spectrum &rhs);

struct EnvelopeFit
{
    double g_ueV = 0.0;
    double a = 0.0;
    double c = 0.0;
    double residual = 0.0; ///< sum of squared residuals of the normalized profiles
    int iterations = 0;
    bool converged = true;
    bool below_noise_floor = false; ///< optimum sits on the lower bracket edge or no signal
};

struct EnvelopeFitOptions
{
    double relative_tolerance = 1e-6;
    int max_iterations = 200;
    /// Search range for a * max(S) (dimensionless saturation parameter).
    double min_saturation = 1e-4;
    double max_saturation = 1e4;
};

/// Least-squares fit of c a S / (1 + a S) to the measured envelope, with
/// S = s_fs convolved twice with L_kappa; c is solved in closed form for
/// every trial a = g^2/gamma. Reabsorption is neglected.
EnvelopeFit fit_g_from_envelope(const Spectrum &e_mod_measured, const Spectrum &s_fs, double kappa, double gamma,
                                const EnvelopeFitOptions &options = {});

/// Same fit against an already doubly convolved spectrum.
EnvelopeFit fit_g_from_envelope_double_tilde(const Spectrum &e_mod_measured, const Spectrum &s_double_tilde,
                                             double gamma, const EnvelopeFitOptions &options = {});

/// g = sqrt(gamma* dgamma / DW) / 2, the lifetime-based estimate that
/// attributes the whole ZPL width to pure dephasing.
double g_from_lifetime(double gamma_star, double delta_gamma, double dw);

struct LineThroughOrigin
{
    double slope = 0.0;
    double r_squared = 0.0;
};

/// Least-squares y = slope * x with the centered coefficient of determination.
LineThroughOrigin fit_line_through_origin(const std::vector<double> &x, const std::vector<double> &y);

} // namespace pl

#endif
