#ifndef PL_DYNAMICS_HPP
#define PL_DYNAMICS_HPP

#include "pl/fit.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace pl
{

// Uniform time axis in ps.
struct TimeGrid
{
    double start_ps = 0.0;
    double step_ps = 1.0;
    std::size_t size = 0;

    double at(std::size_t i) const noexcept { return start_ps + step_ps * static_cast<double>(i); }
    double back() const noexcept { return at(size - 1); }
    void validate() const;

    /// Odd-sized grid symmetric about 0 with a point at tau = 0.
    static TimeGrid symmetric(double half_span_ps, double step_ps);
};

/// Gaussian timing jitter; FWHM 0 means an ideal detector.
struct GaussianIrf
{
    double fwhm_ps = 32.0;
};

/// Measured response sampled with the trace's bin width; the first sample
/// sits at time `start_ps` relative to the excitation. Normalized on use.
struct TabulatedIrf
{
    double start_ps = 0.0;
    std::vector<double> values;
};

using Irf = std::variant<GaussianIrf, TabulatedIrf>;

struct DecayTrace
{
    TimeGrid grid;
    std::vector<double> counts;
    Irf irf = GaussianIrf{};

    void validate() const;
};

struct BiexpComponents
{
    double a1 = 0.0;
    double tau1_ps = 0.0;
    double a2 = 0.0;
    double tau2_ps = 0.0;
};

/// Amplitudes and short lifetime of the free-space transient; the long
/// lifetime follows from the decay rate.
struct DecayWeights
{
    double a1 = 1.0;
    double tau1_ps = 23.0;
    double a2 = 1.0;
};

/// Expected counts per bin (bin centres) of the IRF-convolved biexponential.
std::vector<double> biexp_model(const BiexpComponents &c, const Irf &irf, const TimeGrid &grid);

/// Noiseless trace with tau2 = hbar / gamma_fs / decay_ratio (cavity
/// acceleration of the long component); decay_ratio = 1 is free space.
DecayTrace simulate_decay(double gamma_fs_ueV, double decay_ratio, const DecayWeights &weights, const Irf &irf,
                          const TimeGrid &grid);

/// Rescales the trace so its maximum equals `peak_counts`.
DecayTrace scaled_to_peak(const DecayTrace &trace, double peak_counts);

/// Replaces every bin by a Poisson draw with that mean.
DecayTrace with_poisson_noise(const DecayTrace &trace, std::uint64_t seed);

struct BiexpFit
{
    double tau1_ps = 0.0;
    double tau2_ps = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double sigma_tau1_ps = 0.0;
    double sigma_tau2_ps = 0.0;
    double sigma_a1 = 0.0;
    double sigma_a2 = 0.0;
    double long_weight = 0.0; ///< a2 tau2 / (a1 tau1 + a2 tau2)
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    bool monoexponential = false; ///< tau1 and tau2 within 5 %: collapsed to one component
};

/// Poisson-weighted least-squares fit of the IRF-convolved biexponential.
BiexpFit fit_biexponential(const DecayTrace &trace, const fit::LmOptions &options = {});

enum class Excitation
{
    cw,
    pulsed
};

/// cw: I_sat P / (P + P_sat); pulsed: I_sat (1 - exp(-P / P_sat)).
std::vector<double> saturation_curve(std::span<const double> powers, double i_sat, double p_sat, Excitation mode);

struct SaturationFit
{
    double i_sat = 0.0;
    double p_sat = 0.0;
    double sigma_i_sat = 0.0;
    double sigma_p_sat = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Relative-error weighted fit of the saturation model.
SaturationFit fit_saturation(std::span<const double> powers, std::span<const double> counts, Excitation mode);

struct QuantumYield
{
    double eta_qy = 0.0;
    bool unphysical = false; ///< eta_qy > 1
};

/// eta_QY = I_sat / (eta_coll f_rep) for pulsed saturation.
QuantumYield qy_from_saturation(double i_sat_per_s, double eta_coll, double f_rep_hz);

// Ground / bright / dark scheme driving photon correlations. Rates are in
// ueV (rate = hbar / time). Photons come from the bright -> ground decay; a
// fraction `background` of detected photons is uncorrelated.
struct LevelScheme
{
    double pump_ueV = 0.0;
    double gamma_total_ueV = 0.0;
    double k_shelve_ueV = 0.0;
    double k_deshelve_ueV = 0.0;
    double background = 0.0;

    void validate() const;
};

/// Eigen-rates (1/ps) and bunching amplitude of the cw emitter correlation
/// g2(t) = 1 - (1 + A) exp(-lambda1 |t|) + A exp(-lambda2 |t|).
struct ThreeLevelModes
{
    double lambda1_per_ps = 0.0; ///< antibunching (fast) rate
    double lambda2_per_ps = 0.0; ///< bunching (slow) rate
    double amplitude = 0.0;
    bool real = true; ///< false when the rate matrix has a complex pair
};

ThreeLevelModes three_level_modes(const LevelScheme &scheme);

/// Emitter-only cw correlation at delay tau (no background, ideal detector).
double g2_cw_emitter(const LevelScheme &scheme, double tau_ps);

struct PulsedOptions
{
    double f_rep_hz = 38.26e6;
    double excitation_probability = 0.5; ///< ground -> bright per pulse
};

struct G2Trace
{
    std::vector<double> tau_ps;
    std::vector<double> g2;
};

/// Second-order correlation on a tau grid symmetric about 0, including the
/// background fraction and the timing response. Pulsed mode returns a
/// histogram of peaks at multiples of 1/f_rep whose areas are the
/// normalized coincidence probabilities.
G2Trace g2_correlation(const LevelScheme &scheme, Excitation mode, const TimeGrid &tau_grid, const Irf &irf,
                       const PulsedOptions &pulsed = {});

/// Peak areas relative to uncorrelated pulses for k = 0..count-1 (pulsed
/// emitter model, no background); area 0 is 0 for a single emitter.
std::vector<double> pulsed_peak_areas(const LevelScheme &scheme, const PulsedOptions &pulsed, int count);

/// Area of the tau = 0 peak over the mean area of the side peaks, windows of
/// +-1/(2 f_rep).
double pulsed_g2_zero(const G2Trace &trace, double f_rep_hz);

/// Value at tau = 0 (linear interpolation).
double g2_at_zero(const G2Trace &trace);

/// Background fraction b making the IRF-convolved cw g2(0) equal `raw_target`.
double background_for_raw_g2_zero(const LevelScheme &scheme, const Irf &irf, double raw_target);

/// Deshelving rate giving the slow (bunching) eigen-time `target_ps`.
double deshelve_for_bunching_time(const LevelScheme &scheme, double target_ps);

/// Measured g2 features a cw level scheme is tuned to.
struct G2Targets
{
    double raw_g2_zero = 0.4;         ///< with background and timing response
    double deconvolved_g2_zero = 0.36; ///< background only
    double bunching_time_ps = 1e4;
};

/// Keeps gamma_total and k_shelve of `base`; solves the background from the
/// deconvolved dip, then pump and deshelving rate so that the
/// IRF-convolved emitter dip gives the raw value at the requested bunching
/// time.
LevelScheme tune_level_scheme(const LevelScheme &base, const Irf &irf, const G2Targets &targets);

/// Decay time of g2 - 1 from a log-linear fit over lo <= |tau| <= hi.
double bunching_decay_time(const G2Trace &trace, double lo_ps, double hi_ps);

} // namespace pl

#endif
