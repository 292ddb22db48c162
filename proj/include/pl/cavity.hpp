#ifndef PL_CAVITY_HPP
#define PL_CAVITY_HPP

#include <string>
#include <vector>

namespace pl
{

struct CavityGeometry
{
    double wavelength_nm = 0.0;
    double refractive_index = 1.0;
    double radius_of_curvature_um = 0.0;
    int mode_order = 1; ///< longitudinal order p, cavity length in units of lambda/2

    double length_um() const noexcept { return mode_order * wavelength_nm * 0.5e-3; }
    void validate() const;
};

struct LossChannel
{
    std::string name;
    double ppm = 0.0;          ///< loss per occurrence
    int per_round_trip = 1;    ///< occurrences per round trip
    bool useful = false;       ///< photons leaving through this channel can be collected

    double round_trip_ppm() const noexcept { return ppm * per_round_trip; }
};

class LossBudget
{
public:
    LossBudget() = default;
    explicit LossBudget(std::vector<LossChannel> channels);

    /// Flat-mirror and fiber-mirror transmissions (useful), intracavity
    /// scattering/absorption counted on both passes, spill-out, cladding.
    static LossBudget fabry_perot(double t_flat_ppm, double t_fiber_ppm, double internal_per_pass_ppm,
                                  double spillout_ppm, double cladding_ppm);

    const std::vector<LossChannel> &channels() const noexcept { return channels_; }
    double round_trip_ppm() const;
    double useful_round_trip_ppm() const;

private:
    std::vector<LossChannel> channels_;
};

struct CavityMode
{
    double resonance_energy_ueV = 0.0;
    double kappa_ueV = 0.0;
    double q_factor = 0.0;
    double finesse = 0.0;
    double v_eff_lambda3 = 0.0;
    std::vector<double> exit_probabilities;
};

/// Gaussian-beam mode volume (pi/4) w0^2 L with w0^2 = lambda/(pi n) sqrt(L (R - L)),
/// in units of (lambda/n)^3. Mirror penetration is ignored.
double mode_volume_gaussian(const CavityGeometry &geom);

struct FreeSpectralRange
{
    double nm = 0.0;
    double ueV = 0.0;
};

FreeSpectralRange fsr(const CavityGeometry &geom);

struct FinesseQ
{
    double finesse = 0.0;
    double q = 0.0;
};

/// F = 2 pi / L_rt and Q = F p.
FinesseQ q_from_losses(const LossBudget &budget, int mode_order);

/// Per-pass internal loss (ppm) explaining the gap between a measured and a
/// loss-free theoretical Q: half of 2 pi p (1/Q_meas - 1/Q_th).
double internal_loss_from_q(double q_measured, double q_theory, int mode_order);

struct ExitProbability
{
    std::string name;
    double probability = 0.0;
    bool useful = false;
};

/// Lossless partition P_i = L_i / L_rt over every channel; sums to 1.
std::vector<ExitProbability> exit_probabilities(const LossBudget &budget);

double q_eff(double q_cav, double q_em);
double kappa_from_q(double energy_ueV, double q);

/// Assembles a CavityMode from geometry and loss budget.
CavityMode make_cavity_mode(const CavityGeometry &geom, const LossBudget &budget);

} // namespace pl

#endif
