#ifndef PL_SPECTRA_HPP
#define PL_SPECTRA_HPP

#include "pl/spectrum.hpp"

namespace pl
{

// Ohmic-with-cutoff spectral density J(w) = (w / cutoff)^exponent * exp(-w / cutoff)
// of the 1D acoustic phonon bath that shapes the one-phonon wings.
struct SidebandShape
{
    double exponent = 1.0;
    double cutoff_ueV = 1000.0;
};

struct EmitterModel
{
    double zpl_energy_ueV = 0.0;
    double zpl_fwhm_ueV = 0.0; ///< gamma*: pure dephasing and fast spectral diffusion, lumped
    double debye_waller = 1.0;
    SidebandShape sideband;
    double temperature_K = 0.0;
    double gamma_fs_ueV = 0.0; ///< total free-space decay rate, hbar / tau_fs
    double eta_qy = 0.0;

    /// Throws ValidationError on any violated field constraint.
    void validate() const;

    double sideband_weight() const noexcept { return 1.0 - debye_waller; }
    double gamma_radiative() const noexcept { return eta_qy * gamma_fs_ueV; }
    double gamma_nonradiative() const noexcept { return gamma_fs_ueV - gamma_radiative(); }
    /// Emitter quality factor E0 / gamma*.
    double q_emitter() const noexcept { return zpl_energy_ueV / zpl_fwhm_ueV; }

    /// 1275 nm emitter: gamma* = 200 ueV, DW = 0.65, tau = 256 ps, eta = 1 %, T = 4 K.
    static EmitterModel paper_default();
};

// Whether grid energies are absolute photon energies or detunings from the ZPL.
enum class EnergyAxis
{
    detuning,
    absolute
};

/// Center of the ZPL on the given axis.
double zpl_center(const EmitterModel &model, EnergyAxis axis);

/// Free-space spectrum: Lorentzian ZPL of FWHM gamma* carrying DW of the
/// area plus one-phonon wings carrying 1 - DW. Red wing (detuning < 0) is
/// J(|d|) (n_B + 1), blue wing is J(d) n_B. Tagged area-2pi.
Spectrum build_fs_spectrum(const EmitterModel &model, const EnergyGrid &grid,
                           EnergyAxis axis = EnergyAxis::detuning);

/// The phonon-wing part of build_fs_spectrum alone, integrating to
/// 2 pi (1 - DW). All zeros (raw-counts) when DW = 1.
Spectrum sideband_component(const EmitterModel &model, const EnergyGrid &grid,
                            EnergyAxis axis = EnergyAxis::detuning);

/// Lorentzian of the given FWHM centered at `center`, sampled on `grid` and
/// normalized to `area` on the grid.
std::vector<double> sampled_lorentzian(const EnergyGrid &grid, double center, double fwhm, double area);

enum class DebyeWallerMethod
{
    /// (integral over center +- window) / (total integral)
    window_integral,
    /// Lorentzian ZPL plus piecewise-cubic wing fitted inside the window;
    /// DW = on-grid area of the fitted ZPL / total integral. Removes both
    /// the ZPL tail leaking out of the window and the wing leaking in.
    zpl_fit
};

struct DebyeWallerResult
{
    double debye_waller = 0.0;
    double zpl_fwhm = 0.0; ///< measured at half maximum (window_integral) or fitted (zpl_fit)
};

DebyeWallerResult debye_waller(const Spectrum &s, double zpl_window, double zpl_center = 0.0,
                               DebyeWallerMethod method = DebyeWallerMethod::window_integral);

/// Discrete convolution with a unit-area Lorentzian of FWHM kappa. The kernel
/// is integrated over each grid cell and, for every input point, renormalized
/// over the part that lands on the grid, so total area is conserved exactly.
Spectrum convolve_lorentzian(const Spectrum &s, double kappa);

/// Peak of the cavity-convolved ZPL: 4 DW / (gamma* + kappa).
double s_tilde_max(double dw, double gamma_star, double kappa);

/// Absorption counterpart of an emission spectrum: mirror image about the ZPL,
/// which swaps the (n_B + 1) and n_B wing weights. Area is preserved.
Spectrum absorption_spectrum(const Spectrum &s_emi, const EmitterModel &model,
                             EnergyAxis axis = EnergyAxis::detuning);

} // namespace pl

#endif
