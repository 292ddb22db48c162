#ifndef PL_UNITS_HPP
#define PL_UNITS_HPP

#include <cmath>
#include <numbers>

// Unit conventions used throughout the library:
//   energies and rates  : micro-electronvolt (ueV), a rate gamma means hbar/tau
//   times               : picoseconds (ps)
//   wavelengths         : nanometres (nm)
//   temperatures        : kelvin
namespace pl::units
{

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduced Planck constant in ueV * ps.
inline constexpr double hbar_ueV_ps = 658.2119569;

/// Boltzmann constant in ueV / K.
inline constexpr double boltzmann_ueV_per_K = 86.17333262;

/// h * c in ueV * nm, so that E[ueV] = hc / lambda[nm].
inline constexpr double hc_ueV_nm = 1.23984198e9;

inline constexpr double ppm = 1e-6;

inline double energy_from_wavelength(double wavelength_nm) { return hc_ueV_nm / wavelength_nm; }
inline double wavelength_from_energy(double energy_ueV) { return hc_ueV_nm / energy_ueV; }

inline double rate_from_lifetime(double tau_ps) { return hbar_ueV_ps / tau_ps; }
inline double lifetime_from_rate(double gamma_ueV) { return hbar_ueV_ps / gamma_ueV; }

/// Bose-Einstein occupation of a mode of energy `energy_ueV` at `temperature_K`.
/// Zero at T = 0; diverges as energy -> 0 for T > 0.
inline double bose_occupation(double energy_ueV, double temperature_K)
{
    if (temperature_K <= 0.0)
        return 0.0;
    return 1.0 / std::expm1(energy_ueV / (boltzmann_ueV_per_K * temperature_K));
}

} // namespace pl::units

#endif
