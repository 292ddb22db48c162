#include "pl/cavity.hpp"

#include "pl/error.hpp"
#include "pl/units.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace pl
{

void CavityGeometry::validate() const
{
    require(wavelength_nm > 0.0, "wavelength_not_positive", "wavelength must be > 0");
    require(refractive_index > 0.0, "index_not_positive", "refractive index must be > 0");
    require(radius_of_curvature_um > 0.0, "radius_not_positive", "radius of curvature must be > 0");
    require(mode_order >= 1, "mode_order", "mode order p must be >= 1");
    if (length_um() >= radius_of_curvature_um)
        throw ValidationError("unstable_cavity", "cavity length " + std::to_string(length_um()) +
                                                     " um is not below the radius of curvature " +
                                                     std::to_string(radius_of_curvature_um) + " um");
}

LossBudget::LossBudget(std::vector<LossChannel> channels) : channels_(std::move(channels))
{
    for (const auto &c : channels_)
    {
        require(c.ppm >= 0.0 && std::isfinite(c.ppm), "negative_loss", "loss channel '" + c.name + "' must be >= 0");
        require(c.per_round_trip >= 1, "loss_multiplicity", "loss channel '" + c.name + "' must occur at least once");
    }
}

LossBudget LossBudget::fabry_perot(double t_flat_ppm, double t_fiber_ppm, double internal_per_pass_ppm,
                                   double spillout_ppm, double cladding_ppm)
{
    return LossBudget({
        {"t_flat", t_flat_ppm, 1, true},
        {"t_fiber", t_fiber_ppm, 1, true},
        {"internal", internal_per_pass_ppm, 2, false},
        {"spillout", spillout_ppm, 1, false},
        {"cladding", cladding_ppm, 1, false},
    });
}

double LossBudget::round_trip_ppm() const
{
    return std::accumulate(channels_.begin(), channels_.end(), 0.0,
                           [](double acc, const LossChannel &c) { return acc + c.round_trip_ppm(); });
}

double LossBudget::useful_round_trip_ppm() const
{
    double sum = 0.0;
    for (const auto &c : channels_)
        if (c.useful)
            sum += c.round_trip_ppm();
    return sum;
}

double mode_volume_gaussian(const CavityGeometry &geom)
{
    geom.validate();
    const double lambda_um = geom.wavelength_nm * 1e-3;
    const double length = geom.length_um();
    const double r = geom.radius_of_curvature_um;
    const double waist_sq = lambda_um / (units::pi * geom.refractive_index) * std::sqrt(length * (r - length));
    const double volume_um3 = 0.25 * units::pi * waist_sq * length;
    const double unit = lambda_um / geom.refractive_index;
    return volume_um3 / (unit * unit * unit);
}

FreeSpectralRange fsr(const CavityGeometry &geom)
{
    geom.validate();
    const double length_nm = geom.length_um() * 1e3;
    const double optical = 2.0 * geom.refractive_index * length_nm;
    return {geom.wavelength_nm * geom.wavelength_nm / optical, units::hc_ueV_nm / optical};
}

FinesseQ q_from_losses(const LossBudget &budget, int mode_order)
{
    require(mode_order >= 1, "mode_order", "mode order p must be >= 1");
    const double loss = budget.round_trip_ppm() * units::ppm;
    require(loss > 0.0, "zero_loss", "total round-trip loss must be > 0");
    const double finesse = units::two_pi / loss;
    return {finesse, finesse * mode_order};
}

double internal_loss_from_q(double q_measured, double q_theory, int mode_order)
{
    require(q_measured > 0.0 && q_theory > 0.0, "q_not_positive", "quality factors must be > 0");
    require(mode_order >= 1, "mode_order", "mode order p must be >= 1");
    if (q_measured >= q_theory)
        throw ValidationError("no_internal_loss", "measured Q " + std::to_string(q_measured) +
                                                      " is not below theoretical Q " + std::to_string(q_theory));
    const double excess_round_trip = units::two_pi * mode_order * (1.0 / q_measured - 1.0 / q_theory);
    return 0.5 * excess_round_trip / units::ppm;
}

std::vector<ExitProbability> exit_probabilities(const LossBudget &budget)
{
    const double total = budget.round_trip_ppm();
    require(total > 0.0, "zero_loss", "total round-trip loss must be > 0");
    std::vector<ExitProbability> out;
    out.reserve(budget.channels().size());
    for (const auto &c : budget.channels())
        out.push_back({c.name, c.round_trip_ppm() / total, c.useful});
    return out;
}

double q_eff(double q_cav, double q_em)
{
    require(q_cav > 0.0 && q_em > 0.0, "q_not_positive", "quality factors must be > 0");
    if (std::isinf(q_em))
        return q_cav;
    if (std::isinf(q_cav))
        return q_em;
    return 1.0 / (1.0 / q_cav + 1.0 / q_em);
}

double kappa_from_q(double energy_ueV, double q)
{
    require(energy_ueV > 0.0 && q > 0.0, "kappa_inputs", "energy and Q must be > 0");
    return energy_ueV / q;
}

CavityMode make_cavity_mode(const CavityGeometry &geom, const LossBudget &budget)
{
    geom.validate();
    const auto fq = q_from_losses(budget, geom.mode_order);
    CavityMode mode;
    mode.resonance_energy_ueV = units::energy_from_wavelength(geom.wavelength_nm);
    mode.q_factor = fq.q;
    mode.finesse = fq.finesse;
    mode.kappa_ueV = kappa_from_q(mode.resonance_energy_ueV, fq.q);
    mode.v_eff_lambda3 = mode_volume_gaussian(geom);
    for (const auto &p : exit_probabilities(budget))
        mode.exit_probabilities.push_back(p.probability);
    return mode;
}

} // namespace pl
