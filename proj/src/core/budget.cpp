#include "pl/budget.hpp"

#include "pl/error.hpp"

#include <cmath>

namespace pl
{

std::string_view to_string(OpticalPath p)
{
    switch (p)
    {
    case OpticalPath::free_space:
        return "free-space";
    case OpticalPath::cavity_planar:
        return "cavity-planar";
    case OpticalPath::cavity_fiber:
        return "cavity-fiber";
    }
    return "";
}

OpticalPath optical_path_from_string(std::string_view s)
{
    if (s == "free-space")
        return OpticalPath::free_space;
    if (s == "cavity-planar")
        return OpticalPath::cavity_planar;
    if (s == "cavity-fiber")
        return OpticalPath::cavity_fiber;
    throw ValidationError("unknown_path", "unknown optical path '" + std::string(s) + "'");
}

std::string_view to_string(StageKind k)
{
    switch (k)
    {
    case StageKind::extraction:
        return "extraction";
    case StageKind::transmission:
        return "transmission";
    case StageKind::detector:
        return "detector";
    }
    return "";
}

StageKind stage_kind_from_string(std::string_view s)
{
    if (s == "extraction")
        return StageKind::extraction;
    if (s == "transmission")
        return StageKind::transmission;
    if (s == "detector")
        return StageKind::detector;
    throw ValidationError("unknown_stage_kind", "unknown stage kind '" + std::string(s) + "'");
}

std::string_view to_string(Provenance p)
{
    switch (p)
    {
    case Provenance::fixture:
        return "fixture";
    case Provenance::user:
        return "user";
    case Provenance::computed:
        return "computed";
    }
    return "";
}

void EfficiencyChain::validate() const
{
    require(!stages.empty(), "empty_chain", "efficiency chain has no stages");
    for (const auto &s : stages)
        require(s.efficiency > 0.0 && s.efficiency <= 1.0 && std::isfinite(s.efficiency), "stage_efficiency",
                "stage '" + s.name + "' efficiency must lie in (0, 1]");
}

double EfficiencyChain::path_product() const
{
    validate();
    double p = 1.0;
    for (const auto &s : stages)
        if (s.kind != StageKind::extraction)
            p *= s.efficiency;
    return p;
}

double EfficiencyChain::extraction() const
{
    validate();
    double p = 1.0;
    for (const auto &s : stages)
        if (s.kind == StageKind::extraction)
            p *= s.efficiency;
    return p;
}

const Stage *EfficiencyChain::find(std::string_view name) const
{
    for (const auto &s : stages)
        if (s.name == name)
            return &s;
    return nullptr;
}

double chain_efficiency(const EfficiencyChain &chain) { return chain.extraction() * chain.path_product(); }

double photons_per_count(const EfficiencyChain &chain) { return 1.0 / chain.path_product(); }

double detected_port_ratio(const EfficiencyChain &a, const EfficiencyChain &b, double exit_a, double exit_b)
{
    require(exit_a > 0.0 && exit_b > 0.0, "exit_probability", "exit probabilities must be > 0");
    return exit_a * chain_efficiency(a) / (exit_b * chain_efficiency(b));
}

double fiber_flux_from_ccd(double ccd_counts_per_s, double photons_per_ccd_count)
{
    require(ccd_counts_per_s > 0.0 && photons_per_ccd_count > 0.0, "flux_inputs",
            "count rate and photons per count must be > 0");
    return ccd_counts_per_s * photons_per_ccd_count;
}

double fiber_flux_via_saturation(const SaturationRoute &r)
{
    require(r.ccd_counts_per_s > 0.0 && r.power_mW > 0.0 && r.target_power_mW > 0.0 && r.p_sat_mW > 0.0 && r.port_ratio > 0.0,
            "saturation_route", "count rate, powers and port ratio must be > 0");
    require(r.fiber_path_product > 0.0 && r.fiber_path_product <= 1.0, "stage_efficiency",
            "fiber path product must lie in (0, 1]");
    const auto law = [&](double p) { return p / (p + r.p_sat_mW); };
    const double saturated = r.ccd_counts_per_s * law(r.target_power_mW) / law(r.power_mW);
    return saturated * r.port_ratio / r.fiber_path_product;
}

double collection_ratio_fs_over_cav(const EfficiencyChain &free_space, const EfficiencyChain &cavity_planar)
{
    return chain_efficiency(free_space) / chain_efficiency(cavity_planar);
}

Calibration calibrate_unknown_stage(const EfficiencyChain &a, const EfficiencyChain &b, double measured_ratio,
                                    std::string_view unknown, double exit_a, double exit_b)
{
    require(measured_ratio > 0.0 && std::isfinite(measured_ratio), "measured_ratio", "measured ratio must be > 0");
    const bool in_a = a.find(unknown) != nullptr;
    const bool in_b = b.find(unknown) != nullptr;
    require(!(in_a && in_b), "unknown_in_both", "unknown stage '" + std::string(unknown) + "' appears in both chains");
    require(in_a || in_b, "unknown_missing", "unknown stage '" + std::string(unknown) + "' appears in neither chain");

    // Ratio with the unknown stage set to 1; the true ratio scales linearly in it.
    const auto without = [&](const EfficiencyChain &c) {
        EfficiencyChain copy = c;
        for (auto &s : copy.stages)
            if (s.name == unknown)
                s.efficiency = 1.0;
        return copy;
    };
    const double base = detected_port_ratio(without(a), without(b), exit_a, exit_b);
    const double eff = in_a ? measured_ratio / base : base / measured_ratio;
    return {eff, !(eff > 0.0 && eff <= 1.0)};
}

} // namespace pl
