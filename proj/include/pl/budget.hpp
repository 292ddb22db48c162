#ifndef PL_BUDGET_HPP
#define PL_BUDGET_HPP

#include <string>
#include <string_view>
#include <vector>

namespace pl
{

enum class OpticalPath
{
    free_space,
    cavity_planar,
    cavity_fiber
};

std::string_view to_string(OpticalPath p);
OpticalPath optical_path_from_string(std::string_view s);

enum class StageKind
{
    extraction, ///< emitter into the first lens or collecting fiber
    transmission,
    detector
};

std::string_view to_string(StageKind k);
StageKind stage_kind_from_string(std::string_view s);

// Where a stage value came from.
enum class Provenance
{
    fixture,
    user,
    computed
};

std::string_view to_string(Provenance p);

struct Stage
{
    std::string name;
    double efficiency = 1.0;
    StageKind kind = StageKind::transmission;
    Provenance provenance = Provenance::user;
};

struct EfficiencyChain
{
    OpticalPath path = OpticalPath::free_space;
    std::vector<Stage> stages;

    /// Nonempty, every efficiency in (0, 1].
    void validate() const;
    /// Product of the transmission and detector stages.
    double path_product() const;
    /// Product of the extraction stages (1 if there are none).
    double extraction() const;
    const Stage *find(std::string_view name) const;
};

/// Product of every stage: extraction times path and detector.
double chain_efficiency(const EfficiencyChain &chain);

/// Emitted photons (leaving the source) per detector count: 1 / path_product.
double photons_per_count(const EfficiencyChain &chain);

/// (exit_a * chain_efficiency(a)) / (exit_b * chain_efficiency(b)). Pass
/// exit = 1 when the chains already include the exit probability in their
/// extraction stage.
double detected_port_ratio(const EfficiencyChain &a, const EfficiencyChain &b, double exit_a = 1.0,
                           double exit_b = 1.0);

/// CCD count rate times photons into the fiber per CCD count.
double fiber_flux_from_ccd(double ccd_counts_per_s, double photons_per_ccd_count);

/// Flux into the fiber at `target_power_mW`, scaling a low-power detector
/// rate with the cw saturation law I(P) = I_sat P / (P + P_sat), converting
/// to the fiber port with the detected port ratio and dividing by the fiber
/// path product.
struct SaturationRoute
{
    double ccd_counts_per_s = 0.0;  ///< planar-port counts at `power_mW`
    double power_mW = 0.0;
    double target_power_mW = 0.0;
    double p_sat_mW = 0.0;
    double port_ratio = 0.0;        ///< fiber / planar detected ratio
    double fiber_path_product = 0.0;
};

double fiber_flux_via_saturation(const SaturationRoute &route);

/// Free-space over cavity-planar overall efficiency.
double collection_ratio_fs_over_cav(const EfficiencyChain &free_space, const EfficiencyChain &cavity_planar);

struct Calibration
{
    double efficiency = 0.0;
    bool out_of_range = false; ///< outside (0, 1]
};

/// Solves the stage `unknown` (present in exactly one chain; its current
/// value is ignored) so that detected_port_ratio(a, b, exit_a, exit_b)
/// equals `measured_ratio`.
Calibration calibrate_unknown_stage(const EfficiencyChain &a, const EfficiencyChain &b, double measured_ratio,
                                    std::string_view unknown, double exit_a = 1.0, double exit_b = 1.0);

} // namespace pl

#endif
