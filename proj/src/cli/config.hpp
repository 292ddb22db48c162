#ifndef PL_CLI_CONFIG_HPP
#define PL_CLI_CONFIG_HPP

#include "pl/io.hpp"
#include "pl/spectra.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace pl::cli
{

using nlohmann::json;

struct CavitySettings
{
    double wavelength_nm = 0.0;
    double refractive_index = 1.0;
    double radius_of_curvature_um = 10.0;
    int mode_order = 6;
    std::optional<double> q;     ///< measured Q of the selected mode order
    std::optional<double> kappa_ueV;
};

struct RunConfig
{
    json document;
    EmitterModel emitter;
    CavitySettings cavity;
    json analysis = json::object();
    std::optional<std::filesystem::path> input; ///< resolved against the config directory
    std::filesystem::path base_dir;
    std::uint64_t seed = 1;
    bool paper_fixture = false;
    std::filesystem::path fixture_dir;

    /// Options of one workflow, `analysis.<name>`, or an empty object.
    const json &section(const std::string &name) const;
    /// Path from the config resolved against its directory; must exist.
    std::filesystem::path resolve_input(const std::string &relative) const;
    /// Cavity linewidth: explicit kappa, else E0 / Q.
    double kappa_ueV() const;
};

/// Parses the JSON document; with `paper_fixture` the reference emitter,
/// cavity and fixture tables fill every field the document leaves out.
RunConfig load_config(const std::filesystem::path &path, bool paper_fixture);
RunConfig config_from_json(const json &document, const std::filesystem::path &base_dir, bool paper_fixture);

/// Typed lookups that raise ValidationError("config_type") on a wrong type.
double number_or(const json &j, const char *key, double fallback);
std::optional<double> number_opt(const json &j, const char *key);
std::string string_or(const json &j, const char *key, const std::string &fallback);
bool bool_or(const json &j, const char *key, bool fallback);
std::vector<double> numbers_or(const json &j, const char *key, const std::vector<double> &fallback);
std::vector<int> integers_or(const json &j, const char *key, const std::vector<int> &fallback);

} // namespace pl::cli

#endif
