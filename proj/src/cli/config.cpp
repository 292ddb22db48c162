#include "config.hpp"

#include "pl/error.hpp"
#include "pl/units.hpp"

#include <cmath>

namespace pl::cli
{

namespace fs = std::filesystem;

namespace
{

[[noreturn]] void wrong_type(const char *key, const char *expected)
{
    throw ValidationError("config_type", std::string("config key '") + key + "' must be " + expected);
}

const json &object_or_empty(const json &j, const char *key)
{
    static const json empty = json::object();
    if (!j.is_object() || !j.contains(key))
        return empty;
    const json &v = j.at(key);
    if (!v.is_object())
        wrong_type(key, "an object");
    return v;
}

} // namespace

std::optional<double> number_opt(const json &j, const char *key)
{
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    const json &v = j.at(key);
    if (!v.is_number())
        wrong_type(key, "a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        wrong_type(key, "a finite number");
    return x;
}

double number_or(const json &j, const char *key, double fallback) { return number_opt(j, key).value_or(fallback); }

std::string string_or(const json &j, const char *key, const std::string &fallback)
{
    if (!j.is_object() || !j.contains(key))
        return fallback;
    if (!j.at(key).is_string())
        wrong_type(key, "a string");
    return j.at(key).get<std::string>();
}

bool bool_or(const json &j, const char *key, bool fallback)
{
    if (!j.is_object() || !j.contains(key))
        return fallback;
    if (!j.at(key).is_boolean())
        wrong_type(key, "true or false");
    return j.at(key).get<bool>();
}

std::vector<double> numbers_or(const json &j, const char *key, const std::vector<double> &fallback)
{
    if (!j.is_object() || !j.contains(key))
        return fallback;
    const json &v = j.at(key);
    if (!v.is_array())
        wrong_type(key, "an array of numbers");
    std::vector<double> out;
    for (const auto &x : v)
    {
        if (!x.is_number())
            wrong_type(key, "an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<int> integers_or(const json &j, const char *key, const std::vector<int> &fallback)
{
    if (!j.is_object() || !j.contains(key))
        return fallback;
    const json &v = j.at(key);
    if (!v.is_array())
        wrong_type(key, "an array of integers");
    std::vector<int> out;
    for (const auto &x : v)
    {
        if (!x.is_number_integer())
            wrong_type(key, "an array of integers");
        out.push_back(x.get<int>());
    }
    return out;
}

const json &RunConfig::section(const std::string &name) const { return object_or_empty(analysis, name.c_str()); }

fs::path RunConfig::resolve_input(const std::string &relative) const
{
    fs::path p(relative);
    if (p.is_relative())
        p = base_dir / p;
    if (!fs::exists(p))
        throw IoError("file_not_found", "referenced file '" + p.string() + "' does not exist");
    return p;
}

double RunConfig::kappa_ueV() const
{
    if (cavity.kappa_ueV)
        return *cavity.kappa_ueV;
    require(cavity.q.has_value(), "cavity_q_missing", "config needs cavity.q or cavity.kappa_ueV");
    return units::energy_from_wavelength(cavity.wavelength_nm) / *cavity.q;
}

RunConfig config_from_json(const json &doc, const fs::path &base_dir, bool paper_fixture)
{
    if (!doc.is_object())
        throw ValidationError("config_not_object", "config must be a JSON object");

    RunConfig cfg;
    cfg.document = doc;
    cfg.base_dir = base_dir;
    cfg.paper_fixture = paper_fixture;
    cfg.fixture_dir = io::fixture_dir();

    const EmitterModel defaults = EmitterModel::paper_default();
    const json &e = object_or_empty(doc, "emitter");
    const auto need = [&](const json &j, const char *section, const char *key, double fallback) {
        if (const auto v = number_opt(j, key))
            return *v;
        if (!paper_fixture)
            throw ValidationError("config_missing", std::string("config key '") + section + "." + key +
                                                        "' is required without --fixture paper");
        return fallback;
    };

    EmitterModel m;
    if (const auto w = number_opt(e, "wavelength_nm"))
        m.zpl_energy_ueV = units::energy_from_wavelength(*w);
    else
        m.zpl_energy_ueV = need(e, "emitter", "zpl_energy_ueV", defaults.zpl_energy_ueV);
    m.zpl_fwhm_ueV = need(e, "emitter", "zpl_fwhm_ueV", defaults.zpl_fwhm_ueV);
    m.debye_waller = need(e, "emitter", "debye_waller", defaults.debye_waller);
    m.temperature_K = number_or(e, "temperature_K", defaults.temperature_K);
    if (const auto tau = number_opt(e, "lifetime_ps"))
    {
        require(*tau > 0.0, "emitter_lifetime", "emitter.lifetime_ps must be > 0");
        m.gamma_fs_ueV = units::rate_from_lifetime(*tau);
    }
    else
        m.gamma_fs_ueV = need(e, "emitter", "gamma_fs_ueV", defaults.gamma_fs_ueV);
    m.eta_qy = need(e, "emitter", "eta_qy", defaults.eta_qy);
    const json &sb = object_or_empty(e, "sideband");
    m.sideband.exponent = number_or(sb, "exponent", defaults.sideband.exponent);
    m.sideband.cutoff_ueV = number_or(sb, "cutoff_ueV", defaults.sideband.cutoff_ueV);
    m.validate();
    cfg.emitter = m;

    const json &c = object_or_empty(doc, "cavity");
    cfg.cavity.wavelength_nm = number_or(c, "wavelength_nm", units::wavelength_from_energy(m.zpl_energy_ueV));
    cfg.cavity.refractive_index = number_or(c, "refractive_index", 1.0);
    cfg.cavity.radius_of_curvature_um = number_or(c, "radius_of_curvature_um", 10.0);
    if (c.contains("mode_order"))
    {
        if (!c.at("mode_order").is_number_integer())
            wrong_type("mode_order", "an integer");
        cfg.cavity.mode_order = c.at("mode_order").get<int>();
    }
    cfg.cavity.q = number_opt(c, "q");
    cfg.cavity.kappa_ueV = number_opt(c, "kappa_ueV");
    if (!cfg.cavity.q && !cfg.cavity.kappa_ueV && paper_fixture)
    {
        for (const auto &row : io::read_table_s1(cfg.fixture_dir / "table_s1.csv"))
            if (row.p == cfg.cavity.mode_order)
                cfg.cavity.q = row.q_measured;
    }
    if (cfg.cavity.q)
        require(*cfg.cavity.q > 0.0, "cavity_q", "cavity.q must be > 0");
    if (cfg.cavity.kappa_ueV)
        require(*cfg.cavity.kappa_ueV > 0.0, "cavity_kappa", "cavity.kappa_ueV must be > 0");

    if (doc.contains("analysis"))
    {
        if (!doc.at("analysis").is_object())
            wrong_type("analysis", "an object");
        cfg.analysis = doc.at("analysis");
    }
    const json &io_section = object_or_empty(doc, "io");
    if (io_section.contains("input"))
        cfg.input = cfg.resolve_input(string_or(io_section, "input", ""));
    if (doc.contains("seed"))
    {
        if (!doc.at("seed").is_number_unsigned())
            wrong_type("seed", "a non-negative integer");
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    }
    return cfg;
}

RunConfig load_config(const fs::path &path, bool paper_fixture)
{
    const std::string text = io::read_text(path);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw IoError("empty_input", "config file '" + path.string() + "' is empty");
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw ValidationError("config_parse", "config '" + path.string() + "': " + e.what());
    }
    return config_from_json(doc, path.has_parent_path() ? path.parent_path() : fs::path("."), paper_fixture);
}

} // namespace pl::cli
