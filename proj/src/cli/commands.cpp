#include "commands.hpp"

#include "svg.hpp"

#include "pl/budget.hpp"
#include "pl/cavity.hpp"
#include "pl/cqed.hpp"
#include "pl/dynamics.hpp"
#include "pl/error.hpp"
#include "pl/io.hpp"
#include "pl/rng.hpp"
#include "pl/spectra.hpp"
#include "pl/units.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace pl::cli
{

namespace fs = std::filesystem;

namespace
{

// Runs fn(0..n-1) on up to `threads` workers; results keep input order.
template <class T>
std::vector<T> parallel_map(std::size_t n, int threads, const std::function<T(std::size_t)> &fn)
{
    std::vector<std::optional<T>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            try
            {
                slots[i] = fn(i);
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const auto count = static_cast<std::size_t>(std::clamp(threads, 1, 256));
    if (count == 1 || n <= 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(count, n); ++t)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    std::vector<T> out;
    out.reserve(n);
    for (auto &s : slots)
        out.push_back(std::move(*s));
    return out;
}

class Outputs
{
public:
    Outputs(fs::path dir, std::string prefix) : dir_(std::move(dir)), prefix_(std::move(prefix)) {}

    fs::path path(const std::string &name) const { return dir_ / (prefix_ + "_" + name); }

    void spectrum(const std::string &name, const Spectrum &s)
    {
        io::write_spectrum_csv(path(name), s);
        files_.push_back(path(name));
    }
    void trace(const std::string &name, const DecayTrace &t)
    {
        io::write_trace_csv(path(name), t);
        files_.push_back(path(name));
    }
    void g2(const std::string &name, const G2Trace &t)
    {
        io::write_g2_csv(path(name), t);
        files_.push_back(path(name));
    }
    void table(const std::string &name, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &columns)
    {
        io::write_numeric_csv(path(name), header, columns);
        files_.push_back(path(name));
    }
    void text(const std::string &name, const std::string &content)
    {
        io::write_text(path(name), content);
        files_.push_back(path(name));
    }
    CommandResult finish(json report)
    {
        text("report.json", report.dump(2) + "\n");
        return {files_, std::move(report)};
    }

private:
    fs::path dir_;
    std::string prefix_;
    std::vector<fs::path> files_;
};

std::vector<double> values_of(const Spectrum &s) { return {s.values().begin(), s.values().end()}; }

json emitter_json(const EmitterModel &m)
{
    return {{"zpl_energy_ueV", m.zpl_energy_ueV},
            {"wavelength_nm", units::wavelength_from_energy(m.zpl_energy_ueV)},
            {"zpl_fwhm_ueV", m.zpl_fwhm_ueV},
            {"debye_waller", m.debye_waller},
            {"temperature_K", m.temperature_K},
            {"gamma_fs_ueV", m.gamma_fs_ueV},
            {"lifetime_ps", units::lifetime_from_rate(m.gamma_fs_ueV)},
            {"eta_qy", m.eta_qy},
            {"sideband", {{"exponent", m.sideband.exponent}, {"cutoff_ueV", m.sideband.cutoff_ueV}}}};
}

EnergyAxis axis_from(const json &o)
{
    const std::string axis = string_or(o, "axis", "detuning");
    if (axis == "detuning")
        return EnergyAxis::detuning;
    if (axis == "absolute")
        return EnergyAxis::absolute;
    throw ValidationError("config_value", "axis must be 'detuning' or 'absolute'");
}

EnergyGrid spectrum_grid(const RunConfig &cfg, const json &o, EnergyAxis axis)
{
    const double step = number_or(o, "step_ueV", 5.0);
    const double half = number_or(o, "half_span_ueV", std::max(20000.0, 10.0 * cfg.emitter.zpl_fwhm_ueV));
    require(step > 0.0 && half > step, "config_value", "spectrum grid needs step_ueV > 0 and half_span_ueV > step");
    return EnergyGrid::centered(zpl_center(cfg.emitter, axis), half, step);
}

std::vector<io::ModeOrderRow> fixture_modes(const RunConfig &cfg)
{
    return io::read_table_s1(cfg.fixture_dir / "table_s1.csv");
}

// --- spectrum ---------------------------------------------------------------

CommandResult cmd_spectrum(const RunConfig &cfg, const fs::path &out)
{
    const json &o = cfg.section("spectrum");
    const EnergyAxis axis = axis_from(o);
    const EnergyGrid grid = spectrum_grid(cfg, o, axis);
    const EmitterModel &m = cfg.emitter;
    const double kappa = cfg.kappa_ueV();

    const Spectrum s_fs = build_fs_spectrum(m, grid, axis);
    const Spectrum s_emi = convolve_lorentzian(s_fs, kappa);
    const Spectrum s_abs = convolve_lorentzian(absorption_spectrum(s_fs, m, axis), kappa);
    const Spectrum wing = sideband_component(m, grid, axis);
    const double center = zpl_center(m, axis);
    const double window = number_or(o, "dw_window_ueV", 4.0 * m.zpl_fwhm_ueV);
    const auto dw = debye_waller(s_fs, window, center, DebyeWallerMethod::zpl_fit);

    Outputs files(out, "spectrum");
    files.spectrum("fs.csv", s_fs);
    files.spectrum("emi_tilde.csv", s_emi);
    files.spectrum("abs_tilde.csv", s_abs);
    files.spectrum("sideband.csv", wing);

    const auto x = grid.points();
    std::vector<Series> series{{"free space", x, values_of(s_fs)},
                               {"emission (cavity filtered)", x, values_of(s_emi)},
                               {"absorption (cavity filtered)", x, values_of(s_abs)}};
    files.text("plot.svg", svg_plot({"Emitter spectra", axis == EnergyAxis::detuning ? "detuning (ueV)" : "energy (ueV)",
                                     "spectral density (1/ueV)"},
                                    series));

    const bool wing_empty = std::all_of(wing.values().begin(), wing.values().end(), [](double v) { return v == 0.0; });
    json report{{"command", "spectrum"},
                {"emitter", emitter_json(m)},
                {"axis", axis == EnergyAxis::detuning ? "detuning" : "absolute"},
                {"grid", {{"start_ueV", grid.start()}, {"step_ueV", grid.step()}, {"size", grid.size()}}},
                {"kappa_ueV", kappa},
                {"area", s_fs.integral()},
                {"area_target", units::two_pi},
                {"normalization", std::string(to_string(s_fs.normalization()))},
                {"debye_waller_fit", dw.debye_waller},
                {"zpl_fwhm_fit_ueV", dw.zpl_fwhm},
                {"s_tilde_max_analytic", s_tilde_max(m.debye_waller, m.zpl_fwhm_ueV, kappa)},
                {"s_emi_tilde_peak", s_emi.peak()},
                {"sideband_empty", wing_empty}};
    return files.finish(std::move(report));
}

// --- purcell ----------------------------------------------------------------

CommandResult cmd_purcell(const RunConfig &cfg, const fs::path &out)
{
    const json &o = cfg.section("purcell");
    const EmitterModel &m = cfg.emitter;
    const double q_em = m.q_emitter();

    std::vector<io::ModeOrderRow> rows;
    bool from_fixture = false;
    if (cfg.paper_fixture)
    {
        rows = fixture_modes(cfg);
        from_fixture = true;
    }
    else
    {
        require(cfg.cavity.q.has_value(), "cavity_q_missing", "purcell needs cavity.q without --fixture paper");
        rows.push_back({cfg.cavity.mode_order, 0.0, 0.0, *cfg.cavity.q, 0.0, 0.0});
    }

    json modes = json::array();
    double f_p_selected = 0.0;
    for (const auto &r : rows)
    {
        const CavityGeometry geom{cfg.cavity.wavelength_nm, cfg.cavity.refractive_index,
                                  cfg.cavity.radius_of_curvature_um, r.p};
        geom.validate();
        const double v_gauss = mode_volume_gaussian(geom);
        const double v = from_fixture ? r.v_eff_lambda3 : v_gauss;
        const double qeff = q_eff(r.q_measured, q_em);
        const double f_p = purcell_factor(cfg.cavity.wavelength_nm, cfg.cavity.refractive_index, v, qeff);
        if (r.p == cfg.cavity.mode_order)
            f_p_selected = f_p;
        json row{{"p", r.p},
                 {"v_eff_lambda3", v},
                 {"v_eff_provenance", from_fixture ? "fixture" : "computed"},
                 {"v_eff_gaussian_lambda3", v_gauss},
                 {"q", r.q_measured},
                 {"q_emitter", q_em},
                 {"q_eff", qeff},
                 {"kappa_ueV", kappa_from_q(m.zpl_energy_ueV, r.q_measured)},
                 {"fsr_nm", fsr(geom).nm},
                 {"f_p_formula", f_p}};
        if (from_fixture)
        {
            row["q_theory"] = r.q_theory;
            row["internal_loss_ppm_per_pass"] = internal_loss_from_q(r.q_measured, r.q_theory, r.p);
        }
        modes.push_back(std::move(row));
    }

    json report{{"command", "purcell"}, {"emitter", emitter_json(m)}, {"mode_orders", modes}};

    std::optional<PurcellSolution> solved;
    const auto flux = number_opt(o, "flux_ratio_sat");
    const auto decay = number_opt(o, "decay_ratio");
    if (flux || decay || cfg.paper_fixture)
    {
        const double fr = flux.value_or(19.0), dr = decay.value_or(1.19);
        solved = solve_fp_and_qy(fr, dr, m.debye_waller);
        report["inverse"] = {{"flux_ratio_sat", fr},
                             {"decay_ratio", dr},
                             {"f_p", solved->f_p},
                             {"eta_qy", solved->eta_qy}};
    }
    else
        report["inverse"] = nullptr;

    // Forward model at the emitter's quantum yield.
    const double f_p = number_or(o, "f_p", solved ? solved->f_p : f_p_selected);
    const auto fwd = brightening_ratios(m.debye_waller, f_p, m.eta_qy);
    report["forward"] = {{"f_p", fwd.f_p},
                         {"eta_qy", m.eta_qy},
                         {"flux_ratio_linear", fwd.flux_ratio_linear},
                         {"flux_ratio_sat", fwd.flux_ratio_sat},
                         {"decay_ratio", fwd.decay_ratio}};

    Outputs files(out, "purcell");
    return files.finish(std::move(report));
}

// --- brightness -------------------------------------------------------------

struct ModeSweepPoint
{
    int p = 0;
    double v_eff = 0.0;
    double kappa = 0.0;
    double g_true = 0.0;
    EnvelopeFit fit;
    Spectrum beta;
    Spectrum e_mod;
    std::optional<Spectrum> recovered;
};

CommandResult cmd_brightness(const RunConfig &cfg, const fs::path &out, int parallel)
{
    const json &o = cfg.section("brightness");
    const EmitterModel &m = cfg.emitter;
    const EnergyAxis axis = axis_from(o);
    const EnergyGrid grid = spectrum_grid(cfg, o, axis);
    const Spectrum s_fs = build_fs_spectrum(m, grid, axis);
    const double gamma = m.gamma_fs_ueV;
    Outputs files(out, "brightness");

    const bool synthetic = bool_or(o, "synthetic", !cfg.input.has_value());
    if (!synthetic)
    {
        require(cfg.input.has_value(), "config_missing", "brightness needs io.input or analysis.brightness.synthetic");
        const Spectrum measured = io::read_spectrum_csv(*cfg.input);
        const double kappa = cfg.kappa_ueV();
        const auto fit = fit_g_from_envelope(measured, s_fs, kappa, gamma);
        json report{{"command", "brightness"},
                    {"input", cfg.input->string()},
                    {"kappa_ueV", kappa},
                    {"g_ueV", fit.g_ueV},
                    {"a", fit.a},
                    {"c", fit.c},
                    {"residual", fit.residual},
                    {"converged", fit.converged},
                    {"below_noise_floor", fit.below_noise_floor}};
        if (!fit.below_noise_floor)
            files.spectrum("s_dtilde_recovered.csv", invert_envelope(measured, fit.a, fit.c));
        return files.finish(std::move(report));
    }

    const std::vector<int> orders = integers_or(o, "mode_orders", {6, 7, 8, 9});
    require(!orders.empty(), "config_value", "mode_orders must not be empty");
    const double g_max = number_or(o, "g_max_ueV", 25.0);
    require(g_max >= 0.0, "config_value", "g_max_ueV must be >= 0");
    const double noise = number_or(o, "noise", 0.0);
    require(noise >= 0.0, "config_value", "noise must be >= 0");
    const std::string synthesis = string_or(o, "synthesis", "convolution");
    require(synthesis == "convolution" || synthesis == "hill", "config_value",
            "synthesis must be 'convolution' or 'hill'");
    const bool reabsorption = bool_or(o, "reabsorption", false);

    std::vector<io::ModeOrderRow> table;
    if (cfg.paper_fixture)
        table = fixture_modes(cfg);
    std::vector<double> volumes, kappas;
    for (int p : orders)
    {
        const auto row = std::find_if(table.begin(), table.end(), [&](const auto &r) { return r.p == p; });
        if (row != table.end())
        {
            volumes.push_back(row->v_eff_lambda3);
            kappas.push_back(kappa_from_q(m.zpl_energy_ueV, row->q_measured));
        }
        else
        {
            const CavityGeometry geom{cfg.cavity.wavelength_nm, cfg.cavity.refractive_index,
                                      cfg.cavity.radius_of_curvature_um, p};
            geom.validate();
            volumes.push_back(mode_volume_gaussian(geom));
            kappas.push_back(cfg.kappa_ueV());
        }
    }
    const double v_min = *std::min_element(volumes.begin(), volumes.end());

    const std::optional<Spectrum> s_abs_fs =
        reabsorption ? std::optional<Spectrum>(absorption_spectrum(s_fs, m, axis)) : std::nullopt;

    const auto points = parallel_map<ModeSweepPoint>(orders.size(), parallel, [&](std::size_t i) {
        const double kappa = kappas[i];
        const double g = g_max * std::sqrt(v_min / volumes[i]);
        const CouplingParams coupling{g, gamma, kappa};
        const Spectrum s_t = convolve_lorentzian(s_fs, kappa);
        const Spectrum s_tt = convolve_lorentzian(s_t, kappa);
        std::optional<Spectrum> s_abs_t;
        if (s_abs_fs)
            s_abs_t = convolve_lorentzian(*s_abs_fs, kappa);
        const Spectrum beta = brightness_profile(coupling, s_t, s_abs_t);
        Spectrum e_mod = synthesis == "hill" ? hill_envelope(s_tt, coupling.a(), 1.0) : modulation_envelope(beta, kappa);
        if (noise > 0.0)
        {
            // counting noise: relative `noise` at the peak, scaling as sqrt(E)
            std::mt19937_64 engine(rng::derive_seed(cfg.seed, i));
            std::normal_distribution<double> draw(0.0, noise * e_mod.peak());
            std::vector<double> v = values_of(e_mod);
            const double peak = e_mod.peak();
            for (double &x : v)
                x = std::max(0.0, x + std::sqrt(x / peak) * draw(engine));
            e_mod = e_mod.with_values(std::move(v));
        }
        ModeSweepPoint pt{orders[i], volumes[i], kappa, g, fit_g_from_envelope_double_tilde(e_mod, s_tt, gamma), beta,
                          e_mod, std::nullopt};
        if (!pt.fit.below_noise_floor)
            pt.recovered = invert_envelope(e_mod, pt.fit.a, pt.fit.c);
        return pt;
    });

    json per_mode = json::array();
    std::vector<double> inv_v, g2_fit, g2_true;
    for (const auto &pt : points)
    {
        const std::string tag = "p" + std::to_string(pt.p);
        files.spectrum("beta_" + tag + ".csv", pt.beta);
        files.spectrum("emod_" + tag + ".csv", pt.e_mod);
        if (pt.recovered)
            files.spectrum("s_dtilde_" + tag + ".csv", *pt.recovered);
        per_mode.push_back({{"p", pt.p},
                            {"v_eff_lambda3", pt.v_eff},
                            {"kappa_ueV", pt.kappa},
                            {"g_config_ueV", pt.g_true},
                            {"g_fit_ueV", pt.fit.g_ueV},
                            {"a", pt.fit.a},
                            {"c", pt.fit.c},
                            {"residual", pt.fit.residual},
                            {"converged", pt.fit.converged},
                            {"below_noise_floor", pt.fit.below_noise_floor}});
        inv_v.push_back(1.0 / pt.v_eff);
        g2_fit.push_back(pt.fit.g_ueV * pt.fit.g_ueV);
        g2_true.push_back(pt.g_true * pt.g_true);
    }

    json report{{"command", "brightness"},
                {"emitter", emitter_json(m)},
                {"synthesis", synthesis},
                {"noise", noise},
                {"reabsorption", reabsorption},
                {"g_max_config_ueV", g_max},
                {"mode_orders", per_mode}};
    if (points.size() >= 2 && std::any_of(g2_fit.begin(), g2_fit.end(), [](double v) { return v > 0.0; }))
    {
        const auto line = fit_line_through_origin(inv_v, g2_fit);
        report["g2_vs_inverse_volume"] = {{"slope", line.slope}, {"r_squared", line.r_squared}};
    }
    else
        report["g2_vs_inverse_volume"] = nullptr;

    files.text("g2_vs_inv_v.svg",
               svg_plot({"Coupling vs mode volume", "1 / V_eff (lambda^-3)", "g^2 (ueV^2)"},
                        {{"fitted", inv_v, g2_fit, true}, {"configured", inv_v, g2_true, false}}));
    const auto x = grid.points();
    std::vector<Series> env;
    for (const auto &pt : points)
    {
        std::vector<double> y = values_of(pt.e_mod);
        const double peak = pt.e_mod.peak();
        if (peak > 0.0)
            for (double &v : y)
                v /= peak;
        env.push_back({"p = " + std::to_string(pt.p), x, y});
    }
    files.text("envelopes.svg", svg_plot({"Brightness envelopes", "cavity detuning (ueV)", "E_mod / max"}, env));
    return files.finish(std::move(report));
}

// --- lifetime ---------------------------------------------------------------

json biexp_json(const BiexpFit &f)
{
    return {{"tau1_ps", f.tau1_ps},       {"tau2_ps", f.tau2_ps},
            {"a1", f.a1},                 {"a2", f.a2},
            {"sigma_tau1_ps", f.sigma_tau1_ps}, {"sigma_tau2_ps", f.sigma_tau2_ps},
            {"sigma_a1", f.sigma_a1},     {"sigma_a2", f.sigma_a2},
            {"long_weight", f.long_weight}, {"chi2", f.chi2},
            {"iterations", f.iterations}, {"converged", f.converged},
            {"monoexponential", f.monoexponential}};
}

void require_converged(const BiexpFit &f, const std::string &what)
{
    if (!f.converged)
        throw FitError("fit_not_converged", what + " biexponential fit did not converge in " +
                                                std::to_string(f.iterations) + " iterations");
}

Irf irf_from(const RunConfig &cfg, const json &o)
{
    if (o.contains("irf_csv"))
    {
        const auto t = io::read_trace_csv(cfg.resolve_input(string_or(o, "irf_csv", "")));
        return TabulatedIrf{t.grid.start_ps, t.counts};
    }
    return GaussianIrf{number_or(o, "irf_fwhm_ps", 32.0)};
}

CommandResult cmd_lifetime(const RunConfig &cfg, const fs::path &out, int parallel)
{
    const json &o = cfg.section("lifetime");
    const Irf irf = irf_from(cfg, o);
    Outputs files(out, "lifetime");

    if (cfg.input)
    {
        const DecayTrace cavity = io::read_trace_csv(*cfg.input, irf);
        const BiexpFit fc = fit_biexponential(cavity);
        require_converged(fc, "cavity");
        json report{{"command", "lifetime"}, {"cavity", biexp_json(fc)}};
        if (o.contains("reference_input"))
        {
            const DecayTrace fs_trace = io::read_trace_csv(cfg.resolve_input(string_or(o, "reference_input", "")), irf);
            const BiexpFit ff = fit_biexponential(fs_trace);
            require_converged(ff, "free-space");
            report["free_space"] = biexp_json(ff);
            report["tau2_ratio"] = ff.tau2_ps / fc.tau2_ps;
        }
        return files.finish(std::move(report));
    }

    const double ratio = number_or(o, "decay_ratio", 1.19);
    const DecayWeights weights{number_or(o, "a1", 1.0), number_or(o, "tau1_ps", 23.0), number_or(o, "a2", 1.0)};
    const double bin = number_or(o, "bin_ps", 4.0);
    const double start = number_or(o, "start_ps", -200.0);
    const double span = number_or(o, "span_ps", 2400.0);
    require(bin > 0.0 && span > 0.0, "config_value", "bin_ps and span_ps must be > 0");
    const TimeGrid grid{start, bin, static_cast<std::size_t>(std::llround(span / bin))};
    const double peak = number_or(o, "peak_counts", 1e5);
    const int trials = static_cast<int>(number_or(o, "trials", 20));
    require(trials >= 1, "config_value", "trials must be >= 1");

    const DecayTrace fs_clean =
        scaled_to_peak(simulate_decay(cfg.emitter.gamma_fs_ueV, 1.0, weights, irf, grid), peak);
    const DecayTrace cav_clean =
        scaled_to_peak(simulate_decay(cfg.emitter.gamma_fs_ueV, ratio, weights, irf, grid), peak);

    struct Trial
    {
        DecayTrace fs;
        DecayTrace cavity;
        BiexpFit fs_fit;
        BiexpFit cavity_fit;
    };
    const auto results = parallel_map<Trial>(static_cast<std::size_t>(trials), parallel, [&](std::size_t k) {
        Trial t{with_poisson_noise(fs_clean, rng::derive_seed(cfg.seed, 2 * k)),
                with_poisson_noise(cav_clean, rng::derive_seed(cfg.seed, 2 * k + 1)),
                {},
                {}};
        t.fs_fit = fit_biexponential(t.fs);
        t.cavity_fit = fit_biexponential(t.cavity);
        return t;
    });

    json trial_json = json::array();
    std::vector<double> ratios;
    for (std::size_t k = 0; k < results.size(); ++k)
    {
        require_converged(results[k].fs_fit, "free-space trial " + std::to_string(k));
        require_converged(results[k].cavity_fit, "cavity trial " + std::to_string(k));
        const double r = results[k].fs_fit.tau2_ps / results[k].cavity_fit.tau2_ps;
        ratios.push_back(r);
        trial_json.push_back({{"trial", k},
                              {"free_space", biexp_json(results[k].fs_fit)},
                              {"cavity", biexp_json(results[k].cavity_fit)},
                              {"tau2_ratio", r}});
    }
    const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
    double var = 0.0;
    for (double r : ratios)
        var += (r - mean) * (r - mean);
    const double sd = ratios.size() > 1 ? std::sqrt(var / static_cast<double>(ratios.size() - 1)) : 0.0;

    files.trace("fs.csv", results.front().fs);
    files.trace("cavity.csv", results.front().cavity);
    const auto &f0 = results.front();
    std::vector<double> t(grid.size);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = grid.at(i);
    const auto model = [&](const BiexpFit &f) {
        return biexp_model({f.a1, f.tau1_ps, f.a2, f.tau2_ps}, irf, grid);
    };
    files.text("plot.svg", svg_plot({"Decay traces (trial 0)", "time (ps)", "counts", true},
                                    {{"free space", t, f0.fs.counts, true},
                                     {"cavity", t, f0.cavity.counts, true},
                                     {"free-space fit", t, model(f0.fs_fit)},
                                     {"cavity fit", t, model(f0.cavity_fit)}}));

    json report{{"command", "lifetime"},
                {"configured_decay_ratio", ratio},
                {"configured_tau2_fs_ps", units::lifetime_from_rate(cfg.emitter.gamma_fs_ueV)},
                {"peak_counts", peak},
                {"trials", trial_json},
                {"tau2_ratio_mean", mean},
                {"tau2_ratio_sd", sd}};
    return files.finish(std::move(report));
}

// --- saturation -------------------------------------------------------------

CommandResult cmd_saturation(const RunConfig &cfg, const fs::path &out)
{
    const json &o = cfg.section("saturation");
    const std::string mode_name = string_or(o, "mode", "pulsed");
    require(mode_name == "cw" || mode_name == "pulsed", "config_value", "saturation mode must be 'cw' or 'pulsed'");
    const Excitation mode = mode_name == "cw" ? Excitation::cw : Excitation::pulsed;
    Outputs files(out, "saturation");

    std::vector<double> powers, counts;
    json truth = nullptr;
    if (cfg.input)
    {
        const auto t = io::read_numeric_csv(*cfg.input, {"power_mW", "counts"});
        for (const auto &r : t.rows)
        {
            powers.push_back(r[0]);
            counts.push_back(r[1]);
        }
    }
    else
    {
        powers = numbers_or(o, "powers_mW", {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 4.7});
        const double i_sat = number_or(o, "i_sat", 1e4);
        const double p_sat = number_or(o, "p_sat_mW", 1.0);
        const double noise = number_or(o, "noise", 0.02);
        require(noise >= 0.0, "config_value", "noise must be >= 0");
        counts = saturation_curve(powers, i_sat, p_sat, mode);
        std::mt19937_64 engine(rng::derive_seed(cfg.seed, 0));
        std::normal_distribution<double> draw(0.0, noise);
        for (double &c : counts)
            c *= std::max(1e-3, 1.0 + draw(engine));
        truth = {{"i_sat", i_sat}, {"p_sat_mW", p_sat}, {"noise", noise}};
    }

    const SaturationFit fit = fit_saturation(powers, counts, mode);
    if (!fit.converged)
        throw FitError("fit_not_converged", "saturation fit did not converge in " + std::to_string(fit.iterations) +
                                                " iterations");
    json report{{"command", "saturation"},
                {"mode", mode_name},
                {"configured", truth},
                {"i_sat", fit.i_sat},
                {"p_sat_mW", fit.p_sat},
                {"sigma_i_sat", fit.sigma_i_sat},
                {"sigma_p_sat_mW", fit.sigma_p_sat},
                {"iterations", fit.iterations},
                {"converged", fit.converged}};
    if (mode == Excitation::pulsed)
    {
        std::optional<double> eta_coll = number_opt(o, "eta_coll");
        std::string provenance = "user";
        if (!eta_coll && cfg.paper_fixture)
        {
            eta_coll = io::read_table_s3(cfg.fixture_dir / "table_s3.csv").overall[0];
            provenance = "fixture";
        }
        if (eta_coll)
        {
            const double f_rep = number_or(o, "f_rep_hz", 38.26e6);
            const auto qy = qy_from_saturation(fit.i_sat, *eta_coll, f_rep);
            report["quantum_yield"] = {{"eta_qy", qy.eta_qy},
                                       {"unphysical", qy.unphysical},
                                       {"eta_coll", *eta_coll},
                                       {"eta_coll_provenance", provenance},
                                       {"f_rep_hz", f_rep}};
        }
    }

    const std::vector<double> model = saturation_curve(powers, fit.i_sat, fit.p_sat, mode);
    files.table("curve.csv", {"power_mW", "counts", "model"}, {powers, counts, model});
    std::vector<double> fine_p, fine_c;
    const double p_hi = *std::max_element(powers.begin(), powers.end());
    for (int k = 1; k <= 200; ++k)
        fine_p.push_back(p_hi * k / 200.0);
    fine_c = saturation_curve(fine_p, fit.i_sat, fit.p_sat, mode);
    files.text("plot.svg", svg_plot({"Saturation", "excitation power (mW)", "count rate (1/s)"},
                                    {{"measured", powers, counts, true}, {"fit", fine_p, fine_c}}));
    return files.finish(std::move(report));
}

// --- g2 ---------------------------------------------------------------------

CommandResult cmd_g2(const RunConfig &cfg, const fs::path &out)
{
    const json &o = cfg.section("g2");
    const std::string mode_name = string_or(o, "mode", "cw");
    require(mode_name == "cw" || mode_name == "pulsed", "config_value", "g2 mode must be 'cw' or 'pulsed'");
    const Excitation mode = mode_name == "cw" ? Excitation::cw : Excitation::pulsed;
    const Irf irf = irf_from(cfg, o);
    const PulsedOptions pulsed{number_or(o, "f_rep_hz", 38.26e6), number_or(o, "excitation_probability", 0.5)};
    const double lo = number_or(o, "bunching_window_lo_ps", 2000.0);
    const double hi = number_or(o, "bunching_window_hi_ps", 40000.0);
    Outputs files(out, "g2");

    if (cfg.input)
    {
        const G2Trace trace = io::read_g2_csv(*cfg.input);
        json report{{"command", "g2"}, {"mode", mode_name}, {"input", cfg.input->string()}};
        if (mode == Excitation::cw)
        {
            report["g2_zero"] = g2_at_zero(trace);
            report["bunching_time_ps"] = bunching_decay_time(trace, lo, hi);
        }
        else
            report["g2_zero"] = pulsed_g2_zero(trace, pulsed.f_rep_hz);
        return files.finish(std::move(report));
    }

    const double gamma = number_or(o, "gamma_total_ueV", cfg.emitter.gamma_fs_ueV * number_or(o, "decay_ratio", 1.0));
    LevelScheme scheme{number_or(o, "pump_ueV", 0.0), gamma, number_or(o, "k_shelve_ueV", 0.02 * gamma),
                       number_or(o, "k_deshelve_ueV", 0.0), number_or(o, "background", 0.0)};
    json tuned = nullptr;
    if (o.contains("targets"))
    {
        const json &t = o.at("targets");
        const G2Targets targets{number_or(t, "raw_g2_zero", 0.4), number_or(t, "deconvolved_g2_zero", 0.36),
                                number_or(t, "bunching_time_ps", 1e4)};
        scheme = tune_level_scheme(scheme, irf, targets);
        tuned = {{"raw_g2_zero", targets.raw_g2_zero},
                 {"deconvolved_g2_zero", targets.deconvolved_g2_zero},
                 {"bunching_time_ps", targets.bunching_time_ps}};
    }
    scheme.validate();

    const double period = 1e12 / pulsed.f_rep_hz;
    const double half = number_or(o, "half_span_ps", mode == Excitation::cw ? 60000.0 : 4.5 * period);
    const double step = number_or(o, "step_ps", mode == Excitation::cw ? 50.0 : 20.0);
    const G2Trace trace = g2_correlation(scheme, mode, TimeGrid::symmetric(half, step), irf, pulsed);
    files.g2("trace.csv", trace);

    json report{{"command", "g2"},
                {"mode", mode_name},
                {"targets", tuned},
                {"scheme",
                 {{"pump_ueV", scheme.pump_ueV},
                  {"gamma_total_ueV", scheme.gamma_total_ueV},
                  {"k_shelve_ueV", scheme.k_shelve_ueV},
                  {"k_deshelve_ueV", scheme.k_deshelve_ueV},
                  {"background", scheme.background}}}};
    if (mode == Excitation::cw)
    {
        const auto modes = three_level_modes(scheme);
        LevelScheme clean = scheme;
        clean.background = 0.0;
        report["modes"] = {{"lambda1_per_ps", modes.lambda1_per_ps},
                           {"lambda2_per_ps", modes.lambda2_per_ps},
                           {"bunching_amplitude", modes.amplitude},
                           {"real", modes.real}};
        report["g2_zero_emitter"] = g2_cw_emitter(clean, 0.0);
        report["g2_zero_raw"] = g2_at_zero(trace);
        report["g2_zero_deconvolved"] =
            g2_at_zero(g2_correlation(scheme, mode, TimeGrid::symmetric(4.0, 1.0), GaussianIrf{0.0}));
        report["bunching_time_ps"] = bunching_decay_time(trace, lo, hi);
    }
    else
    {
        report["g2_zero_area_ratio"] = pulsed_g2_zero(trace, pulsed.f_rep_hz);
        report["peak_areas"] = pulsed_peak_areas(scheme, pulsed, 4);
    }
    files.text("plot.svg", svg_plot({"Intensity correlation", "delay (ps)", "g2"}, {{mode_name, trace.tau_ps, trace.g2}}));
    return files.finish(std::move(report));
}

// --- budget -----------------------------------------------------------------

EfficiencyChain chain_from_json(const json &j)
{
    require(j.is_object(), "config_type", "chain must be an object {path, stages}");
    EfficiencyChain c;
    c.path = optical_path_from_string(string_or(j, "path", ""));
    require(j.contains("stages") && j.at("stages").is_array(), "config_type", "chain.stages must be an array");
    for (const auto &s : j.at("stages"))
    {
        const auto eff = number_opt(s, "eff");
        require(eff.has_value(), "config_missing", "every stage needs 'eff'");
        c.stages.push_back({string_or(s, "name", "stage"), *eff,
                            stage_kind_from_string(string_or(s, "kind", "transmission")), Provenance::user});
    }
    c.validate();
    return c;
}

json chain_json(const EfficiencyChain &c)
{
    json stages = json::array();
    for (const auto &s : c.stages)
        stages.push_back({{"name", s.name},
                          {"eff", s.efficiency},
                          {"kind", std::string(to_string(s.kind))},
                          {"provenance", std::string(to_string(s.provenance))}});
    return {{"path", std::string(to_string(c.path))},
            {"stages", stages},
            {"extraction", c.extraction()},
            {"path_product", c.path_product()},
            {"overall", chain_efficiency(c)},
            {"photons_per_count", photons_per_count(c)}};
}

EfficiencyChain path_only(const EfficiencyChain &c)
{
    EfficiencyChain out{c.path, {}};
    for (const auto &s : c.stages)
        if (s.kind != StageKind::extraction)
            out.stages.push_back(s);
    return out;
}

json value(double v, const char *provenance) { return {{"value", v}, {"provenance", provenance}}; }

CommandResult cmd_budget(const RunConfig &cfg, const fs::path &out)
{
    const json &o = cfg.section("budget");
    std::optional<std::array<EfficiencyChain, 3>> chains;
    if (cfg.paper_fixture)
        chains = io::read_table_s2(cfg.fixture_dir / "table_s2.csv");
    if (o.contains("chains"))
    {
        const json &arr = o.at("chains");
        require(arr.is_array(), "config_type", "budget.chains must be an array");
        std::array<EfficiencyChain, 3> user{};
        std::array<bool, 3> seen{};
        if (chains)
            user = *chains;
        for (const auto &j : arr)
        {
            EfficiencyChain c = chain_from_json(j);
            const auto k = static_cast<std::size_t>(c.path);
            user[k] = std::move(c);
            seen[k] = true;
        }
        if (!chains)
            require(seen[0] && seen[1] && seen[2], "config_missing",
                    "budget.chains must define free-space, cavity-planar and cavity-fiber without --fixture paper");
        chains = user;
    }
    require(chains.has_value(), "config_missing", "budget needs --fixture paper or analysis.budget.chains");
    const auto &[fs_chain, planar, fiber] = *chains;

    json report{{"command", "budget"},
                {"chains", {chain_json(fs_chain), chain_json(planar), chain_json(fiber)}}};

    if (cfg.paper_fixture)
    {
        const auto s3 = io::read_table_s3(cfg.fixture_dir / "table_s3.csv");
        json summary = json::array();
        for (std::size_t k = 0; k < 3; ++k)
            summary.push_back({{"path", std::string(to_string(static_cast<OpticalPath>(k)))},
                               {"extraction", s3.extraction[k]},
                               {"transmission_and_detector", s3.transmission_and_detector[k]},
                               {"overall", s3.overall[k]},
                               {"overall_recomputed", s3.extraction[k] * s3.transmission_and_detector[k]}});
        report["summary_table"] = summary;
        report["detected_port_ratio_summary"] = value(s3.overall[2] / s3.overall[1], "computed");
        report["collection_ratio_fs_over_cav_summary"] = value(s3.overall[0] / s3.overall[1], "computed");
    }
    report["detected_port_ratio"] = value(detected_port_ratio(fiber, planar), "computed");
    report["collection_ratio_fs_over_cav"] = value(collection_ratio_fs_over_cav(fs_chain, planar), "computed");
    report["photons_per_count_planar"] = value(photons_per_count(planar), "computed");

    const double ccd = number_or(o, "ccd_counts_per_s", 4.7e5);
    const auto ppc_fiber = number_opt(o, "photons_per_ccd_count_fiber");
    if (ppc_fiber || cfg.paper_fixture)
    {
        const double n = ppc_fiber.value_or(44.0);
        report["fiber_flux_ccd"] = {{"ccd_counts_per_s", ccd},
                                    {"photons_per_ccd_count_fiber", value(n, ppc_fiber ? "user" : "fixture")},
                                    {"flux_per_s", fiber_flux_from_ccd(ccd, n)}};
    }

    const double measured_ratio = number_or(o, "measured_port_ratio", 6.7);
    const double raw_count_ratio = number_or(o, "raw_count_ratio", 19.0 / 4.9);
    const std::string unknown = string_or(o, "unknown_stage", "cryostat_optics");
    report["measured_port_ratio"] = measured_ratio;
    report["brightening_from_counts"] =
        raw_count_ratio * collection_ratio_fs_over_cav(fs_chain, planar);
    report["raw_count_ratio"] = raw_count_ratio;
    if (planar.find(unknown) || fiber.find(unknown))
    {
        const auto by_ratio = calibrate_unknown_stage(fiber, planar, measured_ratio, unknown);
        json cal{{"unknown_stage", unknown},
                 {"from_detected_ratio", {{"efficiency", by_ratio.efficiency}, {"out_of_range", by_ratio.out_of_range}}}};
        if (const auto exit_ratio = number_opt(o, "exit_ratio").value_or(2.3); exit_ratio > 0.0)
        {
            const auto by_exit =
                calibrate_unknown_stage(path_only(fiber), path_only(planar), measured_ratio, unknown, exit_ratio, 1.0);
            cal["from_exit_ratio"] = {{"exit_ratio", exit_ratio},
                                      {"efficiency", by_exit.efficiency},
                                      {"out_of_range", by_exit.out_of_range}};
        }
        cal["quoted"] = 0.33;
        report["calibration"] = cal;
    }

    if (o.contains("saturation_route") || cfg.paper_fixture)
    {
        const json &r = o.contains("saturation_route") ? o.at("saturation_route") : json::object();
        const SaturationRoute route{number_or(r, "ccd_counts_per_s", 2.7e4), number_or(r, "power_mW", 0.1),
                                    number_or(r, "target_power_mW", 4.7), number_or(r, "p_sat_mW", 2.6),
                                    number_or(r, "port_ratio", measured_ratio), fiber.path_product()};
        report["fiber_flux_saturation_route"] = {{"ccd_counts_per_s", route.ccd_counts_per_s},
                                                 {"power_mW", route.power_mW},
                                                 {"target_power_mW", route.target_power_mW},
                                                 {"p_sat_mW", route.p_sat_mW},
                                                 {"port_ratio", route.port_ratio},
                                                 {"fiber_path_product", route.fiber_path_product},
                                                 {"flux_per_s", fiber_flux_via_saturation(route)}};
    }

    Outputs files(out, "budget");
    return files.finish(std::move(report));
}

} // namespace

const std::vector<std::string> &command_names()
{
    static const std::vector<std::string> names{"spectrum", "purcell", "brightness", "lifetime",
                                                "saturation", "g2", "budget"};
    return names;
}

CommandResult run_command(const std::string &command, const RunConfig &cfg, const fs::path &out, int parallel)
{
    require(parallel >= 1, "config_value", "--parallel must be >= 1");
    if (command == "spectrum")
        return cmd_spectrum(cfg, out);
    if (command == "purcell")
        return cmd_purcell(cfg, out);
    if (command == "brightness")
        return cmd_brightness(cfg, out, parallel);
    if (command == "lifetime")
        return cmd_lifetime(cfg, out, parallel);
    if (command == "saturation")
        return cmd_saturation(cfg, out);
    if (command == "g2")
        return cmd_g2(cfg, out);
    if (command == "budget")
        return cmd_budget(cfg, out);
    throw ValidationError("unknown_command", "unknown command '" + command + "'");
}

CommandResult run_command(const CommandOptions &options)
{
    bool paper = false;
    if (options.fixture)
    {
        require(*options.fixture == "paper", "unknown_fixture", "only '--fixture paper' is available");
        paper = true;
    }
    RunConfig cfg = load_config(options.config, paper);
    if (options.seed)
        cfg.seed = *options.seed;
    return run_command(options.command, cfg, options.out_dir, options.parallel);
}

int exit_code(const Error &e)
{
    switch (e.kind())
    {
    case ErrorKind::validation:
        return 2;
    case ErrorKind::fit:
        return 3;
    case ErrorKind::io:
        return 4;
    }
    return 1;
}

std::string diagnostic(const std::string &level, const json &fields)
{
    json line = fields;
    line["level"] = level;
    return line.dump();
}

} // namespace pl::cli
