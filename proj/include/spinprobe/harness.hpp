// harness.hpp: experiment orchestration, J_x estimation pipeline, run manifests

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinprobe/bath_thermal.hpp"
#include "spinprobe/config.hpp"
#include "spinprobe/disorder.hpp"
#include "spinprobe/exact_prop.hpp"
#include "spinprobe/io.hpp"
#include "spinprobe/nmme.hpp"
#include "spinprobe/observables.hpp"
#include "spinprobe/parallel.hpp"
#include "spinprobe/version.hpp"

namespace spinprobe {

using json = nlohmann::ordered_json;

struct EngineOutput {
    std::vector<ReducedDensity> rho;
    std::optional<MEDiagnostics> diagnostics; // master-equation engines only
    std::optional<KernelRates> rates;
};

inline KernelRates configured_kernel_rates(const ExperimentConfig& cfg, const BathStatistics& stats) {
    return cfg.p > 0.0 ? KernelRates{cfg.p, cfg.q} : heuristic_kernel_rates(stats);
}

inline MESolverConfig master_equation_config(const ExperimentConfig& cfg, const BathStatistics& stats, Engine engine) {
    const KernelRates rates = configured_kernel_rates(cfg, stats);
    MESolverConfig me;
    me.b_bar = stats.b_bar;
    me.c_var = stats.c_var;
    me.b0z = cfg.b0z;
    me.kernel = make_memory_kernel(rates.p, rates.q, cfg.n_grid, cfg.dt,
                                   cfg.l_grid > 0 ? std::optional<std::size_t>(cfg.l_grid) : std::nullopt);
    me.mode = engine == Engine::markovian ? MEMode::markovian : MEMode::non_markovian;
    return me;
}

// One engine on one realization whose bath is already diagonalized.
inline EngineOutput simulate_engine(const ExperimentConfig& cfg, const DisorderRealization& real,
                                    const BathSpectrum& spectrum, const BathStatistics& stats, Engine engine,
                                    std::span<const double> times) {
    EngineOutput out;
    if (engine == Engine::exact) {
        ExactOptions opt;
        opt.backend = cfg.exact_backend;
        out.rho = propagate_exact(real.model, spectrum, times, opt);
        return out;
    }
    const MESolverConfig me = master_equation_config(cfg, stats, engine);
    MEDiagnostics diag;
    out.rho = evolve_master_equation(me, initial_detector_state(), times, {}, &diag);
    out.diagnostics = diag;
    out.rates = KernelRates{me.kernel.p, me.kernel.q};
    return out;
}

struct JobRecord {
    double jx{0.0};
    std::size_t realization{0};
    Engine engine{Engine::exact};
    std::string status{"pending"}; // ok | numerical_failure | config_error
    std::string message;
    std::string series_file;
    BathStatistics stats;
    double purity_final{std::numeric_limits<double>::quiet_NaN()};
    double rabi_period{std::numeric_limits<double>::quiet_NaN()};
    double fidelity_period{std::numeric_limits<double>::quiet_NaN()};
    std::vector<std::string> notes;
    std::optional<MEDiagnostics> diagnostics;
    std::optional<KernelRates> rates;
};

struct ExperimentResult {
    std::filesystem::path out_dir;
    std::vector<JobRecord> jobs;
    std::vector<StatisticsRow> statistics;

    bool all_ok() const {
        for (const auto& j : jobs)
            if (j.status != "ok") return false;
        return true;
    }
};

inline std::string series_file_name(Engine e, double jx, std::size_t realization) {
    return "series/" + to_string(e) + "_jx" + format_label(jx) + "_r" + std::to_string(realization) + ".csv";
}

namespace detail {

inline double try_period(const ObservableSeries& s, PeriodChannel ch, std::vector<std::string>& notes) {
    try {
        return extract_period(s, ch);
    } catch (const NumericalError& e) {
        notes.push_back(std::string(ch == PeriodChannel::fidelity ? "fidelity" : "pop0") + " period: " + e.what());
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline std::vector<StatisticsRow> aggregate_statistics(const std::vector<double>& jx_list, std::size_t realizations,
                                                       const std::vector<BathStatistics>& per_job) {
    std::vector<StatisticsRow> table;
    for (std::size_t row = 0; row < jx_list.size(); ++row) {
        std::vector<double> b, c;
        for (std::size_t r = 0; r < realizations; ++r) {
            b.push_back(std::abs(per_job[row * realizations + r].b_bar));
            c.push_back(per_job[row * realizations + r].c_var);
        }
        StatisticsRow out;
        out.jx = jx_list[row];
        out.realizations = realizations;
        mean_and_stderr(b, out.mean_abs_bbar, out.stderr_bbar);
        mean_and_stderr(c, out.mean_c, out.stderr_c);
        table.push_back(out);
    }
    return table;
}

inline json diagnostics_json(const MEDiagnostics& d) {
    return {{"max_trace_error", d.max_trace_error},
            {"max_hermiticity_drift", d.max_hermiticity_drift},
            {"min_eigenvalue", d.min_eigenvalue}};
}

} // namespace detail

inline json config_to_json(const ExperimentConfig& cfg) {
    json engines = json::array();
    for (Engine e : cfg.engines) engines.push_back(to_string(e));
    return {{"schema_version", cfg.schema_version},
            {"n_bath", cfg.n_bath},
            {"b0z", cfg.b0z},
            {"delta", cfg.delta},
            {"lambda_max", cfg.lambda_max},
            {"jx_list", cfg.jx_list},
            {"kT", cfg.kT},
            {"dt", cfg.dt},
            {"t_final_short", cfg.t_final_short},
            {"t_final_long", cfg.t_final_long},
            {"dt_long", cfg.dt_long},
            {"horizon", to_string(cfg.horizon)},
            {"n_cut", cfg.n_cut},
            {"n_grid", cfg.n_grid},
            {"l_grid", cfg.l_grid},
            {"seed", cfg.seed},
            {"realizations", cfg.realizations},
            {"engines", engines},
            {"p", cfg.p},
            {"q", cfg.q},
            {"exact_backend", to_string(cfg.exact_backend)},
            {"estimation_engine", to_string(cfg.estimation_engine)}};
}

inline json job_to_json(const JobRecord& j) {
    json out = {{"jx", j.jx},
                {"realization", j.realization},
                {"engine", to_string(j.engine)},
                {"status", j.status},
                {"series_file", j.series_file},
                {"b_bar", j.stats.b_bar},
                {"c_var", j.stats.c_var}};
    if (!j.message.empty()) out["message"] = j.message;
    if (!j.notes.empty()) out["notes"] = j.notes;
    if (j.diagnostics) out["diagnostics"] = detail::diagnostics_json(*j.diagnostics);
    if (j.rates) out["kernel"] = {{"p", j.rates->p}, {"q", j.rates->q}};
    return out;
}

// Runs every (jx, realization, engine) job and writes into out_dir:
//   series/<engine>_jx<jx>_r<k>.csv, summary.csv, stats.csv, manifest.json, plots/*.svg
// A failing engine is recorded in the manifest; the remaining jobs still run.
// The thread count changes scheduling only, never the artifacts.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    const std::vector<double> times = uniform_grid(cfg.t_final(), cfg.sample_dt());
    const std::size_t n_real = cfg.realizations;
    const std::size_t n_jobs = cfg.jx_list.size() * n_real;
    const std::size_t n_eng = cfg.engines.size();

    ExperimentResult result;
    result.out_dir = out_dir;
    result.jobs.resize(n_jobs * n_eng);
    std::vector<BathStatistics> bath(n_jobs);
    std::filesystem::create_directories(out_dir / "series");

    parallel_for(n_jobs, cfg.threads, [&](std::size_t k) {
        const double jx = cfg.jx_list[k / n_real];
        const std::size_t r = k % n_real;
        const DisorderRealization real = sample_realization(cfg, jx, r);
        const BathSpectrum spectrum = diagonalize_bath(real.model, cfg.n_cut, cfg.kT);
        const BathStatistics stats = bath_statistics(real.model, spectrum);
        bath[k] = stats;
        for (std::size_t e = 0; e < n_eng; ++e) {
            JobRecord& job = result.jobs[k * n_eng + e];
            job.jx = jx;
            job.realization = r;
            job.engine = cfg.engines[e];
            job.stats = stats;
            try {
                const EngineOutput run = simulate_engine(cfg, real, spectrum, stats, job.engine, times);
                const ObservableSeries s = make_series(times, run.rho, cfg.b0z);
                job.series_file = series_file_name(job.engine, jx, r);
                write_series_csv(out_dir / job.series_file, s);
                job.purity_final = s.purity.back();
                job.rabi_period = detail::try_period(s, PeriodChannel::pop0, job.notes);
                job.fidelity_period = detail::try_period(s, PeriodChannel::fidelity, job.notes);
                job.diagnostics = run.diagnostics;
                job.rates = run.rates;
                job.status = "ok";
            } catch (const NumericalError& ex) {
                job.status = "numerical_failure";
                job.message = ex.what();
            } catch (const ConfigError& ex) {
                job.status = "config_error";
                job.message = ex.what();
            }
        }
    });

    result.statistics = detail::aggregate_statistics(cfg.jx_list, n_real, bath);

    // Single writer for the merged artifacts.
    {
        auto out = detail::open_for_write(out_dir / "summary.csv");
        out << "jx,realization,engine,b_bar,c_var,purity_final,rabi_period,fidelity_period\n";
        for (const auto& j : result.jobs)
            out << format_double(j.jx) << ',' << j.realization << ',' << to_string(j.engine) << ','
                << format_double(j.stats.b_bar) << ',' << format_double(j.stats.c_var) << ','
                << format_double(j.purity_final) << ',' << format_double(j.rabi_period) << ','
                << format_double(j.fidelity_period) << '\n';
    }
    write_statistics_csv(out_dir / "stats.csv", result.statistics);

    json manifest = {{"tool", "spinprobe"},
                     {"version", kVersion},
                     {"config", config_to_json(cfg)},
                     {"summary_file", "summary.csv"},
                     {"statistics_file", "stats.csv"},
                     {"jobs", json::array()}};
    for (const auto& j : result.jobs) manifest["jobs"].push_back(job_to_json(j));
    detail::open_for_write(out_dir / "manifest.json") << manifest.dump(2) << '\n';

    // Plots of realization 0: one panel per observable and engine, plus exact-vs-ME overlays.
    for (Engine e : cfg.engines) {
        std::vector<PlotLine> pur, fid;
        for (const auto& j : result.jobs) {
            if (j.engine != e || j.realization != 0 || j.status != "ok") continue;
            const ObservableSeries s = read_series_csv(out_dir / j.series_file);
            pur.push_back({"Jx=" + format_label(j.jx), s.times, s.purity});
            fid.push_back({"Jx=" + format_label(j.jx), s.times, s.fidelity});
        }
        if (pur.empty()) continue;
        write_svg_plot(out_dir / "plots" / ("purity_" + to_string(e) + ".svg"), "Purity (" + to_string(e) + ")", "t",
                       "P(t)", pur);
        write_svg_plot(out_dir / "plots" / ("fidelity_" + to_string(e) + ".svg"), "Fidelity (" + to_string(e) + ")",
                       "t", "F(t)", fid);
    }
    for (double jx : cfg.jx_list) {
        std::vector<PlotLine> pops;
        for (const auto& j : result.jobs) {
            if (j.jx != jx || j.realization != 0 || j.status != "ok") continue;
            const ObservableSeries s = read_series_csv(out_dir / j.series_file);
            pops.push_back({to_string(j.engine) + " pop0", s.times, s.pop0});
            pops.push_back({to_string(j.engine) + " pop1", s.times, s.pop1});
        }
        if (pops.empty()) continue;
        write_svg_plot(out_dir / "plots" / ("populations_jx" + format_label(jx) + ".svg"),
                       "Populations, Jx=" + format_label(jx), "t", "rho_ii", pops);
    }
    {
        PlotLine b{"mean |B|", {}, {}}, c{"mean C", {}, {}};
        for (const auto& row : result.statistics) {
            b.x.push_back(row.jx);
            b.y.push_back(row.mean_abs_bbar);
            c.x.push_back(row.jx);
            c.y.push_back(row.mean_c);
        }
        write_svg_plot(out_dir / "plots" / "statistics.svg", "Coupling statistics vs Jx", "Jx", "value", {b, c});
    }
    return result;
}

// Disorder-averaged statistics table for cfg.jx_list, using the experiment streams.
inline std::vector<StatisticsRow> statistics_table(const ExperimentConfig& cfg) {
    cfg.validate();
    ModelFamily family = [&cfg](double jx, std::size_t r) { return sample_realization(cfg, jx, r).model; };
    return statistics_vs_jx(family, cfg.jx_list, cfg.realizations, cfg.n_cut, cfg.kT, cfg.threads);
}

struct EstimationReport {
    double target_jx{0.0};
    Engine engine{Engine::exact};
    double t_final{0.0};
    double sample_dt{0.0};
    std::vector<StatisticsRow> table;
    BathStatistics probe_stats;     // bath-derived values of the probe realization
    std::string status{"pending"};  // ok | no_oscillation | series_too_short | inversion_failed
    std::string message;
    double period{std::numeric_limits<double>::quiet_NaN()};
    BBarEstimate b_bar{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    JxBand jx{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
    ObservableSeries series;

    bool ok() const { return status == "ok"; }
};

// Table from cfg.realizations streams per J_x, then one fresh probe realization at target_jx
// simulated over the long horizon; its fidelity period is inverted to B_bar and then J_x.
inline EstimationReport run_jx_estimation(const ExperimentConfig& cfg, double target_jx) {
    cfg.validate();
    if (!(target_jx >= cfg.jx_list.front() && target_jx <= cfg.jx_list.back()))
        throw ConfigError("run_jx_estimation: target_jx lies outside the jx_list range");
    EstimationReport rep;
    rep.target_jx = target_jx;
    rep.engine = cfg.estimation_engine;
    rep.t_final = cfg.t_final_long;
    rep.sample_dt = cfg.dt_long;
    rep.table = statistics_table(cfg);

    const DisorderRealization probe = detail::draw_realization(cfg, target_jx, 0, StreamPurpose::estimation_probe);
    const BathSpectrum spectrum = diagonalize_bath(probe.model, cfg.n_cut, cfg.kT);
    rep.probe_stats = bath_statistics(probe.model, spectrum);
    const std::vector<double> times = uniform_grid(cfg.t_final_long, cfg.dt_long);
    const EngineOutput run = simulate_engine(cfg, probe, spectrum, rep.probe_stats, rep.engine, times);
    rep.series = make_series(times, run.rho, cfg.b0z);

    try {
        rep.period = extract_period(rep.series, PeriodChannel::fidelity);
    } catch (const NoOscillationError& e) {
        rep.status = "no_oscillation";
        rep.message = e.what();
        return rep;
    } catch (const SeriesTooShortError& e) {
        rep.status = "series_too_short";
        rep.message = e.what();
        return rep;
    }
    rep.b_bar = estimate_bbar(rep.period, cfg.b0z);
    try {
        rep.jx = estimate_jx_band(rep.b_bar.exact, rep.table);
    } catch (const InversionError& e) {
        rep.status = "inversion_failed";
        rep.message = e.what();
        return rep;
    }
    rep.status = "ok";
    return rep;
}

inline json report_to_json(const EstimationReport& r) {
    json table = json::array();
    for (const auto& row : r.table)
        table.push_back({{"jx", row.jx},
                         {"mean_abs_bbar", row.mean_abs_bbar},
                         {"mean_c", row.mean_c},
                         {"stderr_bbar", row.stderr_bbar},
                         {"stderr_c", row.stderr_c},
                         {"realizations", row.realizations}});
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json out = {{"tool", "spinprobe"},
                {"version", kVersion},
                {"target_jx", r.target_jx},
                {"engine", to_string(r.engine)},
                {"t_final", r.t_final},
                {"sample_dt", r.sample_dt},
                {"status", r.status},
                {"probe_b_bar", r.probe_stats.b_bar},
                {"probe_c_var", r.probe_stats.c_var},
                {"fidelity_period", num(r.period)},
                {"b_bar_estimate", num(r.b_bar.exact)},
                {"b_bar_small_shift", num(r.b_bar.small_shift)},
                {"jx_estimate", num(r.jx.estimate)},
                {"jx_band", {num(r.jx.low), num(r.jx.high)}},
                {"table", table}};
    if (!r.message.empty()) out["message"] = r.message;
    return out;
}

} // namespace spinprobe
