// spinprobe_main.cpp: command-line entry point: run, estimate-jx, stats, validate-config
//
// Every configuration key is also a long option, so a key=value config file (--config) can be
// overridden flag by flag. Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinprobe/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RawOptions {
    std::vector<std::string> engines{"exact", "nmme"};
    std::string horizon{"short"};
    std::string exact_backend{"eigenbasis"};
    std::string estimation_engine{"exact"};
};

void bind_config(CLI::App& app, spinprobe::ExperimentConfig& c, RawOptions& raw) {
    app.add_option("--schema_version", c.schema_version, "Config schema version")->capture_default_str();
    app.add_option("--n_bath", c.n_bath, "Number of bath spins")->capture_default_str();
    app.add_option("--b0z", c.b0z, "Detector splitting")->capture_default_str();
    app.add_option("--delta", c.delta, "Width of the bath field distribution")->capture_default_str();
    app.add_option("--lambda_max", c.lambda_max, "Detector-bath coupling range")->capture_default_str();
    app.add_option("--jx_list", c.jx_list, "Intra-bath coupling ranges")->capture_default_str()->delimiter(',');
    app.add_option("--kT", c.kT, "Bath temperature")->capture_default_str();
    app.add_option("--dt", c.dt, "Memory grid spacing and short-horizon sampling step")->capture_default_str();
    app.add_option("--t_final_short", c.t_final_short, "Short horizon")->capture_default_str();
    app.add_option("--t_final_long", c.t_final_long, "Long horizon")->capture_default_str();
    app.add_option("--dt_long", c.dt_long, "Long-horizon sampling step")->capture_default_str();
    app.add_option("--horizon", raw.horizon, "Horizon used by run: short|long")->capture_default_str();
    app.add_option("--n_cut", c.n_cut, "Retained bath eigenstates")->capture_default_str();
    app.add_option("--n_grid", c.n_grid, "Memory grid points")->capture_default_str();
    app.add_option("--l_grid", c.l_grid, "Memory grid offset (0: automatic)")->capture_default_str();
    app.add_option("--seed", c.seed, "Disorder seed")->capture_default_str();
    app.add_option("--realizations", c.realizations, "Disorder realizations per Jx")->capture_default_str();
    app.add_option("--engines", raw.engines, "Engines: exact,nmme,markovian")->capture_default_str()->delimiter(',');
    app.add_option("--p", c.p, "Memory kernel p (0: heuristic)")->capture_default_str();
    app.add_option("--q", c.q, "Memory kernel q (0: heuristic)")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();
    app.add_option("--exact_backend", raw.exact_backend, "eigenbasis|runge_kutta")->capture_default_str();
    app.add_option("--estimation_engine", raw.estimation_engine, "Engine for the Jx probe run")->capture_default_str();
}

void finish_config(spinprobe::ExperimentConfig& c, const RawOptions& raw) {
    c.engines.clear();
    for (const auto& e : raw.engines) c.engines.push_back(spinprobe::parse_engine(e));
    c.horizon = spinprobe::parse_horizon(raw.horizon);
    c.exact_backend = spinprobe::parse_exact_backend(raw.exact_backend);
    c.estimation_engine = spinprobe::parse_engine(raw.estimation_engine);
    c.validate();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Central-spin probe of intra-bath coupling"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value configuration file");
    spinprobe::ExperimentConfig cfg;
    RawOptions raw;
    bind_config(app, cfg, raw);

    std::string out_dir = "run";
    auto* run = app.add_subcommand("run", "Run every (Jx, realization, engine) job and write a run directory")->fallthrough();
    run->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();

    double target = 1.0;
    std::string report_path;
    auto* est = app.add_subcommand("estimate-jx", "Estimate Jx of a fresh realization from its fidelity period")->fallthrough();
    est->add_option("--target", target, "Jx of the probe realization")->capture_default_str();
    est->add_option("-o,--out", report_path, "Write the JSON report here (default: stdout)");
    std::string series_path;
    est->add_option("--series", series_path, "Also write the probe time series CSV here");

    std::string stats_path;
    auto* stats = app.add_subcommand("stats", "Disorder-averaged |B| and C for each Jx")->fallthrough();
    stats->add_option("-o,--out", stats_path, "Write the CSV here (default: stdout)");

    auto* check = app.add_subcommand("validate-config", "Parse and validate the configuration, print it as JSON")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        finish_config(cfg, raw);
        if (*check) {
            std::cout << spinprobe::config_to_json(cfg).dump(2) << '\n';
            return kExitOk;
        }
        if (*run) {
            const auto result = spinprobe::run_experiment(cfg, out_dir);
            std::size_t failed = 0;
            for (const auto& j : result.jobs)
                if (j.status != "ok") {
                    ++failed;
                    std::cerr << "job jx=" << j.jx << " r=" << j.realization << " " << spinprobe::to_string(j.engine)
                              << ": " << j.status << ": " << j.message << '\n';
                }
            std::cerr << result.jobs.size() - failed << "/" << result.jobs.size() << " jobs ok, output in " << out_dir
                      << '\n';
            return failed == 0 ? kExitOk : kExitNumerical;
        }
        if (*est) {
            const auto report = spinprobe::run_jx_estimation(cfg, target);
            const std::string text = spinprobe::report_to_json(report).dump(2) + "\n";
            if (report_path.empty()) std::cout << text;
            else spinprobe::detail::open_for_write(report_path) << text;
            if (!series_path.empty()) spinprobe::write_series_csv(series_path, report.series);
            // no_oscillation is a reportable result and exits 0.
            return report.ok() || report.status == "no_oscillation" ? kExitOk : kExitNumerical;
        }
        if (*stats) {
            const auto table = spinprobe::statistics_table(cfg);
            if (stats_path.empty()) {
                std::cout << "jx,mean_abs_bbar,mean_c,stderr_bbar,stderr_c\n";
                for (const auto& r : table)
                    std::cout << spinprobe::format_double(r.jx) << ',' << spinprobe::format_double(r.mean_abs_bbar) << ','
                              << spinprobe::format_double(r.mean_c) << ',' << spinprobe::format_double(r.stderr_bbar)
                              << ',' << spinprobe::format_double(r.stderr_c) << '\n';
            } else {
                spinprobe::write_statistics_csv(stats_path, table);
            }
            return kExitOk;
        }
    } catch (const spinprobe::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const spinprobe::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
