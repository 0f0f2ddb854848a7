// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.
// Criteria that cannot be met are reported as FAIL with the measured numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../unit/oracles.hpp"
#include "spinprobe/spinprobe.hpp"

using namespace spinprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.realizations = 8;
    return cfg;
}

double time_average(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Shared N=10 disorder-averaged run, every engine, short horizon. Feeds criteria 3, 5 and 8.
struct SharedRun {
    ExperimentConfig cfg;
    fs::path dir;
    ExperimentResult result;
    double seconds{0.0};
};

SharedRun& shared_run(const fs::path& out) {
    static std::optional<SharedRun> run;
    if (!run) {
        run.emplace();
        run->cfg = default_config();
        run->cfg.engines = {Engine::exact, Engine::nmme, Engine::markovian};
        run->dir = out / "short_horizon";
        const auto t0 = Clock::now();
        run->result = run_experiment(run->cfg, run->dir);
        run->seconds = seconds_since(t0);
        std::printf("  [shared N=10 run: %zu jobs in %.0f s]\n", run->result.jobs.size(), run->seconds);
    }
    return *run;
}

const JobRecord& find_job(const SharedRun& run, double jx, std::size_t r, Engine e) {
    for (const auto& j : run.result.jobs)
        if (j.jx == jx && j.realization == r && j.engine == e) return j;
    throw std::runtime_error("acceptance: job not found");
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    const auto times = uniform_grid(100.0, 0.2);
    double worst = 0;
    for (std::size_t n = 1; n <= 4; ++n)
        for (unsigned seed = 0; seed < 2; ++seed) {
            const auto m = oracle::random_model(n, 1.0, 100 * static_cast<unsigned>(n) + seed, 0.3);
            const std::size_t n_cut = std::size_t{1} << n;
            const auto ref = oracle::expm_reduced_dynamics(m, n_cut, 0.25, times);
            const auto spec = diagonalize_bath(m, n_cut, 0.25);
            for (auto backend : {ExactBackend::runge_kutta, ExactBackend::eigenbasis}) {
                ExactOptions o;
                o.backend = backend;
                const auto rho = propagate_exact(m, spec, times, o);
                for (std::size_t i = 0; i < times.size(); ++i)
                    worst = std::max(worst, (rho[i].rho - ref[i]).cwiseAbs().maxCoeff());
            }
        }
    const double secs = seconds_since(t0);
    return {worst < 1e-7 && secs < 60.0, fmt("max entry error %.3g (< 1e-7), %.1f s (< 60 s)", worst, secs)};
}

Outcome decoupled_limit() {
    auto cfg = default_config();
    cfg.lambda_max = 0.0;
    const auto times = uniform_grid(cfg.t_final_short, cfg.dt);
    double worst = 0;
    for (double jx : {0.0, 1.0}) {
        const auto real = sample_realization(cfg, jx, 0);
        const auto spec = diagonalize_bath(real.model, cfg.n_cut, cfg.kT);
        const auto st = bath_statistics(real.model, spec);
        for (Engine e : {Engine::exact, Engine::nmme}) {
            const auto s = make_series(times, simulate_engine(cfg, real, spec, st, e, times).rho, cfg.b0z);
            for (std::size_t i = 0; i < s.size(); ++i)
                worst = std::max({worst, std::abs(s.purity[i] - 1.0), std::abs(s.fidelity[i] - 1.0)});
        }
    }
    return {worst < 1e-8, fmt("max |P-1|, |F-1| = %.3g (< 1e-8), N=10, J_x in {0,1}, exact and nmme", worst)};
}

Outcome purity_trend(const fs::path& out) {
    auto& run = shared_run(out);
    std::vector<double> avg;
    std::string detail = "time-averaged exact purity:";
    for (double jx : run.cfg.jx_list) {
        double a = 0;
        for (std::size_t r = 0; r < run.cfg.realizations; ++r) {
            const auto& job = find_job(run, jx, r, Engine::exact);
            a += time_average(read_series_csv(run.dir / job.series_file).purity);
        }
        avg.push_back(a / static_cast<double>(run.cfg.realizations));
        detail += fmt(" %.4g:%.6f", jx, avg.back());
    }
    bool increasing = true;
    for (std::size_t k = 1; k < avg.size(); ++k) increasing = increasing && avg[k] > avg[k - 1];
    detail += fmt(" (R=%zu, shared run %.0f s < 1800 s)", run.cfg.realizations, run.seconds);
    return {increasing && run.seconds < 1800.0, detail};
}

Outcome statistics_trend() {
    auto cfg = default_config();
    cfg.realizations = 32;
    const auto table = statistics_table(cfg);
    bool c_down = true, b_up = true;
    std::string detail = fmt("R=%zu;", cfg.realizations);
    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto& row = table[k];
        detail += fmt(" %.4g: C=%.3g+-%.2g |B|=%.3g+-%.2g;", row.jx, row.mean_c, row.stderr_c, row.mean_abs_bbar,
                      row.stderr_bbar);
        if (k > 0) {
            c_down = c_down && row.mean_c < table[k - 1].mean_c;
            b_up = b_up && row.mean_abs_bbar > table[k - 1].mean_abs_bbar;
        }
    }
    const auto& a = table.front();
    const auto& b = table.back();
    const bool c_sep = a.mean_c - b.mean_c > a.stderr_c + b.stderr_c;
    const bool b_sep = b.mean_abs_bbar - a.mean_abs_bbar > a.stderr_bbar + b.stderr_bbar;
    detail += fmt(" C monotone=%d sep=%d, |B| monotone=%d sep=%d", c_down, c_sep, b_up, b_sep);
    return {c_down && b_up && c_sep && b_sep, detail};
}

double max_population_deviation(const ObservableSeries& a, const std::vector<ReducedDensity>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max({d, std::abs(a.pop0[i] - b[i].pop0()), std::abs(a.pop1[i] - b[i].pop1())});
    return d;
}

Outcome population_agreement(const fs::path& out) {
    auto& run = shared_run(out);
    const auto& cfg = run.cfg;
    const double jx = 1.0;
    const auto exact = read_series_csv(run.dir / find_job(run, jx, 0, Engine::exact).series_file);
    const auto nmme = read_series_csv(run.dir / find_job(run, jx, 0, Engine::nmme).series_file);
    double dev = 0;
    for (std::size_t i = 0; i < exact.size(); ++i)
        dev = std::max({dev, std::abs(exact.pop0[i] - nmme.pop0[i]), std::abs(exact.pop1[i] - nmme.pop1[i])});

    const auto real = sample_realization(cfg, jx, 0);
    const auto spec = diagonalize_bath(real.model, cfg.n_cut, cfg.kT);
    const auto st = bath_statistics(real.model, spec);
    const KernelRates base = heuristic_kernel_rates(st);
    std::string sweep;
    for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        auto c = cfg;
        c.p = c.q = s * base.p;
        try {
            const auto rho = simulate_engine(c, real, spec, st, Engine::nmme, exact.times).rho;
            sweep += fmt(" %.3g:%.4f", c.p, max_population_deviation(exact, rho));
        } catch (const NumericalError&) {
            sweep += fmt(" %.3g:failed", c.p);
        }
    }
    std::string detail = fmt("realization 0, B=%.4g C=%.3g p=q=%.4g: max |dpop| = %.4f (< 0.05); p=q sweep:%s", st.b_bar,
                             st.c_var, base.p, dev, sweep.c_str());
    return {dev < 0.05, detail};
}

Outcome shift_consistency() {
    const double b0z = 1.0;
    double overlay = 0, fid_err = 0, rabi_err = 0;
    std::string detail;
    for (double b : {0.02, 0.05, 0.1, 0.2, 0.3}) {
        const ShiftModel m = make_shift_model(b, b0z);
        const double fp = fidelity_period(m);
        const double t_final = std::ceil(3.0 * fp);
        MESolverConfig me;
        me.b_bar = b;
        me.c_var = 0.0;
        me.b0z = b0z;
        me.kernel = make_memory_kernel(1.0, 1.0, 40, 0.2);
        const auto times = uniform_grid(t_final, 0.5);
        const auto s = make_series(times, evolve_master_equation(me, initial_detector_state(), times), b0z);
        for (std::size_t i = 0; i < s.size(); ++i)
            overlay = std::max(overlay, std::abs(s.fidelity[i] - analytic_fidelity(m, s.times[i])));
        const double f_rel = std::abs(extract_period(s, PeriodChannel::fidelity) / fp - 1.0);

        const auto short_times = uniform_grid(100.0, 0.2);
        const auto ss = make_series(short_times, evolve_master_equation(me, initial_detector_state(), short_times), b0z);
        const double r_rel = std::abs(extract_period(ss, PeriodChannel::pop0) / rabi_period(m) - 1.0);
        fid_err = std::max(fid_err, f_rel);
        rabi_err = std::max(rabi_err, r_rel);
        detail += fmt(" B=%.2g: fid %.2e rabi %.2e;", b, f_rel, r_rel);
    }
    detail = fmt("overlay %.3g (< 1e-6), fidelity period rel err %.3g (< 0.02), Rabi period rel err %.3g (< 0.02);",
                 overlay, fid_err, rabi_err) +
             detail;
    return {overlay < 1e-6 && fid_err < 0.02 && rabi_err < 0.02, detail};
}

Outcome jx_round_trip() {
    auto cfg = default_config();
    cfg.t_final_long = 8000.0;
    cfg.dt_long = 1.0;
    const auto rep = run_jx_estimation(cfg, 1.0);
    std::string detail = fmt("status %s, probe B=%.4g, period %.1f (shift model %.1f), |B| est %.4g", rep.status.c_str(),
                             rep.probe_stats.b_bar, rep.period,
                             fidelity_period(make_shift_model(rep.probe_stats.b_bar, cfg.b0z)), rep.b_bar.exact);
    const bool ok = rep.status == "ok";
    if (ok) detail += fmt(", J_x %.3g in [%.3g, %.3g]", rep.jx.estimate, rep.jx.low, rep.jx.high);
    if (!rep.message.empty()) detail += " (" + rep.message + ")";
    std::string table;
    for (const auto& row : rep.table) table += fmt(" %.4g:%.4g+-%.2g", row.jx, row.mean_abs_bbar, row.stderr_bbar);
    detail += "; table" + table;
    return {ok && rep.jx.low <= 1.0 && 1.0 <= rep.jx.high, detail};
}

Outcome positivity_and_trace(const fs::path& out) {
    auto& run = shared_run(out);
    double trace = 0, min_eig = 1;
    std::size_t n = 0, failed = 0;
    for (const auto& j : run.result.jobs) {
        if (j.engine == Engine::exact) continue;
        ++n;
        if (j.status != "ok" || !j.diagnostics) {
            ++failed;
            continue;
        }
        trace = std::max(trace, j.diagnostics->max_trace_error);
        min_eig = std::min(min_eig, j.diagnostics->min_eigenvalue);
    }
    return {failed == 0 && trace <= 1e-10 && min_eig >= -1e-6,
            fmt("%zu ME runs (nmme + markovian), %zu failed; max |Tr-1| %.3g (<= 1e-10), min eigenvalue %.3g (>= -1e-6)",
                n, failed, trace, min_eig)};
}

Outcome grid_convergence() {
    auto cfg = default_config();
    const auto times = uniform_grid(cfg.t_final_short, cfg.dt);
    double worst = 0;
    std::string detail;
    for (double jx : cfg.jx_list) {
        const auto real = sample_realization(cfg, jx, 0);
        const auto spec = diagonalize_bath(real.model, cfg.n_cut, cfg.kT);
        const auto st = bath_statistics(real.model, spec);
        auto coarse = cfg;
        auto fine = cfg;
        fine.n_grid = 80;
        const auto a = simulate_engine(coarse, real, spec, st, Engine::nmme, times).rho.back();
        const auto b = simulate_engine(fine, real, spec, st, Engine::nmme, times).rho.back();
        const double d = (a.rho - b.rho).cwiseAbs().maxCoeff();
        worst = std::max(worst, d);
        detail += fmt(" %.4g:%.2e", jx, d);
    }
    return {worst < 1e-3, fmt("max entry change of rho(T) for n_grid 40 -> 80: %.3g (< 1e-3);", worst) + detail};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinprobe acceptance suite"};
    std::string out = "acceptance_out";
    std::vector<int> only;
    app.add_option("-o,--out", out, "scratch directory for experiment artifacts");
    app.add_option("--only", only, "run only these criterion numbers")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    const fs::path out_dir(out);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"oracle equivalence, N <= 4", oracle_equivalence},
        {"decoupled limit", decoupled_limit},
        {"purity increases with J_x (exact, N=10)", [&] { return purity_trend(out_dir); }},
        {"C decreases and |B| increases with J_x", statistics_trend},
        {"exact vs nmme populations at J_x = 1", [&] { return population_agreement(out_dir); }},
        {"shift-only fidelity and periods", shift_consistency},
        {"J_x round trip at 1.0", jx_round_trip},
        {"ME positivity and trace", [&] { return positivity_and_trace(out_dir); }},
        {"ME grid convergence", grid_convergence},
    };

    const std::set<int> selected(only.begin(), only.end());
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && !selected.contains(id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s  %d. %s [%.0f s]: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                    seconds_since(t0), o.detail.c_str());
        std::fflush(stdout);
    }
    if (selected.empty() || selected.contains(10))
        std::printf("EXCLUDED  10. physical energy calibration and hardware claims: units are labels only\n");
    return failures == 0 ? 0 : 1;
}
