// bath_thermal.hpp: bath diagonalization, truncated thermal ensemble, and coupling statistics

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinprobe/errors.hpp"
#include "spinprobe/parallel.hpp"
#include "spinprobe/spin_ops.hpp"

namespace spinprobe {

inline constexpr std::size_t kDefaultNcut = 20;
inline constexpr double kDegeneracyRelTol = 1e-9;

// Lowest eigenpairs of H_B and their Boltzmann weights.
struct BathSpectrum {
    Eigen::VectorXd energies;    // ascending, retained states only
    Eigen::MatrixXd states;      // columns are eigenvectors (H_B is real symmetric)
    std::size_t n_cut{0};        // retained count, may exceed the request to close a multiplet
    std::size_t n_requested{0};
    double kT{0.0};
    Eigen::VectorXd populations; // p_n, normalized over the retained states

    std::size_t dim() const { return static_cast<std::size_t>(states.rows()); }
};

struct BathStatistics {
    double b_bar{0.0}; // <B>
    double c_var{0.0}; // <B^2> - <B>^2, clamped at zero
    // sqrt(<[H_B,B]^dag [H_B,B]> / C): rms frequency of the coupling correlation.
    // Only available when the bath Hamiltonian is supplied.
    std::optional<double> omega_rms;
};

namespace detail {

inline bool nearly_degenerate(double a, double b) {
    return std::abs(a - b) <= kDegeneracyRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline BathSpectrum spectrum_from_eigensystem(const Eigen::VectorXd& evals, const Eigen::MatrixXd& evecs,
                                              std::size_t n_cut, double kT) {
    const std::size_t dim = static_cast<std::size_t>(evals.size());
    std::size_t keep = std::min(n_cut, dim);
    while (keep < dim && nearly_degenerate(evals[keep], evals[keep - 1])) ++keep;

    BathSpectrum s;
    s.n_requested = n_cut;
    s.n_cut = keep;
    s.kT = kT;
    s.energies = evals.head(keep);
    s.states = evecs.leftCols(keep);
    // Shift by the ground energy before exponentiating; the normalization absorbs it.
    s.populations = (-(s.energies.array() - s.energies[0]) / kT).exp();
    s.populations /= s.populations.sum();
    return s;
}

} // namespace detail

// Dense reference path: full diagonalization of H_B, then truncation to the lowest n_cut
// states (extended to close a degenerate multiplet straddling the cut).
inline BathSpectrum diagonalize_bath(const SpinBathModel& model, std::size_t n_cut = kDefaultNcut,
                                     double kT = 0.25) {
    model.validate();
    if (!(kT > 0.0) || !std::isfinite(kT)) throw ConfigError("diagonalize_bath: kT must be positive");
    if (n_cut < 1 || n_cut > model.bath_dim())
        throw ConfigError("diagonalize_bath: n_cut must lie in [1, 2^N]");
    const Eigen::MatrixXd hb = bath_hamiltonian_operator(model).to_dense_real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hb);
    if (es.info() != Eigen::Success) throw NumericalError("diagonalize_bath: eigensolver did not converge");
    return detail::spectrum_from_eigensystem(es.eigenvalues(), es.eigenvectors(), n_cut, kT);
}

// B_bar = sum_n p_n <n|B|n>,  C = sum_n p_n <n|B^2|n> - B_bar^2.
inline BathStatistics bath_statistics(const BathSpectrum& spectrum, const OperatorMatrix& coupling) {
    const auto dim = static_cast<Eigen::Index>(spectrum.dim());
    if (coupling.rows() != dim || coupling.cols() != dim)
        throw DimensionError("bath_statistics: coupling operator does not act on the bath space");
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t n = 0; n < spectrum.n_cut; ++n) {
        const Eigen::VectorXcd v = spectrum.states.col(n).cast<cplx>();
        const Eigen::VectorXcd bv = coupling * v;
        mean += spectrum.populations[n] * v.dot(bv).real();
        second += spectrum.populations[n] * bv.squaredNorm();
    }
    BathStatistics out;
    out.b_bar = mean;
    out.c_var = std::max(0.0, second - mean * mean);
    return out;
}

// Same statistics plus the rms correlation frequency, using H_B for the commutator.
inline BathStatistics bath_statistics(const BathSpectrum& spectrum, const XZOperator& coupling,
                                      const XZOperator& bath_hamiltonian) {
    const auto dim = static_cast<Eigen::Index>(spectrum.dim());
    if (static_cast<Eigen::Index>(coupling.dim()) != dim ||
        static_cast<Eigen::Index>(bath_hamiltonian.dim()) != dim)
        throw DimensionError("bath_statistics: operator dimension mismatch");
    double mean = 0.0;
    double second = 0.0;
    double commutator = 0.0;
    Eigen::VectorXd bv(dim), hbv(dim);
    for (std::size_t n = 0; n < spectrum.n_cut; ++n) {
        const auto v = spectrum.states.col(n);
        coupling.apply(v, bv);
        bath_hamiltonian.apply(bv, hbv);
        // [H_B, B]|n> = H_B B|n> - E_n B|n>
        const double p = spectrum.populations[n];
        mean += p * v.dot(bv);
        second += p * bv.squaredNorm();
        commutator += p * (hbv - spectrum.energies[n] * bv).squaredNorm();
    }
    BathStatistics out;
    out.b_bar = mean;
    out.c_var = std::max(0.0, second - mean * mean);
    if (out.c_var > 0.0) out.omega_rms = std::sqrt(commutator / out.c_var);
    return out;
}

inline BathStatistics bath_statistics(const SpinBathModel& model, const BathSpectrum& spectrum) {
    return bath_statistics(spectrum, bath_coupling_operator(model), bath_hamiltonian_operator(model));
}

// One row of the coupling-statistics table, disorder-averaged at fixed J_x.
struct StatisticsRow {
    double jx{0.0};
    double mean_abs_bbar{0.0};
    double mean_c{0.0};
    double stderr_bbar{0.0};
    double stderr_c{0.0};
    std::size_t realizations{0};
};

using ModelFamily = std::function<SpinBathModel(double jx, std::size_t realization)>;

namespace detail {

inline void mean_and_stderr(const std::vector<double>& x, double& mean, double& se) {
    const double n = static_cast<double>(x.size());
    mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    se = 0.0;
    if (x.size() < 2) return;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / (n - 1.0) / n);
}

} // namespace detail

// Disorder-averaged |B_bar| and C for each J_x. Realizations are independent jobs; the
// per-row reduction runs in realization order.
inline std::vector<StatisticsRow> statistics_vs_jx(const ModelFamily& family, const std::vector<double>& jx_grid,
                                                   std::size_t realizations, std::size_t n_cut = kDefaultNcut,
                                                   double kT = 0.25, std::size_t threads = 1) {
    if (jx_grid.empty()) throw ConfigError("statistics_vs_jx: jx_grid is empty");
    if (realizations < 1) throw ConfigError("statistics_vs_jx: need at least one realization");
    const std::size_t jobs = jx_grid.size() * realizations;
    std::vector<BathStatistics> stats(jobs);
    parallel_for(jobs, threads, [&](std::size_t k) {
        const std::size_t row = k / realizations;
        const std::size_t r = k % realizations;
        const SpinBathModel m = family(jx_grid[row], r);
        stats[k] = bath_statistics(m, diagonalize_bath(m, n_cut, kT));
    });
    std::vector<StatisticsRow> table;
    for (std::size_t row = 0; row < jx_grid.size(); ++row) {
        std::vector<double> b, c;
        for (std::size_t r = 0; r < realizations; ++r) {
            b.push_back(std::abs(stats[row * realizations + r].b_bar));
            c.push_back(stats[row * realizations + r].c_var);
        }
        StatisticsRow out;
        out.jx = jx_grid[row];
        out.realizations = realizations;
        detail::mean_and_stderr(b, out.mean_abs_bbar, out.stderr_bbar);
        detail::mean_and_stderr(c, out.mean_c, out.stderr_c);
        table.push_back(out);
    }
    return table;
}

} // namespace spinprobe
