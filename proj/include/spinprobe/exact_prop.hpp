// exact_prop.hpp: thermally weighted wavefunction propagation and partial trace to the detector

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinprobe/bath_thermal.hpp"
#include "spinprobe/density.hpp"
#include "spinprobe/errors.hpp"
#include "spinprobe/ode.hpp"
#include "spinprobe/parallel.hpp"
#include "spinprobe/spin_ops.hpp"

namespace spinprobe {

// One thermal trajectory |Psi_n(t)> together with its Boltzmann weight.
struct CompositeState {
    Eigen::VectorXcd amplitudes;
    double weight{1.0};
};

enum class ExactBackend {
    runge_kutta, // adaptive RKF78 on the Schrodinger equation
    eigenbasis,  // full diagonalization of H, exact phases
};

struct ExactOptions {
    ExactBackend backend{ExactBackend::runge_kutta};
    OdeTolerances ode{};
    double norm_tolerance{1e-7};
    std::size_t threads{1};
    std::size_t max_sites{kDefaultMaxSites};
};

// (|0> + |1>)/sqrt(2)
inline Eigen::Vector2cd detector_plus_state() {
    return Eigen::Vector2cd::Constant(cplx(1.0 / std::sqrt(2.0), 0.0));
}

inline ReducedDensity initial_detector_state() {
    ReducedDensity r;
    r.rho.setConstant(cplx(0.5, 0.0));
    return r;
}

// |psi(0)> (x) |phi_n>, detector as the leading tensor factor.
inline CompositeState initial_composite_state(const BathSpectrum& spectrum, std::size_t n) {
    if (n >= spectrum.n_cut) throw DimensionError("initial_composite_state: bath state index out of range");
    const auto db = static_cast<Eigen::Index>(spectrum.dim());
    const Eigen::Vector2cd plus = detector_plus_state();
    CompositeState s;
    s.amplitudes.resize(2 * db);
    s.amplitudes.head(db) = plus[0] * spectrum.states.col(n).cast<cplx>();
    s.amplitudes.tail(db) = plus[1] * spectrum.states.col(n).cast<cplx>();
    s.weight = spectrum.populations[n];
    return s;
}

namespace detail {

// rho_ab = sum_k psi_{a,k} conj(psi_{b,k}); the bath index k runs fastest.
template <class Vec>
Eigen::Matrix2cd trace_out_bath(const Vec& psi) {
    const Eigen::Index db = psi.size() / 2;
    const auto top = psi.head(db);
    const auto bottom = psi.tail(db);
    Eigen::Matrix2cd r;
    r(0, 0) = top.squaredNorm();
    r(1, 1) = bottom.squaredNorm();
    r(0, 1) = bottom.dot(top); // Eigen's dot conjugates the left operand
    r(1, 0) = std::conj(r(0, 1));
    return r;
}

inline void check_norm(double norm, double tol, std::size_t traj, double t) {
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > tol)
        throw NumericalError("propagate_exact: norm drift " + std::to_string(norm - 1.0) + " on trajectory " +
                             std::to_string(traj) + " at t=" + std::to_string(t));
}

// Fixed-order weighted sum over trajectories.
inline std::vector<ReducedDensity> reduce_trajectories(const std::vector<std::vector<Eigen::Matrix2cd>>& per_traj,
                                                       const Eigen::VectorXd& weights, std::size_t n_times) {
    std::vector<ReducedDensity> out(n_times);
    for (std::size_t n = 0; n < per_traj.size(); ++n)
        for (std::size_t i = 0; i < n_times; ++i) out[i].rho += weights[static_cast<Eigen::Index>(n)] * per_traj[n][i];
    return out;
}

inline void propagate_rk(const XZOperator& h, const BathSpectrum& spectrum, std::span<const double> times,
                         const ExactOptions& opt, std::vector<std::vector<Eigen::Matrix2cd>>& per_traj) {
    const auto dim = static_cast<Eigen::Index>(h.dim());
    parallel_for(spectrum.n_cut, opt.threads, [&](std::size_t n) {
        const CompositeState init = initial_composite_state(spectrum, n);
        std::vector<double> x(2 * static_cast<std::size_t>(dim));
        Eigen::Map<Eigen::VectorXcd>(reinterpret_cast<cplx*>(x.data()), dim) = init.amplitudes;
        auto rhs = [&](const std::vector<double>& xs, std::vector<double>& dxdt, double) {
            Eigen::Map<const Eigen::VectorXcd> psi(reinterpret_cast<const cplx*>(xs.data()), dim);
            Eigen::Map<Eigen::VectorXcd> dpsi(reinterpret_cast<cplx*>(dxdt.data()), dim);
            h.apply(psi, dpsi);
            dpsi *= cplx(0.0, -1.0 / SpinBathModel::hbar);
        };
        auto& slots = per_traj[n];
        integrate_on_grid(x, rhs, times, opt.ode, [&](const std::vector<double>& xs, std::size_t i) {
            Eigen::Map<const Eigen::VectorXcd> psi(reinterpret_cast<const cplx*>(xs.data()), dim);
            check_norm(psi.norm(), opt.norm_tolerance, n, times[i]);
            slots[i] = trace_out_bath(psi);
        });
    });
}

inline void propagate_eigenbasis(const XZOperator& h, const BathSpectrum& spectrum, std::span<const double> times,
                                 const ExactOptions& opt, std::vector<std::vector<Eigen::Matrix2cd>>& per_traj) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.to_dense_real());
    if (es.info() != Eigen::Success) throw NumericalError("propagate_exact: eigensolver did not converge");
    const Eigen::MatrixXd& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();
    const Eigen::Index dim = v.rows();
    const Eigen::Index db = dim / 2;
    constexpr Eigen::Index kBatch = 256;

    parallel_for(spectrum.n_cut, opt.threads, [&](std::size_t n) {
        // The initial state is real, so its eigenbasis coefficients are real too.
        const Eigen::VectorXd bath = spectrum.states.col(n);
        Eigen::VectorXd psi0(dim);
        psi0.head(db) = bath / std::sqrt(2.0);
        psi0.tail(db) = bath / std::sqrt(2.0);
        const Eigen::VectorXd c = v.transpose() * psi0;

        auto& slots = per_traj[n];
        const auto nt = static_cast<Eigen::Index>(times.size());
        for (Eigen::Index start = 0; start < nt; start += kBatch) {
            const Eigen::Index len = std::min(kBatch, nt - start);
            Eigen::MatrixXd cosc(dim, len), sinc(dim, len);
            for (Eigen::Index j = 0; j < len; ++j) {
                const double t = times[static_cast<std::size_t>(start + j)] / SpinBathModel::hbar;
                cosc.col(j) = (e.array() * t).cos() * c.array();
                sinc.col(j) = -(e.array() * t).sin() * c.array();
            }
            const Eigen::MatrixXd re = v * cosc;
            const Eigen::MatrixXd im = v * sinc;
            for (Eigen::Index j = 0; j < len; ++j) {
                Eigen::VectorXcd psi(dim);
                psi.real() = re.col(j);
                psi.imag() = im.col(j);
                const auto i = static_cast<std::size_t>(start + j);
                check_norm(psi.norm(), opt.norm_tolerance, n, times[i]);
                slots[i] = trace_out_bath(psi);
            }
        }
    });
}

} // namespace detail

// Unweighted reduced density of a single composite state.
inline ReducedDensity partial_trace_bath(const CompositeState& psi) {
    if (psi.amplitudes.size() < 2 || psi.amplitudes.size() % 2 != 0)
        throw DimensionError("partial_trace_bath: amplitude dimension must be even");
    ReducedDensity r;
    r.rho = detail::trace_out_bath(psi.amplitudes);
    return r;
}

// rho_S(t) = sum_n p_n Tr_B |Psi_n(t)><Psi_n(t)| on each grid time.
inline std::vector<ReducedDensity> propagate_exact(const SpinBathModel& model, const BathSpectrum& spectrum,
                                                   std::span<const double> times, const ExactOptions& opt = {}) {
    validate_time_grid(times, "propagate_exact");
    const XZOperator h = total_hamiltonian_operator(model, opt.max_sites);
    if (spectrum.dim() != model.bath_dim())
        throw DimensionError("propagate_exact: spectrum does not match the model's bath dimension");
    std::vector<std::vector<Eigen::Matrix2cd>> per_traj(spectrum.n_cut,
                                                        std::vector<Eigen::Matrix2cd>(times.size()));
    if (opt.backend == ExactBackend::runge_kutta)
        detail::propagate_rk(h, spectrum, times, opt, per_traj);
    else
        detail::propagate_eigenbasis(h, spectrum, times, opt, per_traj);
    return detail::reduce_trajectories(per_traj, spectrum.populations, times.size());
}

inline std::vector<ReducedDensity> propagate_exact(const SpinBathModel& model, const BathSpectrum& spectrum,
                                                   const std::vector<double>& times, const ExactOptions& opt = {}) {
    return propagate_exact(model, spectrum, std::span<const double>(times), opt);
}

} // namespace spinprobe
