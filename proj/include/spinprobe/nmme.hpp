// nmme.hpp: mean-field non-Markovian master equation for the detector and its Markovian limit
//
// The memory integral  int_0^t W(t-t') L_D rho(t') dt'  is carried by an auxiliary field
// chi(t,u) = f(u) int_0^t W(t-t'+u) rho(t') dt'  sampled on a uniform u grid, which turns the
// integro-differential equation into a closed set of ODEs:
//
//   d rho/dt = -i[-(B0z/2) sz + Bbar sx, rho] - 2C ( chi(t,0) - sx chi(t,0) sx )
//   d chi/dt = f(u) W(u) rho + d chi/du + 2 g u chi,         f(u) = exp(-g u^2)
//
// Information in chi travels toward decreasing u, so the largest u is the inflow end.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

#include "spinprobe/bath_thermal.hpp"
#include "spinprobe/density.hpp"
#include "spinprobe/errors.hpp"
#include "spinprobe/ode.hpp"

namespace spinprobe {

inline constexpr double kGridOffsetFraction = 0.338;
inline constexpr double kDampingExponent = 9.9;
inline constexpr double kPositivityTolerance = 1e-6;

struct MemoryKernel {
    double p{1.0};
    double q{1.0};
    std::size_t n_grid{40};
    std::size_t l_grid{13};
    double dt{0.2};
    double g{kDampingExponent / ((40.0 - 13.0) * 0.2 * (40.0 - 13.0) * 0.2)}; // 9.9 / [(n_grid - l_grid) dt]^2

    // Grid node i (0-based) sits at u_i = (n_grid - l_grid - 1 - i) dt, i.e. the 1-based
    // index map u_j = (n - l - j) dt. Node 0 is the largest u; the last l nodes are negative.
    double u(std::size_t i) const {
        return (static_cast<double>(n_grid) - static_cast<double>(l_grid) - 1.0 - static_cast<double>(i)) * dt;
    }
    std::size_t zero_index() const { return n_grid - l_grid - 1; }

    void validate() const {
        if (!std::isfinite(p) || !std::isfinite(q) || p < 0.0 || q < 0.0)
            throw ConfigError("MemoryKernel: p and q must be finite and non-negative");
        if (n_grid < 9) throw ConfigError("MemoryKernel: n_grid must be at least 9");
        if (l_grid >= n_grid) throw ConfigError("MemoryKernel: need n_grid > l_grid");
        if (!(dt > 0.0)) throw ConfigError("MemoryKernel: dt must be positive");
        if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("MemoryKernel: damping coefficient must be positive");
    }
};

inline std::size_t default_grid_offset(std::size_t n_grid) {
    return static_cast<std::size_t>(kGridOffsetFraction * static_cast<double>(n_grid));
}

inline MemoryKernel make_memory_kernel(double p, double q, std::size_t n_grid = 40, double dt = 0.2,
                                       std::optional<std::size_t> l_grid = std::nullopt) {
    MemoryKernel k;
    k.p = p;
    k.q = q;
    k.n_grid = n_grid;
    k.l_grid = l_grid.value_or(default_grid_offset(n_grid));
    k.dt = dt;
    if (k.l_grid < k.n_grid) {
        const double span = static_cast<double>(k.n_grid - k.l_grid) * dt;
        k.g = kDampingExponent / (span * span);
    }
    k.validate();
    return k;
}

// W(t) = [1 - 4/(3 pi) x + x^2/8 - 4/(45 pi) x^3] exp(-(q t)^2 / 8),  x = p|t|.
inline double memory_function(double p, double q, double t) {
    const double x = p * std::abs(t);
    const double poly = 1.0 - 4.0 / (3.0 * std::numbers::pi) * x + x * x / 8.0 - 4.0 / (45.0 * std::numbers::pi) * x * x * x;
    const double qt = q * t;
    return poly * std::exp(-qt * qt / 8.0);
}

inline double memory_function(const MemoryKernel& k, double t) { return memory_function(k.p, k.q, t); }

inline double damping_function(const MemoryKernel& k, double u) { return std::exp(-k.g * u * u); }

// int_0^inf W(t) dt, the Markovian memory time.
inline double memory_integral(double p, double q) {
    if (!(q > 0.0)) throw ConfigError("memory_integral: q must be positive for a finite memory time");
    auto w = [p, q](double t) { return memory_function(p, q, t); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(w, 0.0, std::numeric_limits<double>::infinity(),
                                                                         15, 1e-13);
}

namespace detail {

// Fornberg weights for the first derivative at x0 from samples at xs.
inline std::vector<double> first_derivative_weights(double x0, const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    // c[j][m]: weight of sample j for the m-th derivative, m = 0, 1.
    std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
    c[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    for (std::size_t i = 1; i < n; ++i) {
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

// Stencil: four nodes upwind (larger u), the node itself, three downwind.
inline constexpr std::ptrdiff_t kUpwindPoints = 4;
inline constexpr std::ptrdiff_t kDownwindPoints = 3;

// ghost_inflow: past the largest-u node the field is taken as zero instead of switching to
// a one-sided closure. chi carries the factor exp(-g u^2) ~ e^-9.9 there.
inline Eigen::MatrixXd stencil_matrix(const MemoryKernel& k, bool ghost_inflow) {
    const auto n = static_cast<std::ptrdiff_t>(k.n_grid);
    // Node position, extended to ghost indices j < 0.
    auto u_at = [&](std::ptrdiff_t j) {
        return (static_cast<double>(k.n_grid) - static_cast<double>(k.l_grid) - 1.0 - static_cast<double>(j)) * k.dt;
    };
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        std::ptrdiff_t lo = i - kUpwindPoints;
        std::ptrdiff_t hi = i + kDownwindPoints;
        if (hi > n - 1) {
            lo -= hi - (n - 1);
            hi = n - 1;
        }
        if (lo < 0 && !ghost_inflow) {
            hi -= lo;
            lo = 0;
        }
        std::vector<double> xs;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) xs.push_back(u_at(j));
        const auto w = first_derivative_weights(u_at(i), xs);
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(lo, 0); j <= hi; ++j) d(i, j) = w[static_cast<std::size_t>(j - lo)];
    }
    return d;
}

} // namespace detail

// Finite-difference d/du on the kernel grid: seventh-order upwind-biased interior stencil with
// one-sided closures of the same width at both ends. Rows follow the node order (u decreasing).
inline Eigen::MatrixXd derivative_matrix(const MemoryKernel& k) {
    k.validate();
    return detail::stencil_matrix(k, false);
}

// The operator d/du + 2 g u applied in product-rule form f d/du (chi / f), with zero inflow
// beyond the grid. Equal to D + diag(2 g u) algebraically; the spectrum must stay in the left
// half plane, which the additive form violates.
inline Eigen::MatrixXd transport_matrix(const MemoryKernel& k) {
    k.validate();
    const Eigen::MatrixXd d = detail::stencil_matrix(k, true);
    const auto n = static_cast<Eigen::Index>(k.n_grid);
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = damping_function(k, k.u(static_cast<std::size_t>(i)));
    return f.asDiagonal() * d * f.cwiseInverse().asDiagonal();
}

enum class MEMode { non_markovian, markovian };

struct MESolverConfig {
    double b_bar{0.0};
    double c_var{0.0};
    double b0z{1.0};
    MemoryKernel kernel{};
    MEMode mode{MEMode::non_markovian};
    std::optional<double> tau_b; // markovian only; defaults to int_0^inf W

    void validate() const {
        if (!std::isfinite(b_bar) || !std::isfinite(b0z)) throw ConfigError("MESolverConfig: non-finite parameter");
        if (!(c_var >= 0.0) || !std::isfinite(c_var)) throw ConfigError("MESolverConfig: c_var must be non-negative");
        if (tau_b && !(*tau_b >= 0.0)) throw ConfigError("MESolverConfig: tau_b must be non-negative");
        kernel.validate();
    }

    double markovian_memory_time() const { return tau_b ? *tau_b : memory_integral(kernel.p, kernel.q); }
};

struct KernelRates {
    double p{1.0};
    double q{1.0};
};

// Heuristic: p = q = 2 omega_rms, the rms frequency of the bath coupling correlation.
// Falls back to 1 when the coupling has no variance (the dissipator then vanishes anyway).
inline KernelRates heuristic_kernel_rates(const BathStatistics& stats) {
    if (stats.omega_rms && *stats.omega_rms > 0.0 && std::isfinite(*stats.omega_rms))
        return {2.0 * *stats.omega_rms, 2.0 * *stats.omega_rms};
    return {};
}

struct MEDiagnostics {
    double max_trace_error{0.0};
    double max_hermiticity_drift{0.0};
    double min_eigenvalue{1.0};
};

namespace detail {

inline const Eigen::Matrix2cd& sigma_x2() {
    static const Eigen::Matrix2cd sx = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
    return sx;
}

inline Eigen::Matrix2cd shifted_hamiltonian(double b0z, double b_bar) {
    Eigen::Matrix2cd h;
    h << cplx(-0.5 * b0z), cplx(b_bar), cplx(b_bar), cplx(0.5 * b0z);
    return h;
}

// -i[H, rho]
inline Eigen::Matrix2cd commutator_term(const Eigen::Matrix2cd& h, const Eigen::Matrix2cd& rho) {
    return cplx(0.0, -1.0 / SpinBathModel::hbar) * (h * rho - rho * h);
}

// X - sx X sx
inline Eigen::Matrix2cd dephasing_term(const Eigen::Matrix2cd& x) {
    const auto& sx = sigma_x2();
    return x - sx * x * sx;
}

inline ReducedDensity record_output(const Eigen::Matrix2cd& raw, MEDiagnostics& d, double t) {
    ReducedDensity r;
    r.rho = raw;
    if (!r.rho.allFinite()) throw NumericalError("master equation: non-finite density at t=" + std::to_string(t));
    d.max_hermiticity_drift = std::max(d.max_hermiticity_drift, r.hermiticity_error());
    r.symmetrize();
    d.max_trace_error = std::max(d.max_trace_error, std::abs(r.trace() - 1.0));
    const double lo = r.min_eigenvalue();
    d.min_eigenvalue = std::min(d.min_eigenvalue, lo);
    if (lo < -kPositivityTolerance)
        throw PositivityError("master equation: density eigenvalue " + std::to_string(lo) + " at t=" + std::to_string(t));
    return r;
}

inline void validate_initial(const ReducedDensity& rho0) {
    if (!rho0.is_valid(1e-10, 1e-9)) throw ConfigError("master equation: rho0 is not a valid density matrix");
}

} // namespace detail

// Non-Markovian mean-field master equation.
inline std::vector<ReducedDensity> solve_master_equation(const MESolverConfig& cfg, const ReducedDensity& rho0,
                                                         std::span<const double> times, const OdeTolerances& tol = {},
                                                         MEDiagnostics* diagnostics = nullptr) {
    cfg.validate();
    detail::validate_initial(rho0);
    validate_time_grid(times, "solve_master_equation");
    const MemoryKernel& k = cfg.kernel;
    const auto n = static_cast<Eigen::Index>(k.n_grid);
    const auto i0 = static_cast<Eigen::Index>(k.zero_index());
    const Eigen::MatrixXd transport = transport_matrix(k);
    Eigen::VectorXd source(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = k.u(static_cast<std::size_t>(i));
        source[i] = damping_function(k, u) * memory_function(k, u);
    }
    const Eigen::Matrix2cd h = detail::shifted_hamiltonian(cfg.b0z, cfg.b_bar);
    const double two_c = 2.0 * cfg.c_var / (SpinBathModel::hbar * SpinBathModel::hbar);

    // Layout: 8 doubles for rho (complex, column-major), then chi as a real n x 8 block whose
    // column pairs hold the real and imaginary parts of the four matrix entries.
    std::vector<double> x(static_cast<std::size_t>(8 + 8 * n), 0.0);
    Eigen::Map<Eigen::Matrix2cd>(reinterpret_cast<cplx*>(x.data())) = rho0.rho;

    auto rhs = [&](const std::vector<double>& xs, std::vector<double>& dxdt, double) {
        Eigen::Map<const Eigen::Matrix2cd> rho(reinterpret_cast<const cplx*>(xs.data()));
        Eigen::Map<const Eigen::Matrix<double, 1, 8>> rho_row(xs.data());
        Eigen::Map<const Eigen::MatrixXd> chi(xs.data() + 8, n, 8);
        Eigen::Matrix2cd chi0;
        for (int c = 0; c < 4; ++c) chi0(c % 2, c / 2) = cplx(chi(i0, 2 * c), chi(i0, 2 * c + 1));

        Eigen::Map<Eigen::Matrix2cd> drho(reinterpret_cast<cplx*>(dxdt.data()));
        drho = detail::commutator_term(h, rho) - two_c * detail::dephasing_term(chi0);
        Eigen::Map<Eigen::MatrixXd> dchi(dxdt.data() + 8, n, 8);
        dchi.noalias() = transport * chi;
        dchi.noalias() += source * rho_row;
    };

    std::vector<ReducedDensity> out(times.size());
    MEDiagnostics diag;
    integrate_on_grid(x, rhs, times, tol, [&](const std::vector<double>& xs, std::size_t i) {
        out[i] = detail::record_output(Eigen::Map<const Eigen::Matrix2cd>(reinterpret_cast<const cplx*>(xs.data())),
                                       diag, times[i]);
    });
    if (diagnostics) *diagnostics = diag;
    return out;
}

// Markovian limit: d rho/dt = -i[H', rho] - tau_B L_D rho.
inline std::vector<ReducedDensity> solve_markovian(const MESolverConfig& cfg, const ReducedDensity& rho0,
                                                   std::span<const double> times, const OdeTolerances& tol = {},
                                                   MEDiagnostics* diagnostics = nullptr) {
    cfg.validate();
    detail::validate_initial(rho0);
    validate_time_grid(times, "solve_markovian");
    const double tau = cfg.markovian_memory_time();
    const Eigen::Matrix2cd h = detail::shifted_hamiltonian(cfg.b0z, cfg.b_bar);
    const double rate = 2.0 * cfg.c_var * tau / (SpinBathModel::hbar * SpinBathModel::hbar);

    std::vector<double> x(8, 0.0);
    Eigen::Map<Eigen::Matrix2cd>(reinterpret_cast<cplx*>(x.data())) = rho0.rho;
    auto rhs = [&](const std::vector<double>& xs, std::vector<double>& dxdt, double) {
        Eigen::Map<const Eigen::Matrix2cd> rho(reinterpret_cast<const cplx*>(xs.data()));
        Eigen::Map<Eigen::Matrix2cd> drho(reinterpret_cast<cplx*>(dxdt.data()));
        drho = detail::commutator_term(h, rho) - rate * detail::dephasing_term(rho);
    };
    std::vector<ReducedDensity> out(times.size());
    MEDiagnostics diag;
    integrate_on_grid(x, rhs, times, tol, [&](const std::vector<double>& xs, std::size_t i) {
        out[i] = detail::record_output(Eigen::Map<const Eigen::Matrix2cd>(reinterpret_cast<const cplx*>(xs.data())),
                                       diag, times[i]);
    });
    if (diagnostics) *diagnostics = diag;
    return out;
}

inline std::vector<ReducedDensity> evolve_master_equation(const MESolverConfig& cfg, const ReducedDensity& rho0,
                                                          std::span<const double> times, const OdeTolerances& tol = {},
                                                          MEDiagnostics* diagnostics = nullptr) {
    return cfg.mode == MEMode::markovian ? solve_markovian(cfg, rho0, times, tol, diagnostics)
                                         : solve_master_equation(cfg, rho0, times, tol, diagnostics);
}

} // namespace spinprobe
