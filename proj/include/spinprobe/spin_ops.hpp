// spin_ops.hpp: Pauli tensor algebra and the detector + spin-bath Hamiltonians

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinprobe/errors.hpp"

namespace spinprobe {

using cplx = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

enum class Axis { x, y, z };

inline constexpr std::size_t kDefaultMaxSites = 14;

// Detector (site 0) plus N bath spins. Energies in units of epsilon, hbar = 1.
struct SpinBathModel {
    std::size_t n_bath{0};
    double b0z{1.0};
    std::vector<double> bx;     // bath x-fields, one per bath spin
    std::vector<double> bz;     // bath z-fields
    std::vector<double> lambda; // detector-bath couplings
    std::vector<double> jx;     // intra-bath couplings, packed strictly upper triangle (i<j)

    static constexpr double hbar = 1.0;

    SpinBathModel() = default;

    // Zero fields and couplings for n bath spins.
    explicit SpinBathModel(std::size_t n, double detector_splitting = 1.0)
        : n_bath(n), b0z(detector_splitting), bx(n, 0.0), bz(n, 0.0), lambda(n, 0.0),
          jx(pair_count(n), 0.0) {}

    static constexpr std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

    // Packed offset of the (i, j) coupling, bath indices 0..N-1.
    std::size_t pair_index(std::size_t i, std::size_t j) const {
        if (i == j || i >= n_bath || j >= n_bath)
            throw DimensionError("pair_index: need distinct bath indices below n_bath");
        if (i > j) std::swap(i, j);
        return i * (2 * n_bath - i - 1) / 2 + (j - i - 1);
    }

    double coupling(std::size_t i, std::size_t j) const { return jx[pair_index(i, j)]; }
    void set_coupling(std::size_t i, std::size_t j, double v) { jx[pair_index(i, j)] = v; }

    void validate() const {
        if (n_bath < 1) throw ConfigError("SpinBathModel: n_bath must be at least 1");
        if (bx.size() != n_bath || bz.size() != n_bath || lambda.size() != n_bath)
            throw DimensionError("SpinBathModel: field/coupling arrays must have n_bath entries");
        if (jx.size() != pair_count(n_bath))
            throw DimensionError("SpinBathModel: jx must hold n_bath*(n_bath-1)/2 pair couplings");
        auto finite = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        if (!std::isfinite(b0z) || !finite(bx) || !finite(bz) || !finite(lambda) || !finite(jx))
            throw ConfigError("SpinBathModel: non-finite parameter");
    }

    std::size_t bath_dim() const { return std::size_t{1} << n_bath; }
    std::size_t total_dim() const { return std::size_t{1} << (n_bath + 1); }
};

namespace detail {

// Site 0 is the most significant bit of the basis index.
inline std::uint64_t site_mask(std::size_t site, std::size_t n_sites) {
    return std::uint64_t{1} << (n_sites - 1 - site);
}

} // namespace detail

// 1 (x) ... (x) sigma_axis (x) ... (x) 1 on n_sites qubits.
// Convention: sigma_z|0> = +|0>, sigma_x|0> = |1>.
inline OperatorMatrix pauli(Axis axis, std::size_t site, std::size_t n_sites) {
    if (n_sites == 0 || site >= n_sites)
        throw DimensionError("pauli: site " + std::to_string(site) + " out of range for " +
                             std::to_string(n_sites) + " sites");
    if (n_sites > 20) throw DimensionError("pauli: too many sites for a dense matrix");
    const std::size_t dim = std::size_t{1} << n_sites;
    const std::uint64_t mask = detail::site_mask(site, n_sites);
    OperatorMatrix m = OperatorMatrix::Zero(dim, dim);
    for (std::size_t s = 0; s < dim; ++s) {
        const bool up = (s & mask) == 0;
        switch (axis) {
        case Axis::x: m(s ^ mask, s) = 1.0; break;
        case Axis::y: m(s ^ mask, s) = up ? cplx(0.0, 1.0) : cplx(0.0, -1.0); break;
        case Axis::z: m(s, s) = up ? 1.0 : -1.0; break;
        }
    }
    return m;
}

// Real operator of the form diag(d) + sum_m c_m X^{mask_m}, where X^{mask} flips every
// qubit in mask. Every Hamiltonian of the model fits this form; H|psi> costs O(dim * #terms).
class XZOperator {
public:
    struct FlipTerm {
        std::uint64_t mask;
        double coeff;
    };

    explicit XZOperator(std::size_t n_sites = 0)
        : n_sites_(n_sites), diag_(Eigen::VectorXd::Zero(std::size_t{1} << n_sites)) {}

    std::size_t n_sites() const { return n_sites_; }
    std::size_t dim() const { return static_cast<std::size_t>(diag_.size()); }
    const Eigen::VectorXd& diagonal() const { return diag_; }
    const std::vector<FlipTerm>& flips() const { return flips_; }

    void add_z(std::size_t site, double coeff) {
        check_site(site);
        const auto mask = detail::site_mask(site, n_sites_);
        for (std::size_t s = 0; s < dim(); ++s) diag_[s] += (s & mask) ? -coeff : coeff;
    }

    void add_identity(double coeff) { diag_.array() += coeff; }

    // coeff * prod_{site in sites} sigma_x^{(site)}
    void add_x_string(std::initializer_list<std::size_t> sites, double coeff) {
        if (coeff == 0.0) return;
        std::uint64_t mask = 0;
        for (auto s : sites) {
            check_site(s);
            mask ^= detail::site_mask(s, n_sites_);
        }
        for (auto& t : flips_) {
            if (t.mask == mask) {
                t.coeff += coeff;
                return;
            }
        }
        flips_.push_back({mask, coeff});
    }

    // out = H * in, column by column. out must not alias in.
    template <class In, class Out>
    void apply(const Eigen::MatrixBase<In>& in, Eigen::MatrixBase<Out>& out) const {
        const Eigen::Index d = static_cast<Eigen::Index>(dim());
        for (Eigen::Index c = 0; c < in.cols(); ++c) {
            for (Eigen::Index s = 0; s < d; ++s) out(s, c) = diag_[s] * in(s, c);
            for (const auto& t : flips_) {
                const auto mask = static_cast<Eigen::Index>(t.mask);
                for (Eigen::Index s = 0; s < d; ++s) out(s, c) += t.coeff * in(s ^ mask, c);
            }
        }
    }

    Eigen::MatrixXd to_dense_real() const {
        Eigen::MatrixXd m = diag_.asDiagonal();
        for (const auto& t : flips_)
            for (std::size_t s = 0; s < dim(); ++s) m(s ^ t.mask, s) += t.coeff;
        return m;
    }

    OperatorMatrix to_dense() const { return to_dense_real().cast<cplx>(); }

private:
    void check_site(std::size_t site) const {
        if (site >= n_sites_) throw DimensionError("XZOperator: site out of range");
    }

    std::size_t n_sites_;
    Eigen::VectorXd diag_;
    std::vector<FlipTerm> flips_;
};

// Bath operators act on N qubits, bath spin i at position i.
inline XZOperator bath_coupling_operator(const SpinBathModel& m) {
    m.validate();
    XZOperator op(m.n_bath);
    for (std::size_t i = 0; i < m.n_bath; ++i) op.add_x_string({i}, m.lambda[i]);
    return op;
}

inline XZOperator bath_hamiltonian_operator(const SpinBathModel& m) {
    m.validate();
    XZOperator op(m.n_bath);
    for (std::size_t i = 0; i < m.n_bath; ++i) {
        op.add_x_string({i}, -0.5 * m.bx[i]);
        op.add_z(i, -0.5 * m.bz[i]);
    }
    for (std::size_t i = 0; i < m.n_bath; ++i)
        for (std::size_t j = i + 1; j < m.n_bath; ++j) op.add_x_string({i, j}, m.coupling(i, j));
    return op;
}

// Full operator on N+1 qubits, detector at site 0, bath spin i at site i+1.
inline XZOperator total_hamiltonian_operator(const SpinBathModel& m,
                                             std::size_t max_sites = kDefaultMaxSites) {
    m.validate();
    const std::size_t n = m.n_bath + 1;
    if (n > max_sites)
        throw DimensionError("total Hamiltonian: " + std::to_string(n) +
                             " sites exceeds the configured maximum of " + std::to_string(max_sites));
    XZOperator op(n);
    op.add_z(0, -0.5 * m.b0z);
    for (std::size_t i = 0; i < m.n_bath; ++i) {
        op.add_x_string({0, i + 1}, m.lambda[i]);
        op.add_x_string({i + 1}, -0.5 * m.bx[i]);
        op.add_z(i + 1, -0.5 * m.bz[i]);
    }
    for (std::size_t i = 0; i < m.n_bath; ++i)
        for (std::size_t j = i + 1; j < m.n_bath; ++j) op.add_x_string({i + 1, j + 1}, m.coupling(i, j));
    return op;
}

// H_S = -(1/2) B0z sigma_z on the detector.
inline OperatorMatrix build_system_hamiltonian(const SpinBathModel& m) {
    m.validate();
    OperatorMatrix h = OperatorMatrix::Zero(2, 2);
    h(0, 0) = -0.5 * m.b0z;
    h(1, 1) = 0.5 * m.b0z;
    return h;
}

// B = sum_i lambda_i sigma_x^{(i)}; the detector factor sigma_x^{(0)} is left to callers.
inline OperatorMatrix build_bath_coupling(const SpinBathModel& m) {
    return bath_coupling_operator(m).to_dense();
}

inline OperatorMatrix build_bath_hamiltonian(const SpinBathModel& m) {
    return bath_hamiltonian_operator(m).to_dense();
}

// H_S (x) 1 + sigma_x (x) B + 1 (x) H_B
inline OperatorMatrix build_total_hamiltonian(const SpinBathModel& m,
                                              std::size_t max_sites = kDefaultMaxSites) {
    return total_hamiltonian_operator(m, max_sites).to_dense();
}

// max |H - H^dagger| relative to max |H| (zero for the zero matrix).
inline double hermiticity_error(const OperatorMatrix& h) {
    const double scale = h.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

} // namespace spinprobe
