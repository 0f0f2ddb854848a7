// density.hpp: 2x2 reduced density of the detector qubit

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace spinprobe {

struct ReducedDensity {
    Eigen::Matrix2cd rho{Eigen::Matrix2cd::Zero()};

    double pop0() const { return rho(0, 0).real(); }
    double pop1() const { return rho(1, 1).real(); }
    std::complex<double> coherence() const { return rho(0, 1); }
    std::complex<double> trace() const { return rho.trace(); }

    double hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

    // Smallest eigenvalue of the Hermitian part.
    double min_eigenvalue() const {
        const double a = rho(0, 0).real();
        const double d = rho(1, 1).real();
        const std::complex<double> b = 0.5 * (rho(0, 1) + std::conj(rho(1, 0)));
        const double mean = 0.5 * (a + d);
        const double half_gap = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
        return mean - half_gap;
    }

    void symmetrize() { rho = 0.5 * (rho + rho.adjoint()).eval(); }

    // Hermitian with unit trace to tol; eigenvalues >= -eig_tol.
    bool is_valid(double tol = 1e-10, double eig_tol = 1e-9) const {
        return hermiticity_error() <= tol && std::abs(trace() - 1.0) <= tol &&
               min_eigenvalue() >= -eig_tol;
    }
};

} // namespace spinprobe
