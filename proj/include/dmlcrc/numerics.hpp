#pragma once

#include <Eigen/Dense>
#include <functional>

#include "dmlcrc/errors.hpp"

namespace dmlcrc {

/// Dense symmetric matrix. Construction symmetrizes the input as
/// (M + M^T) / 2, which yields exact entrywise symmetry in floating point,
/// and rejects non-finite entries.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(const Eigen::MatrixXd& m);

    static SymmetricMatrix identity(int order);

    int order() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXd& entries() const { return entries_; }

private:
    Eigen::MatrixXd entries_;
};

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// If the factorization hits a non-positive pivot, one retry is made with
/// jitter 1e-10 * trace / order added to the diagonal (Gram matrices with a
/// tiny ridge can be numerically semi-definite); a second failure throws
/// NotPositiveDefinite.
class SpdFactor {
public:
    explicit SpdFactor(const SymmetricMatrix& a);

    int order() const { return order_; }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    int order_ = 0;
};

/// Solves A x = b for symmetric positive definite A.
Eigen::VectorXd solve_spd(const SymmetricMatrix& a, const Eigen::VectorXd& b);

/// Nearest-style SPD projection: symmetrize M, eigendecompose, clamp every
/// eigenvalue to at least `floor`, and reassemble. Idempotent, and the result
/// has minimum eigenvalue >= floor (up to roundoff).
SymmetricMatrix spd_project(const Eigen::MatrixXd& m, double floor);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const SymmetricMatrix& a);

/// Central-difference gradient of a scalar function of a matrix:
/// G(i,j) = (f(X0 + h e_ij) - f(X0 - h e_ij)) / (2h).
/// Throws NonFinite if any probe evaluates to a non-finite value.
Eigen::MatrixXd finite_diff_grad(
    const std::function<double(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& x0, double h = 1e-5);

}  // namespace dmlcrc
