#include "dmlcrc/numerics.hpp"

#include <cmath>

namespace dmlcrc {

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("symmetric matrix must be square, got " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
    if (m.size() == 0)
        throw DimensionMismatch("symmetric matrix must be non-empty");
    if (!m.allFinite())
        throw NonFinite("symmetric matrix has non-finite entries");
    entries_ = (m + m.transpose()) / 2.0;
}

SymmetricMatrix SymmetricMatrix::identity(int order) {
    return SymmetricMatrix(Eigen::MatrixXd::Identity(order, order));
}

SpdFactor::SpdFactor(const SymmetricMatrix& a) : order_(a.order()) {
    llt_.compute(a.entries());
    if (llt_.info() == Eigen::Success) return;
    double jitter = 1e-10 * a.entries().trace() / a.order();
    Eigen::MatrixXd shifted = a.entries();
    shifted.diagonal().array() += jitter;
    llt_.compute(shifted);
    if (llt_.info() != Eigen::Success)
        throw NotPositiveDefinite("Cholesky factorization failed after jitter retry");
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& b) const {
    if (b.size() != order_)
        throw DimensionMismatch("solve: vector length " + std::to_string(b.size()) +
                                " does not match order " + std::to_string(order_));
    return llt_.solve(b);
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& b) const {
    if (b.rows() != order_)
        throw DimensionMismatch("solve: row count " + std::to_string(b.rows()) +
                                " does not match order " + std::to_string(order_));
    return llt_.solve(b);
}

Eigen::VectorXd solve_spd(const SymmetricMatrix& a, const Eigen::VectorXd& b) {
    return SpdFactor(a).solve(b);
}

SymmetricMatrix spd_project(const Eigen::MatrixXd& m, double floor) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("spd_project: matrix must be square");
    if (!m.allFinite()) throw NonFinite("spd_project: non-finite entries");
    if (!(floor > 0.0) || !std::isfinite(floor))
        throw std::invalid_argument("spd_project: floor must be a positive real");

    Eigen::MatrixXd sym = (m + m.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw NumericError("spd_project: eigendecomposition failed");
    Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd rebuilt =
        eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    return SymmetricMatrix(rebuilt);
}

double min_eigenvalue(const SymmetricMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.entries(),
                                                       Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

Eigen::MatrixXd finite_diff_grad(
    const std::function<double(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& x0, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
    Eigen::MatrixXd grad(x0.rows(), x0.cols());
    Eigen::MatrixXd probe = x0;
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
        for (Eigen::Index i = 0; i < x0.rows(); ++i) {
            double saved = probe(i, j);
            probe(i, j) = saved + h;
            double fp = f(probe);
            probe(i, j) = saved - h;
            double fm = f(probe);
            probe(i, j) = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NonFinite("finite_diff_grad: probe evaluated non-finite");
            grad(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return grad;
}

}  // namespace dmlcrc
