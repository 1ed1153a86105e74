// Independent reference implementations used only by tests. These must not
// share code paths with the library: the solver is plain Gaussian elimination
// with partial pivoting, the eigensolver is cyclic Jacobi, and the ridge
// minimizer is an accelerated first-principles gradient descent with a
// gradient-norm certificate.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace oracle {

inline Eigen::VectorXd gauss_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const int n = static_cast<int>(a.rows());
    for (int k = 0; k < n; ++k) {
        int pivot = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
        if (a(pivot, k) == 0.0) throw std::runtime_error("gauss_solve: singular");
        if (pivot != k) {
            a.row(pivot).swap(a.row(k));
            std::swap(b(pivot), b(k));
        }
        for (int i = k + 1; i < n; ++i) {
            double factor = a(i, k) / a(k, k);
            a.row(i).tail(n - k) -= factor * a.row(k).tail(n - k);
            b(i) -= factor * b(k);
        }
    }
    Eigen::VectorXd x(n);
    for (int i = n - 1; i >= 0; --i) {
        double sum = b(i);
        for (int j = i + 1; j < n; ++j) sum -= a(i, j) * x(j);
        x(i) = sum / a(i, i);
    }
    return x;
}

inline Eigen::MatrixXd gauss_inverse(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXd inv(n, n);
    for (int j = 0; j < n; ++j)
        inv.col(j) = gauss_solve(a, Eigen::VectorXd::Unit(n, j));
    return inv;
}

// Cyclic Jacobi rotations; eigenvalues land on the diagonal, accumulated
// rotations give the eigenvectors (columns of v).
inline void jacobi_eig(const Eigen::MatrixXd& s, Eigen::VectorXd& eigenvalues,
                       Eigen::MatrixXd& v) {
    const int n = static_cast<int>(s.rows());
    Eigen::MatrixXd a = s;
    v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-28) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
                rot(p, p) = c;
                rot(q, q) = c;
                rot(p, q) = sn;
                rot(q, p) = -sn;
                a = rot.transpose() * a * rot;
                v = v * rot;
            }
        }
    }
    eigenvalues = a.diagonal();
}

// Minimizes |y - X a|^2 + lambda |a|^2 by Nesterov-accelerated gradient
// descent from first principles, iterating until the gradient infinity norm
// certifies the answer: for a 2*lambda-strongly-convex objective,
// |a - a*|_2 <= |grad|_2 / (2 lambda).
inline Eigen::VectorXd ridge_descent(const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y, double lambda,
                                     double grad_tol = 1e-10,
                                     int max_iters = 400000) {
    const int n = static_cast<int>(x.cols());
    // Lipschitz constant of the gradient via power iteration on X^T X
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n).normalized();
    double top = 1.0;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd w = x.transpose() * (x * u);
        top = w.norm();
        if (top == 0.0) break;
        u = w / top;
    }
    double lip = 2.0 * (1.02 * top + lambda);
    double mu = 2.0 * lambda;
    double momentum = (std::sqrt(lip) - std::sqrt(mu)) / (std::sqrt(lip) + std::sqrt(mu));

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd a_prev = a;
    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::VectorXd probe = a + momentum * (a - a_prev);
        Eigen::VectorXd grad =
            2.0 * (x.transpose() * (x * probe - y) + lambda * probe);
        a_prev = a;
        a = probe - grad / lip;
        Eigen::VectorXd grad_at_a = 2.0 * (x.transpose() * (x * a - y) + lambda * a);
        if (grad_at_a.lpNorm<Eigen::Infinity>() <= grad_tol) return a;
    }
    throw std::runtime_error("ridge_descent: no certificate within iteration budget");
}

}  // namespace oracle
