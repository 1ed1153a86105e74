#include <doctest.h>

#include <cmath>
#include <limits>

#include "dmlcrc/numerics.hpp"
#include "dmlcrc/rng.hpp"
#include "oracles.hpp"

using namespace dmlcrc;

TEST_CASE("solve_spd: identity and diagonal") {
    Eigen::VectorXd b(2);
    b << 3, 4;
    Eigen::VectorXd x = solve_spd(SymmetricMatrix::identity(2), b);
    CHECK(x(0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(x(1) == doctest::Approx(4.0).epsilon(1e-14));

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 4;
    Eigen::VectorXd b2(2);
    b2 << 2, 4;
    Eigen::VectorXd x2 = solve_spd(SymmetricMatrix(d), b2);
    CHECK(x2(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x2(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("solve_spd matches a Gaussian-elimination oracle on random SPD systems") {
    RandomStream rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd m = rng.gaussian_matrix(8, 8);
        Eigen::MatrixXd a = m.transpose() * m + Eigen::MatrixXd::Identity(8, 8);
        Eigen::VectorXd b = rng.gaussian_vector(8);
        Eigen::VectorXd x = solve_spd(SymmetricMatrix(a), b);
        Eigen::VectorXd ref = oracle::gauss_solve(a, b);
        CHECK((x - ref).norm() / ref.norm() <= 1e-10);
    }
}

TEST_CASE("solve_spd residual contract on well-conditioned systems") {
    RandomStream rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_below(10));
        Eigen::MatrixXd m = rng.gaussian_matrix(n, n);
        Eigen::MatrixXd a = m.transpose() * m + Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd b = rng.gaussian_vector(n);
        Eigen::VectorXd x = solve_spd(SymmetricMatrix(a), b);
        CHECK((a * x - b).norm() / b.norm() <= 1e-10);
    }
}

TEST_CASE("solve_spd errors") {
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1, 0, 0, -1;
    Eigen::VectorXd b(2);
    b << 1, 1;
    CHECK_THROWS_AS(solve_spd(SymmetricMatrix(indefinite), b), NotPositiveDefinite);

    Eigen::VectorXd wrong(3);
    CHECK_THROWS_AS(solve_spd(SymmetricMatrix::identity(2), wrong), DimensionMismatch);

    // exactly singular PSD matrix with positive trace survives the jitter retry
    Eigen::MatrixXd rank_one(2, 2);
    rank_one << 1, 1, 1, 1;
    Eigen::VectorXd rhs(2);
    rhs << 1, 1;
    Eigen::VectorXd x = solve_spd(SymmetricMatrix(rank_one), rhs);
    CHECK(x.allFinite());
}

TEST_CASE("SymmetricMatrix symmetrizes exactly and rejects non-finite input") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 4, 3;
    SymmetricMatrix s(m);
    CHECK(s.entries()(0, 1) == s.entries()(1, 0));
    CHECK(s.entries()(0, 1) == doctest::Approx(3.0));

    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SymmetricMatrix{m}, NonFinite);
    CHECK_THROWS_AS(SymmetricMatrix{Eigen::MatrixXd::Zero(2, 3)}, DimensionMismatch);
}

TEST_CASE("spd_project: identity passes through") {
    SymmetricMatrix s = spd_project(Eigen::MatrixXd::Identity(3, 3), 1e-4);
    CHECK((s.entries() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("spd_project: clamps negative eigenvalues of a diagonal matrix") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = -1;
    m(1, 1) = 2;
    SymmetricMatrix s = spd_project(m, 0.01);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
    expected(0, 0) = 0.01;
    expected(1, 1) = 2;
    CHECK((s.entries() - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("spd_project: exchange matrix against the Jacobi eigensolver oracle") {
    Eigen::MatrixXd m(2, 2);
    m << 0, 1, 1, 0;  // eigenpairs: 1 with (1,1)/sqrt2, -1 with (1,-1)/sqrt2
    SymmetricMatrix s = spd_project(m, 0.01);

    // hand-computed projection: 1 * vv^T + 0.01 * ww^T
    Eigen::MatrixXd expected(2, 2);
    expected << 0.505, 0.495, 0.495, 0.505;
    CHECK((s.entries() - expected).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd vectors;
    oracle::jacobi_eig(s.entries(), eigenvalues, vectors);
    double lo = eigenvalues.minCoeff(), hi = eigenvalues.maxCoeff();
    CHECK(lo == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-10));
    // eigenvector of the large eigenvalue is (1,1)/sqrt2 up to sign
    int hi_col = eigenvalues(0) > eigenvalues(1) ? 0 : 1;
    Eigen::VectorXd v = vectors.col(hi_col);
    CHECK(std::abs(std::abs(v(0)) - 1.0 / std::sqrt(2.0)) <= 1e-10);
    CHECK(std::abs(v(0) - v(1)) <= 1e-10);
}

TEST_CASE("spd_project properties: idempotence and eigenvalue floor") {
    RandomStream rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_below(7));
        Eigen::MatrixXd m = rng.gaussian_matrix(n, n);
        double floor = trial % 2 == 0 ? 1e-4 : 0.37;
        SymmetricMatrix once = spd_project(m, floor);
        SymmetricMatrix twice = spd_project(once.entries(), floor);
        CHECK((once.entries() - twice.entries()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(min_eigenvalue(once) >= floor - 1e-12);
    }
}

TEST_CASE("spd_project errors") {
    CHECK_THROWS_AS(spd_project(Eigen::MatrixXd::Zero(2, 3), 0.1), DimensionMismatch);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(spd_project(bad, 0.1), NonFinite);
}

TEST_CASE("finite_diff_grad: linear and quadratic analytic cases") {
    Eigen::MatrixXd x0(3, 4);
    RandomStream rng(3);
    x0 = rng.gaussian_matrix(3, 4);

    auto sum_entries = [](const Eigen::MatrixXd& m) { return m.sum(); };
    Eigen::MatrixXd g = finite_diff_grad(sum_entries, x0, 1e-5);
    CHECK((g - Eigen::MatrixXd::Ones(3, 4)).cwiseAbs().maxCoeff() <= 1e-9);

    auto frob2 = [](const Eigen::MatrixXd& m) { return m.squaredNorm(); };
    Eigen::MatrixXd g2 = finite_diff_grad(frob2, x0, 1e-5);
    CHECK((g2 - 2.0 * x0).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("finite_diff_grad recovers (Q + Q^T) x on quadratic forms") {
    RandomStream rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        int n = 3 + static_cast<int>(rng.uniform_below(4));
        Eigen::MatrixXd q = rng.gaussian_matrix(n, n);
        Eigen::VectorXd x0 = rng.gaussian_vector(n);
        auto quad = [&](const Eigen::MatrixXd& m) {
            Eigen::VectorXd v = m.col(0);
            return double(v.transpose() * q * v);
        };
        Eigen::MatrixXd g = finite_diff_grad(quad, x0, 1e-5);
        Eigen::VectorXd expected = (q + q.transpose()) * x0;
        CHECK((g.col(0) - expected).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("finite_diff_grad rejects non-finite probes") {
    auto bad = [](const Eigen::MatrixXd& m) {
        return m(0, 0) > 0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    CHECK_THROWS_AS(finite_diff_grad(bad, Eigen::MatrixXd::Zero(1, 1), 1e-5), NonFinite);
}
