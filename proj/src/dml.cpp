#include "dmlcrc/dml.hpp"

#include <cmath>
#include <limits>

namespace dmlcrc {

std::function<void(double)>& metric_spectrum_hook() {
    static std::function<void(double)> hook;
    return hook;
}

MetricState::MetricState(SymmetricMatrix sigma)
    : sigma_(std::move(sigma)), factor_(sigma_) {
    if (metric_spectrum_hook()) metric_spectrum_hook()(min_eigenvalue(sigma_));
}

MetricState MetricState::identity(int dim) {
    return MetricState(SymmetricMatrix::identity(dim));
}

Eigen::VectorXd MetricState::inverse_apply(const Eigen::VectorXd& v) const {
    return factor_.solve(v);
}

Eigen::MatrixXd MetricState::inverse_apply(const Eigen::MatrixXd& m) const {
    return factor_.solve(m);
}

namespace {

void check_instance(const FeatureMatrix& x, const Eigen::VectorXd& y,
                    const MetricState& metric, const char* where) {
    if (y.size() != x.dim())
        throw DimensionMismatch(std::string(where) + ": query length " +
                                std::to_string(y.size()) +
                                " does not match feature dimension " +
                                std::to_string(x.dim()));
    if (metric.dim() != x.dim())
        throw DimensionMismatch(std::string(where) + ": metric order " +
                                std::to_string(metric.dim()) +
                                " does not match feature dimension " +
                                std::to_string(x.dim()));
}

}  // namespace

double dml_cost(const FeatureMatrix& x, const Eigen::VectorXd& y,
                const ReconstructionVector& alpha, const MetricState& metric,
                const DmlHyper& hyper) {
    check_instance(x, y, metric, "dml_cost");
    if (alpha.values.size() != x.count())
        throw DimensionMismatch("dml_cost: coefficient length mismatch");
    Eigen::VectorXd residual = y - x.columns() * alpha.values;
    double data_term = residual.dot(metric.inverse_apply(residual));
    double value = data_term + hyper.lambda * alpha.values.squaredNorm() +
                   hyper.gamma * metric.sigma().entries().squaredNorm();
    if (!std::isfinite(value)) throw NonFinite("dml_cost: objective is non-finite");
    return value;
}

ReconstructionVector update_alpha(const FeatureMatrix& x, const Eigen::VectorXd& y,
                                  const MetricState& metric, double lambda) {
    check_instance(x, y, metric, "update_alpha");
    const Eigen::MatrixXd& cols = x.columns();
    try {
        Eigen::VectorXd alpha;
        if (x.dim() < x.count()) {
            // Push-through form: alpha = X^T (X X^T + lambda Sigma)^-1 y.
            // Expression-identical to the plain ridge coder at Sigma = I.
            Eigen::MatrixXd gram = cols * cols.transpose() +
                                   lambda * metric.sigma().entries();
            alpha = cols.transpose() * SpdFactor{SymmetricMatrix(gram)}.solve(y);
        } else {
            Eigen::MatrixXd weighted = metric.inverse_apply(cols);  // Sigma^-1 X
            Eigen::MatrixXd gram =
                cols.transpose() * weighted +
                lambda * Eigen::MatrixXd::Identity(x.count(), x.count());
            Eigen::VectorXd rhs = weighted.transpose() * y;
            alpha = SpdFactor{SymmetricMatrix(gram)}.solve(rhs);
        }
        return ReconstructionVector{std::move(alpha), x.partition()};
    } catch (const NotPositiveDefinite&) {
        throw SingularSystem("update_alpha: weighted Gram system is singular "
                             "(lambda too small for the data)");
    }
}

MetricState update_sigma(const FeatureMatrix& x, const Eigen::VectorXd& y,
                         const ReconstructionVector& alpha,
                         const MetricState& metric_prev, double gamma,
                         double eps_floor) {
    check_instance(x, y, metric_prev, "update_sigma");
    if (!(gamma > 0.0)) throw std::invalid_argument("update_sigma: gamma must be positive");
    if (!(eps_floor > 0.0))
        throw std::invalid_argument("update_sigma: eps_floor must be positive");

    Eigen::VectorXd residual = y - x.columns() * alpha.values;
    Eigen::VectorXd whitened = metric_prev.inverse_apply(residual);
    Eigen::MatrixXd candidate = whitened * whitened.transpose() / (2.0 * gamma);
    Eigen::MatrixXd blended = (1.0 - kSigmaDamping) * metric_prev.sigma().entries() +
                              kSigmaDamping * candidate;
    if (!blended.allFinite())
        throw NonFinite("update_sigma: candidate metric is non-finite");
    return MetricState(spd_project(blended, eps_floor));
}

AlternateResult alternate(const FeatureMatrix& x, const Eigen::VectorXd& y,
                          const DmlHyper& hyper, const MetricState& metric_init) {
    MetricState metric = metric_init;
    ReconstructionVector alpha = update_alpha(x, y, metric, hyper.lambda);
    std::vector<double> trace{dml_cost(x, y, alpha, metric, hyper)};

    for (int iter = 0; iter < hyper.inner_max_iters; ++iter) {
        metric = update_sigma(x, y, alpha, metric, hyper.gamma, hyper.eps_floor);
        alpha = update_alpha(x, y, metric, hyper.lambda);
        double cost = dml_cost(x, y, alpha, metric, hyper);
        double prev = trace.back();
        trace.push_back(cost);
        if (std::abs(cost - prev) / std::max(prev, 1e-30) < hyper.inner_tol) break;
    }
    return AlternateResult{std::move(alpha), std::move(metric), std::move(trace)};
}

Eigen::MatrixXd grad_features(const FeatureMatrix& x, const Eigen::VectorXd& y,
                              const ReconstructionVector& alpha,
                              const MetricState& metric) {
    check_instance(x, y, metric, "grad_features");
    if (alpha.values.size() != x.count())
        throw DimensionMismatch("grad_features: coefficient length mismatch");
    Eigen::VectorXd residual = y - x.columns() * alpha.values;
    return -2.0 * metric.inverse_apply(residual) * alpha.values.transpose();
}

DmlModel fine_tune(const FeatureMatrix& x0,
                   const std::vector<std::pair<Eigen::VectorXd, int>>& queries,
                   const DmlHyper& hyper) {
    if (hyper.outer_passes < 1)
        throw std::invalid_argument("fine_tune: outer_passes must be positive");
    if (hyper.eta < 0.0) throw std::invalid_argument("fine_tune: eta must be non-negative");
    for (const auto& [query, label] : queries)
        if (query.size() != x0.dim())
            throw DimensionMismatch("fine_tune: query length does not match features");

    FeatureMatrix x = x0;
    MetricState metric = MetricState::identity(x0.dim());
    for (int pass = 0; pass < hyper.outer_passes; ++pass) {
        for (const auto& [query, label] : queries) {
            AlternateResult step = [&] {
                try {
                    return alternate(x, query, hyper, metric);
                } catch (const NonFinite& e) {
                    // overflow in the inner loop is divergence of the outer one
                    throw Diverged(std::string("fine_tune: ") + e.what() +
                                   "; reduce eta");
                }
            }();
            metric = std::move(step.metric);
            if (hyper.eta != 0.0) {
                Eigen::MatrixXd updated =
                    x.columns() -
                    hyper.eta * grad_features(x, query, step.alpha, metric);
                if (!updated.allFinite())
                    throw Diverged("fine_tune: feature matrix left the finite range; "
                                   "reduce eta");
                x = FeatureMatrix(std::move(updated), x.labels());
            }
        }
    }
    return DmlModel{std::move(x), hyper, std::move(metric)};
}

int classify_dml(const DmlModel& model, const Eigen::VectorXd& y, ResidualRule rule) {
    const FeatureMatrix& x = model.x;
    check_instance(x, y, model.metric, "classify_dml");
    ReconstructionVector alpha = update_alpha(x, y, model.metric, model.hyper.lambda);

    constexpr double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd scores(x.classes());
    for (int i = 0; i < x.classes(); ++i) {
        const auto& idx = x.class_indices(i);
        double norm2 = 0.0;
        for (int col : idx) norm2 += alpha.values(col) * alpha.values(col);
        if (norm2 < kZeroSliceThreshold) {
            scores(i) = inf;
            continue;
        }
        Eigen::VectorXd recon = Eigen::VectorXd::Zero(x.dim());
        for (int col : idx) recon += alpha.values(col) * x.columns().col(col);
        Eigen::VectorXd residual = y - recon;
        double numerator = rule == ResidualRule::kMahalanobis
                               ? residual.dot(model.metric.inverse_apply(residual))
                               : residual.squaredNorm();
        scores(i) = numerator / norm2;
    }
    return argmin_residual(scores);
}

}  // namespace dmlcrc
