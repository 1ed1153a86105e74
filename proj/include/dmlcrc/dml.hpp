#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "dmlcrc/crc.hpp"
#include "dmlcrc/dataset.hpp"
#include "dmlcrc/numerics.hpp"

namespace dmlcrc {

/// Regularization and loop-control parameters of the metric-learned coder.
///
/// lambda and gamma weight the coefficient and metric regularizers; there is
/// no canonical value for either, so the harness exposes both as flags.
/// eps_floor is the eigenvalue floor applied when the metric is rebuilt, and
/// eta the step size of the feature-matrix update.
struct DmlHyper {
    double lambda = 1e-3;
    double gamma = 0.1;
    double eps_floor = 1e-4;
    int inner_max_iters = 50;
    double inner_tol = 1e-6;
    double eta = 1e-3;
    int outer_passes = 1;
};

/// Blend weight of the damped metric fixed-point step.
inline constexpr double kSigmaDamping = 0.5;

/// SPD Mahalanobis matrix with a cached factorization of itself, so applying
/// the inverse is a pair of triangular solves.
class MetricState {
public:
    explicit MetricState(SymmetricMatrix sigma);
    static MetricState identity(int dim);

    int dim() const { return sigma_.order(); }
    const SymmetricMatrix& sigma() const { return sigma_; }

    Eigen::VectorXd inverse_apply(const Eigen::VectorXd& v) const;
    Eigen::MatrixXd inverse_apply(const Eigen::MatrixXd& m) const;

private:
    SymmetricMatrix sigma_;
    SpdFactor factor_;
};

/// Test hook: when set, called with the minimum eigenvalue of every metric
/// constructed. Lets invariant checks watch the full history of metrics an
/// optimization run produces. Not thread-safe; intended for tests.
std::function<void(double)>& metric_spectrum_hook();

/// Residual rule used by the metric-aware classifier.
enum class ResidualRule { kMahalanobis, kEuclidean };

struct DmlModel {
    FeatureMatrix x;
    DmlHyper hyper;
    MetricState metric;
};

struct AlternateResult {
    ReconstructionVector alpha;
    MetricState metric;
    /// Objective value before the loop and after every coefficient update.
    std::vector<double> cost_trace;
};

/// Objective value: squared Mahalanobis reconstruction error plus
/// lambda * |alpha|^2 plus gamma * |Sigma|_F^2.
double dml_cost(const FeatureMatrix& x, const Eigen::VectorXd& y,
                const ReconstructionVector& alpha, const MetricState& metric,
                const DmlHyper& hyper);

/// Closed-form minimizer of the objective in the coefficients for a fixed
/// metric. Reduces exactly to the plain ridge coder when the metric is the
/// identity.
ReconstructionVector update_alpha(const FeatureMatrix& x, const Eigen::VectorXd& y,
                                  const MetricState& metric, double lambda);

/// One damped fixed-point step of the metric update. The stationarity
/// condition in the metric has a rank-one (hence singular) right-hand side,
/// so the step blends the candidate with the previous iterate and projects
/// the result back onto the SPD cone:
///   w = Sigma_prev^-1 r,  C = w w^T / (2 gamma),
///   Sigma = spd_project((1 - rho) Sigma_prev + rho C, eps_floor),  rho = 0.5.
MetricState update_sigma(const FeatureMatrix& x, const Eigen::VectorXd& y,
                         const ReconstructionVector& alpha,
                         const MetricState& metric_prev, double gamma,
                         double eps_floor);

/// Alternates metric and coefficient updates until the relative cost change
/// drops below inner_tol or inner_max_iters is reached.
AlternateResult alternate(const FeatureMatrix& x, const Eigen::VectorXd& y,
                          const DmlHyper& hyper, const MetricState& metric_init);

/// Gradient of the Mahalanobis data term with respect to the feature matrix,
/// holding coefficients and metric fixed: -2 Sigma^-1 (y - X alpha) alpha^T.
Eigen::MatrixXd grad_features(const FeatureMatrix& x, const Eigen::VectorXd& y,
                              const ReconstructionVector& alpha,
                              const MetricState& metric);

/// Runs the two-level fine-tuning loop: for every pass and query, alternate
/// metric/coefficient updates (the metric warm-starts across queries from the
/// identity), then take a gradient step on the feature matrix. Throws
/// Diverged if the features leave the finite range (eta too large).
DmlModel fine_tune(const FeatureMatrix& x0,
                   const std::vector<std::pair<Eigen::VectorXd, int>>& queries,
                   const DmlHyper& hyper);

/// Metric-aware classification: codes the query with the learned metric, then
/// scores each class by its reconstruction residual normalized by the squared
/// coefficient norm. The residual is measured in the learned metric by
/// default; the Euclidean rule is kept selectable because either reading is
/// defensible.
int classify_dml(const DmlModel& model, const Eigen::VectorXd& y,
                 ResidualRule rule = ResidualRule::kMahalanobis);

}  // namespace dmlcrc
