#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dmlcrc/crc.hpp"
#include "dmlcrc/dataset.hpp"
#include "dmlcrc/dml.hpp"

namespace dmlcrc {

/// Sliding-window patch layout over the feature coordinates. Windows start at
/// multiples of the stride; if the last window does not reach the final
/// coordinate, one extra window ending at d is appended so no coordinate is
/// dropped.
struct PatchScheme {
    int patch_len = 0;
    int stride = 1;
};

/// Parameters of the probabilistic coder: ridge weight, discriminative-term
/// weight and the class count it must agree with.
struct ProCrcParams {
    double lambda = 0.0;
    double gamma_pro = 0.0;
    int class_count = 0;
};

enum class PatchPooling { kSumResiduals, kMajorityVote };

/// Decision rule of the metric-aware probabilistic classifier: score classes
/// by the discriminative term, or by the per-class reconstruction residual
/// (the rule the plain metric classifier uses).
enum class ProDecisionRule { kDiscriminative, kClassResidual };

/// Window start offsets of a scheme over a d-dimensional vector.
std::vector<int> patch_starts(int dim, const PatchScheme& scheme);

/// Half-dimension windows advancing half a window per step.
PatchScheme default_patch_scheme(int dim);

std::vector<Eigen::VectorXd> extract_patches(const Eigen::VectorXd& v,
                                             const PatchScheme& scheme);

struct PcrcDiagnostics {
    int patch_count = 0;
    int skipped_patches = 0;  // patches whose coding left every class infinite
};

/// Patch-based classification: each window is ridge-coded against the
/// row-sliced dictionary, per-class residuals are pooled over windows (sum by
/// default, majority vote behind the flag), and the smallest pooled score
/// wins. A single whole-vector window reduces exactly to plain
/// classification.
int pcrc_classify(const FeatureMatrix& x, const Eigen::VectorXd& y,
                  const PatchScheme& scheme, double lambda,
                  PatchPooling pooling = PatchPooling::kSumResiduals,
                  PcrcDiagnostics* diagnostics = nullptr);

/// Exact minimizer of the probabilistic objective
///   |y - X a|^2 + lambda |a|^2 + (gamma/K) sum_k |X a - X_k a_k|^2,
/// computed by assembling the full normal matrix (class-k terms are the Gram
/// matrix with class-k rows and columns zeroed) and solving.
ReconstructionVector procrc_encode(const FeatureMatrix& x, const Eigen::VectorXd& y,
                                   const ProCrcParams& params);

/// The objective the encoder minimizes, evaluated term by term.
double procrc_objective(const FeatureMatrix& x, const Eigen::VectorXd& y,
                        const ReconstructionVector& alpha, const ProCrcParams& params);

/// argmin_k |X a - X_k a_k|^2, the class whose partial representation agrees
/// best with the full one. Note this decision rule differs from the
/// residual-ratio rule of plain classification even at gamma = 0, where the
/// codings coincide.
int procrc_classify(const FeatureMatrix& x, const Eigen::VectorXd& y,
                    const ProCrcParams& params);

/// Metric-weighted probabilistic coding: both quadratic terms of the
/// objective are measured in the learned metric. Reduces to procrc_encode at
/// Sigma = I and to the plain metric coder at gamma = 0.
ReconstructionVector dml_procrc_encode(const FeatureMatrix& x,
                                       const Eigen::VectorXd& y,
                                       const MetricState& metric,
                                       const ProCrcParams& params);

/// Combined objective of the metric-weighted probabilistic model, including
/// the metric regularizer.
double dml_procrc_cost(const FeatureMatrix& x, const Eigen::VectorXd& y,
                       const ReconstructionVector& alpha, const MetricState& metric,
                       const DmlHyper& hyper, double gamma_pro);

int dml_procrc_classify(const DmlModel& model, const Eigen::VectorXd& y,
                        const ProCrcParams& params,
                        ProDecisionRule rule = ProDecisionRule::kDiscriminative);

/// Fine-tuning loop with the probabilistic cost in place of the plain one:
/// the coefficient update minimizes the combined objective, the metric update
/// keeps its damped fixed-point form on the reconstruction residual, and the
/// feature step uses the data-term gradient.
DmlModel fine_tune_dml_procrc(
    const FeatureMatrix& x0,
    const std::vector<std::pair<Eigen::VectorXd, int>>& queries,
    const DmlHyper& hyper, double gamma_pro);

}  // namespace dmlcrc
