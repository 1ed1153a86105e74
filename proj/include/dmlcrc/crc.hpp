#pragma once

#include <Eigen/Dense>
#include <memory>

#include "dmlcrc/dataset.hpp"
#include "dmlcrc/numerics.hpp"

namespace dmlcrc {

/// Coefficient vector of a query's expansion over the training columns,
/// carrying the per-class slice map of the dictionary it was coded against.
struct ReconstructionVector {
    Eigen::VectorXd values;
    std::shared_ptr<const ClassPartition> partition;

    int classes() const { return static_cast<int>(partition->size()); }
    Eigen::VectorXd class_slice(int i) const;
};

/// Per-class residual scores. An entry is +infinity exactly when the class's
/// coefficient slice has (numerically) zero norm.
struct ResidualVector {
    Eigen::VectorXd values;
};

/// Ridge-coded collaborative representation model. The regularized Gram
/// system is factored once at fit time; the factored matrix lives in feature
/// space (d x d, via the push-through identity) or coefficient space (N x N),
/// whichever is smaller.
class CrcModel {
public:
    const FeatureMatrix& features() const { return x_; }
    double lambda() const { return lambda_; }
    bool feature_space_gram() const { return feature_space_; }
    const SpdFactor& gram_factor() const { return gram_factor_; }

private:
    CrcModel(FeatureMatrix x, double lambda, SpdFactor factor, bool feature_space)
        : x_(std::move(x)),
          lambda_(lambda),
          gram_factor_(std::move(factor)),
          feature_space_(feature_space) {}

    friend CrcModel fit(const FeatureMatrix& x, double lambda);

    FeatureMatrix x_;
    double lambda_;
    SpdFactor gram_factor_;
    bool feature_space_;
};

/// Default ridge weight when none is configured: 0.001 scaled by N / 700.
double default_lambda(int sample_count);

CrcModel fit(const FeatureMatrix& x, double lambda);

ReconstructionVector encode(const CrcModel& model, const Eigen::VectorXd& y);

ResidualVector residuals(const CrcModel& model, const ReconstructionVector& alpha,
                         const Eigen::VectorXd& y);

/// Index of the class with the smallest residual; ties break toward the
/// smallest class index. Throws AllInfinite when every residual is infinite.
int classify(const CrcModel& model, const Eigen::VectorXd& y);

/// Shared by residual scorers: argmin with smallest-index tie-break, or
/// AllInfinite when nothing is finite.
int argmin_residual(const Eigen::VectorXd& scores);

/// Coefficient slices below this squared-norm threshold score +infinity.
inline constexpr double kZeroSliceThreshold = 1e-24;

}  // namespace dmlcrc
