#include "dmlcrc/crc.hpp"

#include <cmath>
#include <limits>

namespace dmlcrc {

Eigen::VectorXd ReconstructionVector::class_slice(int i) const {
    const auto& idx = (*partition)[i];
    Eigen::VectorXd out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out(j) = values(idx[j]);
    return out;
}

double default_lambda(int sample_count) {
    return 0.001 * sample_count / 700.0;
}

CrcModel fit(const FeatureMatrix& x, double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda))
        throw NonFinite("fit: lambda must be a finite non-negative real");
    const Eigen::MatrixXd& cols = x.columns();
    const bool feature_space = x.dim() < x.count();
    try {
        // The two assemblies must stay expression-identical with the
        // metric-weighted coder (see update_alpha), which reduces to them
        // when the metric is the identity.
        Eigen::MatrixXd gram;
        if (feature_space)
            gram = cols * cols.transpose() +
                   lambda * Eigen::MatrixXd::Identity(x.dim(), x.dim());
        else
            gram = cols.transpose() * cols +
                   lambda * Eigen::MatrixXd::Identity(x.count(), x.count());
        SpdFactor factor{SymmetricMatrix(gram)};
        return CrcModel(x, lambda, std::move(factor), feature_space);
    } catch (const NotPositiveDefinite&) {
        throw SingularGram("fit: regularized Gram matrix is numerically singular "
                           "(lambda too small for the data)");
    }
}

ReconstructionVector encode(const CrcModel& model, const Eigen::VectorXd& y) {
    const FeatureMatrix& x = model.features();
    if (y.size() != x.dim())
        throw DimensionMismatch("encode: query length " + std::to_string(y.size()) +
                                " does not match feature dimension " +
                                std::to_string(x.dim()));
    Eigen::VectorXd alpha;
    if (model.feature_space_gram()) {
        alpha = x.columns().transpose() * model.gram_factor().solve(y);
    } else {
        Eigen::VectorXd rhs = x.columns().transpose() * y;
        alpha = model.gram_factor().solve(rhs);
    }
    return ReconstructionVector{std::move(alpha), x.partition()};
}

ResidualVector residuals(const CrcModel& model, const ReconstructionVector& alpha,
                         const Eigen::VectorXd& y) {
    const FeatureMatrix& x = model.features();
    if (y.size() != x.dim())
        throw DimensionMismatch("residuals: query length mismatch");
    if (alpha.values.size() != x.count())
        throw DimensionMismatch("residuals: coefficient length mismatch");
    if (alpha.partition != x.partition() && *alpha.partition != *x.partition())
        throw DimensionMismatch("residuals: slice map does not match the model's classes");

    constexpr double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd r(x.classes());
    for (int i = 0; i < x.classes(); ++i) {
        const auto& idx = x.class_indices(i);
        double norm2 = 0.0;
        for (int col : idx) norm2 += alpha.values(col) * alpha.values(col);
        if (norm2 < kZeroSliceThreshold) {
            r(i) = inf;
            continue;
        }
        Eigen::VectorXd recon = Eigen::VectorXd::Zero(x.dim());
        for (int col : idx) recon += alpha.values(col) * x.columns().col(col);
        r(i) = (y - recon).squaredNorm() / norm2;
    }
    return ResidualVector{std::move(r)};
}

int argmin_residual(const Eigen::VectorXd& scores) {
    int best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < scores.size(); ++i) {
        if (std::isfinite(scores(i)) && scores(i) < best_score) {
            best = i;
            best_score = scores(i);
        }
    }
    if (best < 0)
        throw AllInfinite("every class residual is infinite; query is orthogonal "
                          "to the dictionary or coding degenerated");
    return best;
}

int classify(const CrcModel& model, const Eigen::VectorXd& y) {
    ReconstructionVector alpha = encode(model, y);
    return argmin_residual(residuals(model, alpha, y).values);
}

}  // namespace dmlcrc
