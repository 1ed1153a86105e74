#include "dmlcrc/variants.hpp"

#include <cmath>
#include <limits>

namespace dmlcrc {

std::vector<int> patch_starts(int dim, const PatchScheme& scheme) {
    if (scheme.patch_len < 1 || scheme.patch_len > dim || scheme.stride < 1)
        throw InvalidScheme("patch scheme (len " + std::to_string(scheme.patch_len) +
                            ", stride " + std::to_string(scheme.stride) +
                            ") is invalid for dimension " + std::to_string(dim));
    std::vector<int> starts;
    for (int s = 0; s + scheme.patch_len <= dim; s += scheme.stride)
        starts.push_back(s);
    // cover trailing coordinates with one final window ending at dim
    if (starts.back() + scheme.patch_len < dim)
        starts.push_back(dim - scheme.patch_len);
    return starts;
}

PatchScheme default_patch_scheme(int dim) {
    int len = (dim + 1) / 2;
    return PatchScheme{len, std::max(1, len / 2)};
}

std::vector<Eigen::VectorXd> extract_patches(const Eigen::VectorXd& v,
                                             const PatchScheme& scheme) {
    std::vector<Eigen::VectorXd> patches;
    for (int s : patch_starts(static_cast<int>(v.size()), scheme))
        patches.push_back(v.segment(s, scheme.patch_len));
    return patches;
}

int pcrc_classify(const FeatureMatrix& x, const Eigen::VectorXd& y,
                  const PatchScheme& scheme, double lambda, PatchPooling pooling,
                  PcrcDiagnostics* diagnostics) {
    if (y.size() != x.dim())
        throw DimensionMismatch("pcrc_classify: query length mismatch");
    std::vector<int> starts = patch_starts(x.dim(), scheme);

    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(x.classes());
    PcrcDiagnostics diag;
    diag.patch_count = static_cast<int>(starts.size());

    for (int start : starts) {
        FeatureMatrix local(x.columns().middleRows(start, scheme.patch_len),
                            x.labels());
        CrcModel model = fit(local, lambda);
        Eigen::VectorXd patch = y.segment(start, scheme.patch_len);
        ResidualVector r = residuals(model, encode(model, patch), patch);
        if (!(r.values.array().isFinite().any())) {
            ++diag.skipped_patches;
            continue;
        }
        if (pooling == PatchPooling::kSumResiduals) {
            pooled += r.values;
        } else {
            pooled(argmin_residual(r.values)) -= 1.0;  // vote = more negative
        }
    }
    if (diagnostics) *diagnostics = diag;
    if (diag.skipped_patches == diag.patch_count)
        throw AllInfinite("pcrc_classify: every patch coded to all-infinite residuals");
    if (pooling == PatchPooling::kMajorityVote) {
        int best = 0;
        for (int i = 1; i < pooled.size(); ++i)
            if (pooled(i) < pooled(best)) best = i;
        return best;
    }
    return argmin_residual(pooled);
}

namespace {

// Accumulates the discriminative part of the normal matrix: for each class k,
// the base Gram with class-k rows and columns zeroed (which is exactly the
// Gram of the dictionary with class-k columns removed to zero).
Eigen::MatrixXd discriminative_gram(const FeatureMatrix& x,
                                    const Eigen::MatrixXd& base_gram,
                                    double gamma_over_k) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.count(), x.count());
    for (int k = 0; k < x.classes(); ++k) {
        Eigen::MatrixXd zk = base_gram;
        for (int col : x.class_indices(k)) {
            zk.row(col).setZero();
            zk.col(col).setZero();
        }
        acc += zk;
    }
    return gamma_over_k * acc;
}

void check_params(const FeatureMatrix& x, const ProCrcParams& params,
                  const char* where) {
    if (params.class_count != x.classes())
        throw ConfigError(std::string(where) + ": class count " +
                          std::to_string(params.class_count) +
                          " does not match the data's " +
                          std::to_string(x.classes()));
    if (params.lambda < 0.0 || params.gamma_pro < 0.0)
        throw ConfigError(std::string(where) + ": weights must be non-negative");
}

ReconstructionVector pro_encode_impl(const FeatureMatrix& x, const Eigen::VectorXd& y,
                                     const MetricState* metric,
                                     const ProCrcParams& params, const char* where) {
    if (y.size() != x.dim())
        throw DimensionMismatch(std::string(where) + ": query length mismatch");
    check_params(x, params, where);

    const Eigen::MatrixXd& cols = x.columns();
    // Weighted columns and Gram; with no metric these are the plain ones,
    // and the expressions mirror each other so the identity-metric reduction
    // is exact.
    Eigen::MatrixXd weighted = metric ? metric->inverse_apply(cols) : cols;
    Eigen::MatrixXd base_gram =
        SymmetricMatrix(cols.transpose() * weighted).entries();

    Eigen::MatrixXd normal =
        base_gram +
        params.lambda * Eigen::MatrixXd::Identity(x.count(), x.count());
    if (params.gamma_pro != 0.0)
        normal += discriminative_gram(x, base_gram,
                                      params.gamma_pro / x.classes());
    try {
        Eigen::VectorXd rhs = weighted.transpose() * y;
        Eigen::VectorXd alpha = SpdFactor{SymmetricMatrix(normal)}.solve(rhs);
        return ReconstructionVector{std::move(alpha), x.partition()};
    } catch (const NotPositiveDefinite&) {
        throw SingularSystem(std::string(where) + ": normal matrix is singular");
    }
}

// Per-class disagreement vectors u_k = X a - X_k a_k.
std::vector<Eigen::VectorXd> class_disagreements(const FeatureMatrix& x,
                                                 const ReconstructionVector& alpha) {
    Eigen::VectorXd full = x.columns() * alpha.values;
    std::vector<Eigen::VectorXd> out;
    out.reserve(x.classes());
    for (int k = 0; k < x.classes(); ++k) {
        Eigen::VectorXd partial = Eigen::VectorXd::Zero(x.dim());
        for (int col : x.class_indices(k))
            partial += alpha.values(col) * x.columns().col(col);
        out.push_back(full - partial);
    }
    return out;
}

}  // namespace

ReconstructionVector procrc_encode(const FeatureMatrix& x, const Eigen::VectorXd& y,
                                   const ProCrcParams& params) {
    return pro_encode_impl(x, y, nullptr, params, "procrc_encode");
}

double procrc_objective(const FeatureMatrix& x, const Eigen::VectorXd& y,
                        const ReconstructionVector& alpha,
                        const ProCrcParams& params) {
    check_params(x, params, "procrc_objective");
    double value = (y - x.columns() * alpha.values).squaredNorm() +
                   params.lambda * alpha.values.squaredNorm();
    double disc = 0.0;
    for (const Eigen::VectorXd& u : class_disagreements(x, alpha))
        disc += u.squaredNorm();
    return value + params.gamma_pro / x.classes() * disc;
}

int procrc_classify(const FeatureMatrix& x, const Eigen::VectorXd& y,
                    const ProCrcParams& params) {
    ReconstructionVector alpha = procrc_encode(x, y, params);
    std::vector<Eigen::VectorXd> disagreements = class_disagreements(x, alpha);
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int k = 0; k < x.classes(); ++k) {
        double score = disagreements[k].dot(disagreements[k]);
        if (score < best_score) {
            best = k;
            best_score = score;
        }
    }
    return best;
}

ReconstructionVector dml_procrc_encode(const FeatureMatrix& x,
                                       const Eigen::VectorXd& y,
                                       const MetricState& metric,
                                       const ProCrcParams& params) {
    if (metric.dim() != x.dim())
        throw DimensionMismatch("dml_procrc_encode: metric order mismatch");
    return pro_encode_impl(x, y, &metric, params, "dml_procrc_encode");
}

double dml_procrc_cost(const FeatureMatrix& x, const Eigen::VectorXd& y,
                       const ReconstructionVector& alpha, const MetricState& metric,
                       const DmlHyper& hyper, double gamma_pro) {
    Eigen::VectorXd residual = y - x.columns() * alpha.values;
    double value = residual.dot(metric.inverse_apply(residual)) +
                   hyper.lambda * alpha.values.squaredNorm() +
                   hyper.gamma * metric.sigma().entries().squaredNorm();
    double disc = 0.0;
    for (const Eigen::VectorXd& u : class_disagreements(x, alpha))
        disc += u.dot(metric.inverse_apply(u));
    value += gamma_pro / x.classes() * disc;
    if (!std::isfinite(value))
        throw NonFinite("dml_procrc_cost: objective is non-finite");
    return value;
}

int dml_procrc_classify(const DmlModel& model, const Eigen::VectorXd& y,
                        const ProCrcParams& params, ProDecisionRule rule) {
    const FeatureMatrix& x = model.x;
    ReconstructionVector alpha = dml_procrc_encode(x, y, model.metric, params);

    if (rule == ProDecisionRule::kDiscriminative) {
        std::vector<Eigen::VectorXd> disagreements = class_disagreements(x, alpha);
        int best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (int k = 0; k < x.classes(); ++k) {
            double score = disagreements[k].dot(model.metric.inverse_apply(disagreements[k]));
            if (score < best_score) {
                best = k;
                best_score = score;
            }
        }
        return best;
    }

    // class-residual rule, as in the plain metric classifier
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
        scores(i) = residual.dot(model.metric.inverse_apply(residual)) / norm2;
    }
    return argmin_residual(scores);
}

DmlModel fine_tune_dml_procrc(
    const FeatureMatrix& x0,
    const std::vector<std::pair<Eigen::VectorXd, int>>& queries,
    const DmlHyper& hyper, double gamma_pro) {
    if (hyper.outer_passes < 1)
        throw std::invalid_argument("fine_tune_dml_procrc: outer_passes must be positive");
    ProCrcParams params{hyper.lambda, gamma_pro, x0.classes()};

    FeatureMatrix x = x0;
    MetricState metric = MetricState::identity(x0.dim());
    for (int pass = 0; pass < hyper.outer_passes; ++pass) {
        for (const auto& [query, label] : queries) {
            ReconstructionVector alpha = dml_procrc_encode(x, query, metric, params);
            double cost = dml_procrc_cost(x, query, alpha, metric, hyper, gamma_pro);
            for (int iter = 0; iter < hyper.inner_max_iters; ++iter) {
                metric = update_sigma(x, query, alpha, metric, hyper.gamma,
                                      hyper.eps_floor);
                alpha = dml_procrc_encode(x, query, metric, params);
                double next = dml_procrc_cost(x, query, alpha, metric, hyper, gamma_pro);
                double prev = cost;
                cost = next;
                if (std::abs(next - prev) / std::max(prev, 1e-30) < hyper.inner_tol)
                    break;
            }
            if (hyper.eta != 0.0) {
                Eigen::MatrixXd updated =
                    x.columns() - hyper.eta * grad_features(x, query, alpha, metric);
                if (!updated.allFinite())
                    throw Diverged("fine_tune_dml_procrc: feature matrix left the "
                                   "finite range; reduce eta");
                x = FeatureMatrix(std::move(updated), x.labels());
            }
        }
    }
    return DmlModel{std::move(x), hyper, std::move(metric)};
}

}  // namespace dmlcrc
