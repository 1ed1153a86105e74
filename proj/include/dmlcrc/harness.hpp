#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmlcrc/dataset.hpp"
#include "dmlcrc/dml.hpp"
#include "dmlcrc/variants.hpp"

namespace dmlcrc {

enum class Method { kCrc, kPcrc, kProcrc, kDmlCrc, kDmlProcrc };

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct SynthSpec {
    int d = 10;
    int c = 4;
    int n_per_class = 30;
    double separation = 3.0;
    double nuisance_scale = 1.0;
};

/// One benchmark run: a method, a data source (file or synthetic spec), the
/// cross-validation protocol and every numeric knob the methods expose. All
/// randomness in a run flows from `seed`.
struct RunConfig {
    Method method = Method::kCrc;
    std::optional<std::string> feature_path;
    bool has_header = false;
    std::optional<SynthSpec> synth;

    int folds = 5;
    std::uint64_t seed = 42;
    bool normalize = true;

    /// Ridge weight; when unset, default_lambda(train size) is used per fold.
    std::optional<double> lambda;
    DmlHyper hyper;  // gamma, eps_floor, inner loop, eta, passes
    ResidualRule dml_rule = ResidualRule::kMahalanobis;

    /// Patch layout; patch_len == 0 means "derive from d" (len = ceil(d/2),
    /// stride = max(1, len/2)).
    PatchScheme patch{0, 0};
    PatchPooling pooling = PatchPooling::kSumResiduals;

    double gamma_pro = 0.1;
    ProDecisionRule pro_rule = ProDecisionRule::kDiscriminative;

    /// Fold-evaluation parallelism cap; 0 means the DMLCRC_THREADS environment
    /// variable, or the hardware concurrency if that is unset.
    int threads = 0;
};

/// Cross-validation outcome. to_csv() renders the report interface:
/// header `method,fold,accuracy`, one row per fold, then a mean row, with
/// accuracies at 6 decimal places.
struct CvReport {
    Method method = Method::kCrc;
    std::uint64_t seed = 0;
    std::vector<double> fold_accuracy;
    double mean = 0.0;
    double lambda_used = 0.0;  // -1 when the per-fold default was used
    DmlHyper hyper_echo;

    std::string to_csv() const;
};

/// Parsed form of the CSV report, for round-trip checks.
struct ParsedCvCsv {
    std::string method;
    std::vector<double> fold_accuracy;
    double mean = 0.0;
};
ParsedCvCsv parse_cv_csv(const std::string& text);

/// Train/test column indices of one fold.
std::pair<std::vector<int>, std::vector<int>> fold_partition(const FoldPlan& plan,
                                                             int fold);

/// Runs k-fold cross-validation: per fold, train (and for the metric methods
/// fine-tune) on the complement, classify the held-out fold. Folds may be
/// evaluated concurrently; the report is identical regardless of scheduling.
CvReport run_cv(const RunConfig& config);

struct GradcheckReport {
    double max_rel_error = 0.0;
    std::vector<double> per_instance;
    bool pass = false;
};

using FeatureGradFn = std::function<Eigen::MatrixXd(
    const FeatureMatrix&, const Eigen::VectorXd&, const ReconstructionVector&,
    const MetricState&)>;

/// Compares the analytic feature gradient against central finite differences
/// on 20 random small instances (d <= 8, N <= 16, one with zero
/// coefficients); passes iff the max relative Frobenius error is <= 1e-5.
/// Failures are reported, not thrown. `grad` is injectable for mutation
/// tests of the check itself.
GradcheckReport gradcheck(const RunConfig& config, const FeatureGradFn& grad = {});

/// Synthesizes a dataset and writes it as a feature table.
void emit_synth(const SynthSpec& spec, std::uint64_t seed,
                const std::string& out_path, bool write_header);

}  // namespace dmlcrc
