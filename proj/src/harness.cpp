#include "dmlcrc/harness.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "dmlcrc/rng.hpp"

namespace dmlcrc {

std::string method_name(Method m) {
    switch (m) {
        case Method::kCrc: return "crc";
        case Method::kPcrc: return "pcrc";
        case Method::kProcrc: return "procrc";
        case Method::kDmlCrc: return "dml-crc";
        case Method::kDmlProcrc: return "dml-procrc";
    }
    return "?";
}

std::optional<Method> parse_method(const std::string& name) {
    for (Method m : {Method::kCrc, Method::kPcrc, Method::kProcrc, Method::kDmlCrc,
                     Method::kDmlProcrc})
        if (method_name(m) == name) return m;
    return std::nullopt;
}

std::string CvReport::to_csv() const {
    std::ostringstream out;
    char buf[32];
    out << "method,fold,accuracy\n";
    for (std::size_t f = 0; f < fold_accuracy.size(); ++f) {
        std::snprintf(buf, sizeof(buf), "%.6f", fold_accuracy[f]);
        out << method_name(method) << ',' << f << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.6f", mean);
    out << method_name(method) << ",mean," << buf << '\n';
    return out.str();
}

ParsedCvCsv parse_cv_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    ParsedCvCsv parsed;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "method,fold,accuracy")
                throw ParseError("bad report header '" + line + "'", 1, 1);
            header_seen = true;
            continue;
        }
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("bad report row '" + line + "'", 0, 1);
        parsed.method = line.substr(0, c1);
        std::string fold = line.substr(c1 + 1, c2 - c1 - 1);
        double value = std::stod(line.substr(c2 + 1));
        if (fold == "mean")
            parsed.mean = value;
        else
            parsed.fold_accuracy.push_back(value);
    }
    if (!header_seen) throw EmptyFile("empty report");
    return parsed;
}

std::pair<std::vector<int>, std::vector<int>> fold_partition(const FoldPlan& plan,
                                                             int fold) {
    std::vector<int> train, test;
    for (std::size_t j = 0; j < plan.assignments.size(); ++j) {
        if (plan.assignments[j] == fold)
            test.push_back(static_cast<int>(j));
        else
            train.push_back(static_cast<int>(j));
    }
    return {std::move(train), std::move(test)};
}

namespace {

FeatureMatrix load_config_data(const RunConfig& config) {
    if (config.feature_path && config.synth)
        throw ConfigError("exactly one data source must be set, got both");
    if (config.feature_path)
        return load_feature_table(*config.feature_path, config.has_header);
    if (config.synth) {
        const SynthSpec& s = *config.synth;
        return synthesize(config.seed, s.d, s.c, s.n_per_class, s.separation,
                          s.nuisance_scale);
    }
    throw ConfigError("no data source set (need a feature file or a synth spec)");
}

PatchScheme effective_scheme(const RunConfig& config, int dim) {
    return config.patch.patch_len != 0 ? config.patch : default_patch_scheme(dim);
}

int thread_budget(const RunConfig& config, int folds) {
    int cap = config.threads;
    if (cap <= 0) {
        if (const char* env = std::getenv("DMLCRC_THREADS")) cap = std::atoi(env);
    }
    if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap <= 0) cap = 1;
    return std::min(cap, folds);
}

std::vector<std::pair<Eigen::VectorXd, int>> training_queries(
    const FeatureMatrix& train) {
    std::vector<std::pair<Eigen::VectorXd, int>> queries;
    queries.reserve(train.count());
    for (int j = 0; j < train.count(); ++j)
        queries.emplace_back(train.columns().col(j), train.labels()[j]);
    return queries;
}

double evaluate_fold(const RunConfig& config, const FeatureMatrix& data,
                     const FoldPlan& plan, int fold) {
    auto [train_idx, test_idx] = fold_partition(plan, fold);
    FeatureMatrix train = data.subset(train_idx);
    FeatureMatrix test = data.subset(test_idx);
    if (config.normalize) {
        // unit-l2 is per column, so train and test are normalized
        // independently and nothing is fit on the held-out fold
        train = normalize_columns(train);
        test = normalize_columns(test);
    }

    double lambda = config.lambda ? *config.lambda : default_lambda(train.count());
    DmlHyper hyper = config.hyper;
    hyper.lambda = lambda;

    int correct = 0;
    switch (config.method) {
        case Method::kCrc: {
            CrcModel model = fit(train, lambda);
            for (int j = 0; j < test.count(); ++j)
                if (classify(model, test.columns().col(j)) == test.labels()[j])
                    ++correct;
            break;
        }
        case Method::kPcrc: {
            PatchScheme scheme = effective_scheme(config, train.dim());
            for (int j = 0; j < test.count(); ++j)
                if (pcrc_classify(train, test.columns().col(j), scheme, lambda,
                                  config.pooling) == test.labels()[j])
                    ++correct;
            break;
        }
        case Method::kProcrc: {
            ProCrcParams params{lambda, config.gamma_pro, train.classes()};
            for (int j = 0; j < test.count(); ++j)
                if (procrc_classify(train, test.columns().col(j), params) ==
                    test.labels()[j])
                    ++correct;
            break;
        }
        case Method::kDmlCrc: {
            DmlModel model = fine_tune(train, training_queries(train), hyper);
            for (int j = 0; j < test.count(); ++j)
                if (classify_dml(model, test.columns().col(j), config.dml_rule) ==
                    test.labels()[j])
                    ++correct;
            break;
        }
        case Method::kDmlProcrc: {
            DmlModel model = fine_tune_dml_procrc(train, training_queries(train),
                                                  hyper, config.gamma_pro);
            ProCrcParams params{lambda, config.gamma_pro, train.classes()};
            for (int j = 0; j < test.count(); ++j)
                if (dml_procrc_classify(model, test.columns().col(j), params,
                                        config.pro_rule) == test.labels()[j])
                    ++correct;
            break;
        }
    }
    return static_cast<double>(correct) / test.count();
}

}  // namespace

CvReport run_cv(const RunConfig& config) {
    if (config.folds < 2) throw ConfigError("folds must be at least 2");
    FeatureMatrix data = load_config_data(config);
    FoldPlan plan = kfold_split(data, config.folds, config.seed);

    std::vector<double> accuracy(config.folds, 0.0);
    std::vector<std::exception_ptr> failures(config.folds);
    std::atomic<int> next_fold{0};
    int workers = thread_budget(config, config.folds);

    auto work = [&]() {
        while (true) {
            int fold = next_fold.fetch_add(1);
            if (fold >= config.folds) return;
            try {
                accuracy[fold] = evaluate_fold(config, data, plan, fold);
            } catch (...) {
                failures[fold] = std::current_exception();
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (int fold = 0; fold < config.folds; ++fold) {
        if (!failures[fold]) continue;
        std::string where = "fold " + std::to_string(fold) + ": ";
        try {
            std::rethrow_exception(failures[fold]);
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        } catch (const NumericError& e) {
            throw NumericError(where + e.what());
        } catch (const std::exception& e) {
            throw Error(where + e.what());
        }
    }

    CvReport report;
    report.method = config.method;
    report.seed = config.seed;
    report.fold_accuracy = std::move(accuracy);
    double sum = 0.0;
    for (double a : report.fold_accuracy) sum += a;
    report.mean = sum / config.folds;
    report.lambda_used = config.lambda ? *config.lambda : -1.0;
    report.hyper_echo = config.hyper;
    return report;
}

GradcheckReport gradcheck(const RunConfig& config, const FeatureGradFn& grad) {
    if (config.method != Method::kDmlCrc)
        throw ConfigError("gradcheck applies to method dml-crc");
    FeatureGradFn grad_fn = grad;
    if (!grad_fn)
        grad_fn = [](const FeatureMatrix& x, const Eigen::VectorXd& y,
                     const ReconstructionVector& a, const MetricState& m) {
            return grad_features(x, y, a, m);
        };

    RandomStream rng(config.seed);
    GradcheckReport report;
    constexpr int kInstances = 20;
    for (int t = 0; t < kInstances; ++t) {
        int d = 2 + static_cast<int>(rng.uniform_below(7));   // 2..8
        int c = 2 + static_cast<int>(rng.uniform_below(3));   // 2..4
        int per_class = 1 + static_cast<int>(rng.uniform_below(4));
        int n = std::min(16, c * per_class);

        Eigen::MatrixXd cols = rng.gaussian_matrix(d, n);
        std::vector<int> labels(n);
        for (int j = 0; j < n; ++j) labels[j] = j % c;
        FeatureMatrix x(cols, labels);

        Eigen::VectorXd y = rng.gaussian_vector(d);
        Eigen::MatrixXd seed_mat = rng.gaussian_matrix(d, d);
        MetricState metric(spd_project(
            seed_mat * seed_mat.transpose() / d +
                0.5 * Eigen::MatrixXd::Identity(d, d),
            1e-3));

        // one zero-coefficient instance: both gradients vanish
        Eigen::VectorXd coef = t == kInstances / 2 ? Eigen::VectorXd::Zero(n)
                                                   : rng.gaussian_vector(n);
        ReconstructionVector alpha{coef, x.partition()};

        Eigen::MatrixXd analytic = grad_fn(x, y, alpha, metric);
        auto data_term = [&](const Eigen::MatrixXd& probe) {
            Eigen::VectorXd residual = y - probe * alpha.values;
            return residual.dot(metric.inverse_apply(residual));
        };
        Eigen::MatrixXd numeric = finite_diff_grad(data_term, cols, 1e-5);

        double denom = numeric.norm();
        double rel = denom < 1e-30 ? (analytic.norm() < 1e-30 ? 0.0 : 1.0)
                                   : (analytic - numeric).norm() / denom;
        report.per_instance.push_back(rel);
        report.max_rel_error = std::max(report.max_rel_error, rel);
    }
    report.pass = report.max_rel_error <= 1e-5;
    return report;
}

void emit_synth(const SynthSpec& spec, std::uint64_t seed,
                const std::string& out_path, bool write_header) {
    FeatureMatrix x = synthesize(seed, spec.d, spec.c, spec.n_per_class,
                                 spec.separation, spec.nuisance_scale);
    save_feature_table(x, out_path, write_header);
}

}  // namespace dmlcrc
