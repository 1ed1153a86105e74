#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "dmlcrc/harness.hpp"

namespace {

using namespace dmlcrc;

struct CliOptions {
    RunConfig config;
    std::string method = "crc";
    std::string features;
    bool has_header = false;
    std::vector<double> synth_spec;
    std::string out_path;
    std::string queries_path;
    bool queries_header = false;
    std::string pooling = "sum";
    std::string residual_rule = "mahalanobis";
    std::string pro_rule = "discriminative";
    std::optional<double> lambda;
    bool synth_header = false;
};

void add_data_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--features", opt.features, "feature table file (label,f1,...,fd per line)");
    cmd->add_flag("--header", opt.has_header, "skip one header line when reading --features");
    cmd->add_option("--synth", opt.synth_spec,
                    "synthetic data spec: d,c,n_per_class,separation,nuisance_scale")
        ->delimiter(',')
        ->expected(5);
}

void add_shared_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--method", opt.method,
                    "classifier: crc | pcrc | procrc | dml-crc | dml-procrc");
    cmd->add_option("--folds", opt.config.folds, "cross-validation folds")
        ->check(CLI::Range(2, 1000000));
    cmd->add_option("--seed", opt.config.seed, "seed for all randomness in the run");
    cmd->add_option("--lambda", opt.lambda,
                    "ridge weight (default: 0.001 * N / 700 per training fold)");
    cmd->add_option("--gamma", opt.config.hyper.gamma, "metric regularizer weight");
    cmd->add_option("--eta", opt.config.hyper.eta, "feature-update step size");
    cmd->add_option("--inner-iters", opt.config.hyper.inner_max_iters,
                    "max alternating iterations per query");
    cmd->add_option("--inner-tol", opt.config.hyper.inner_tol,
                    "relative cost-change tolerance of the alternating loop");
    cmd->add_option("--eps-floor", opt.config.hyper.eps_floor,
                    "eigenvalue floor of the learned metric");
    cmd->add_option("--passes", opt.config.hyper.outer_passes, "fine-tuning passes");
    cmd->add_flag("--normalize,!--no-normalize", opt.config.normalize,
                  "unit-l2 normalize columns; applied per column, so train and "
                  "test partitions are normalized independently (default: on)");
    cmd->add_option("--patch-len", opt.config.patch.patch_len,
                    "pcrc window length (default: ceil(d/2))");
    cmd->add_option("--patch-stride", opt.config.patch.stride, "pcrc window stride");
    cmd->add_option("--pooling", opt.pooling, "pcrc pooling: sum | vote");
    cmd->add_option("--gamma-pro", opt.config.gamma_pro,
                    "discriminative-term weight of procrc / dml-procrc");
    cmd->add_option("--residual-rule", opt.residual_rule,
                    "dml-crc residual rule: mahalanobis | euclidean");
    cmd->add_option("--pro-rule", opt.pro_rule,
                    "dml-procrc decision rule: discriminative | class-residual");
    cmd->add_option("--out", opt.out_path, "write the report here instead of stdout");
}

int finalize_config(CliOptions& opt) {
    auto method = parse_method(opt.method);
    if (!method) {
        std::cerr << "unknown method '" << opt.method << "'\n";
        return 1;
    }
    opt.config.method = *method;
    if (!opt.features.empty()) {
        opt.config.feature_path = opt.features;
        opt.config.has_header = opt.has_header;
    }
    if (!opt.synth_spec.empty()) {
        SynthSpec s;
        s.d = static_cast<int>(opt.synth_spec[0]);
        s.c = static_cast<int>(opt.synth_spec[1]);
        s.n_per_class = static_cast<int>(opt.synth_spec[2]);
        s.separation = opt.synth_spec[3];
        s.nuisance_scale = opt.synth_spec[4];
        opt.config.synth = s;
    }
    opt.config.lambda = opt.lambda;

    if (opt.pooling == "sum")
        opt.config.pooling = PatchPooling::kSumResiduals;
    else if (opt.pooling == "vote")
        opt.config.pooling = PatchPooling::kMajorityVote;
    else {
        std::cerr << "unknown pooling '" << opt.pooling << "'\n";
        return 1;
    }
    if (opt.residual_rule == "mahalanobis")
        opt.config.dml_rule = ResidualRule::kMahalanobis;
    else if (opt.residual_rule == "euclidean")
        opt.config.dml_rule = ResidualRule::kEuclidean;
    else {
        std::cerr << "unknown residual rule '" << opt.residual_rule << "'\n";
        return 1;
    }
    if (opt.pro_rule == "discriminative")
        opt.config.pro_rule = ProDecisionRule::kDiscriminative;
    else if (opt.pro_rule == "class-residual")
        opt.config.pro_rule = ProDecisionRule::kClassResidual;
    else {
        std::cerr << "unknown pro rule '" << opt.pro_rule << "'\n";
        return 1;
    }
    return 0;
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open " + out_path + " for writing");
    out << text;
}

int run_cv_command(CliOptions& opt) {
    if (int rc = finalize_config(opt)) return rc;
    CvReport report = run_cv(opt.config);
    write_or_print(report.to_csv(), opt.out_path);
    return 0;
}

int run_classify_command(CliOptions& opt) {
    if (int rc = finalize_config(opt)) return rc;
    if (opt.queries_path.empty()) {
        std::cerr << "classify requires --queries\n";
        return 1;
    }
    const RunConfig& config = opt.config;
    FeatureMatrix train = config.feature_path
                              ? load_feature_table(*config.feature_path, config.has_header)
                              : [&] {
                                    if (!config.synth)
                                        throw ConfigError("classify needs --features or --synth");
                                    const SynthSpec& s = *config.synth;
                                    return synthesize(config.seed, s.d, s.c, s.n_per_class,
                                                      s.separation, s.nuisance_scale);
                                }();
    FeatureMatrix queries = load_feature_table(opt.queries_path, opt.queries_header);
    if (config.normalize) {
        train = normalize_columns(train);
        queries = normalize_columns(queries);
    }
    double lambda = config.lambda ? *config.lambda : default_lambda(train.count());
    DmlHyper hyper = config.hyper;
    hyper.lambda = lambda;

    std::vector<int> predictions(queries.count());
    switch (config.method) {
        case Method::kCrc: {
            CrcModel model = fit(train, lambda);
            for (int j = 0; j < queries.count(); ++j)
                predictions[j] = classify(model, queries.columns().col(j));
            break;
        }
        case Method::kPcrc: {
            PatchScheme scheme = config.patch.patch_len != 0
                                     ? config.patch
                                     : default_patch_scheme(train.dim());
            for (int j = 0; j < queries.count(); ++j)
                predictions[j] = pcrc_classify(train, queries.columns().col(j), scheme,
                                               lambda, config.pooling);
            break;
        }
        case Method::kProcrc: {
            ProCrcParams params{lambda, config.gamma_pro, train.classes()};
            for (int j = 0; j < queries.count(); ++j)
                predictions[j] = procrc_classify(train, queries.columns().col(j), params);
            break;
        }
        case Method::kDmlCrc: {
            std::vector<std::pair<Eigen::VectorXd, int>> fit_queries;
            for (int j = 0; j < train.count(); ++j)
                fit_queries.emplace_back(train.columns().col(j), train.labels()[j]);
            DmlModel model = fine_tune(train, fit_queries, hyper);
            for (int j = 0; j < queries.count(); ++j)
                predictions[j] =
                    classify_dml(model, queries.columns().col(j), config.dml_rule);
            break;
        }
        case Method::kDmlProcrc: {
            std::vector<std::pair<Eigen::VectorXd, int>> fit_queries;
            for (int j = 0; j < train.count(); ++j)
                fit_queries.emplace_back(train.columns().col(j), train.labels()[j]);
            DmlModel model =
                fine_tune_dml_procrc(train, fit_queries, hyper, config.gamma_pro);
            ProCrcParams params{lambda, config.gamma_pro, train.classes()};
            for (int j = 0; j < queries.count(); ++j)
                predictions[j] = dml_procrc_classify(model, queries.columns().col(j),
                                                     params, config.pro_rule);
            break;
        }
    }

    std::ostringstream out;
    out << "index,predicted,actual\n";
    int correct = 0;
    for (int j = 0; j < queries.count(); ++j) {
        out << j << ',' << predictions[j] << ',' << queries.labels()[j] << '\n';
        if (predictions[j] == queries.labels()[j]) ++correct;
    }
    write_or_print(out.str(), opt.out_path);
    std::cerr << "accuracy " << static_cast<double>(correct) / queries.count()
              << " (" << correct << "/" << queries.count() << ")\n";
    return 0;
}

int run_gradcheck_command(CliOptions& opt) {
    opt.method = "dml-crc";
    if (int rc = finalize_config(opt)) return rc;
    GradcheckReport report = gradcheck(opt.config);
    std::cout << "gradcheck " << (report.pass ? "PASS" : "FAIL")
              << " max relative error " << report.max_rel_error << " over "
              << report.per_instance.size() << " instances\n";
    return report.pass ? 0 : 4;
}

int run_synth_command(CliOptions& opt) {
    if (opt.synth_spec.empty()) {
        std::cerr << "synth requires --synth d,c,n,sep,nuisance\n";
        return 1;
    }
    if (opt.out_path.empty()) {
        std::cerr << "synth requires --out\n";
        return 1;
    }
    if (int rc = finalize_config(opt)) return rc;
    emit_synth(*opt.config.synth, opt.config.seed, opt.out_path, opt.synth_header);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative-representation classifiers with an optional "
                 "learned Mahalanobis metric: cross-validation benchmarks, "
                 "gradient checking and synthetic data generation"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* cv = app.add_subcommand("cv", "k-fold cross-validation benchmark");
    add_data_flags(cv, opt);
    add_shared_flags(cv, opt);

    CLI::App* classify = app.add_subcommand("classify", "train once, label a query table");
    add_data_flags(classify, opt);
    add_shared_flags(classify, opt);
    classify->add_option("--queries", opt.queries_path, "feature table to classify");
    classify->add_flag("--queries-header", opt.queries_header,
                       "skip one header line when reading --queries");

    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "verify the analytic feature gradient "
                                        "against finite differences");
    gradcheck_cmd->add_option("--seed", opt.config.seed, "seed for the instances");

    CLI::App* synth = app.add_subcommand("synth", "write a synthetic feature table");
    synth->add_option("--synth", opt.synth_spec,
                      "d,c,n_per_class,separation,nuisance_scale")
        ->delimiter(',')
        ->expected(5);
    synth->add_option("--seed", opt.config.seed, "generator seed");
    synth->add_option("--out", opt.out_path, "output file");
    synth->add_flag("--header", opt.synth_header, "write a label,f1,...,fd header line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage problems are configuration errors
    }

    try {
        if (cv->parsed()) return run_cv_command(opt);
        if (classify->parsed()) return run_classify_command(opt);
        if (gradcheck_cmd->parsed()) return run_gradcheck_command(opt);
        if (synth->parsed()) return run_synth_command(opt);
    } catch (const dmlcrc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const dmlcrc::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const dmlcrc::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
