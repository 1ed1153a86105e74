#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "dmlcrc/harness.hpp"
#include "dmlcrc/rng.hpp"

using namespace dmlcrc;

TEST_CASE("run_cv: a single-class dataset scores 1.0 in every fold") {
    RunConfig config;
    config.method = Method::kCrc;
    config.synth = SynthSpec{6, 1, 15, 0.0, 1.0};
    config.folds = 5;
    CvReport report = run_cv(config);
    for (double acc : report.fold_accuracy) CHECK(acc == doctest::Approx(1.0));
    CHECK(report.mean == doctest::Approx(1.0));
}

TEST_CASE("run_cv: zero separation stays at chance level") {
    RunConfig config;
    config.method = Method::kCrc;
    config.synth = SynthSpec{8, 4, 20, 0.0, 1.0};
    config.folds = 5;
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        config.seed = seed;
        sum += run_cv(config).mean;
    }
    double mean = sum / 5.0;
    CHECK(mean >= 0.15);
    CHECK(mean <= 0.35);
}

TEST_CASE("run_cv: identical configs give bit-identical reports") {
    RunConfig config;
    config.method = Method::kCrc;
    config.synth = SynthSpec{8, 3, 12, 2.0, 2.0};
    config.seed = 7;
    config.folds = 4;
    CHECK(run_cv(config).to_csv() == run_cv(config).to_csv());
}

TEST_CASE("run_cv: the mean row equals the arithmetic fold mean") {
    RunConfig config;
    config.method = Method::kProcrc;
    config.synth = SynthSpec{6, 3, 10, 2.0, 1.0};
    config.folds = 5;
    CvReport report = run_cv(config);
    double sum = 0.0;
    for (double acc : report.fold_accuracy) sum += acc;
    CHECK(report.mean == doctest::Approx(sum / 5.0).epsilon(1e-15));
}

TEST_CASE("fold_partition: train and test are disjoint and cover everything") {
    FeatureMatrix x = synthesize(13, 6, 3, 10, 1.0, 1.0);
    FoldPlan plan = kfold_split(x, 5, 13);
    for (int fold = 0; fold < 5; ++fold) {
        auto [train, test] = fold_partition(plan, fold);
        CHECK(train.size() + test.size() == static_cast<std::size_t>(x.count()));
        std::set<int> seen(train.begin(), train.end());
        for (int idx : test) CHECK(seen.count(idx) == 0);
    }
}

TEST_CASE("canary: a duplicated uniquely-labeled sample never trains on its own fold") {
    // Class 2 holds two copies of the same sample. Stratified folding with
    // k = 2 must put the copies in different folds, and the training side of
    // each fold must exclude the test side's copy.
    RandomStream rng(211);
    const int d = 6;
    Eigen::MatrixXd cols(d, 10);
    std::vector<int> labels;
    for (int j = 0; j < 8; ++j) {
        cols.col(j) = rng.gaussian_vector(d);
        labels.push_back(j % 2);
    }
    Eigen::VectorXd canary = rng.gaussian_vector(d);
    cols.col(8) = canary;
    cols.col(9) = canary;
    labels.push_back(2);
    labels.push_back(2);
    FeatureMatrix x(cols, labels);

    FoldPlan plan = kfold_split(x, 2, 3);
    CHECK(plan.assignments[8] != plan.assignments[9]);
    for (int fold = 0; fold < 2; ++fold) {
        auto [train, test] = fold_partition(plan, fold);
        bool canary_in_test = false;
        for (int idx : test) canary_in_test |= (idx == 8 || idx == 9);
        if (!canary_in_test) continue;
        for (int idx : train) {
            bool same_copy_in_train =
                (idx == 8 && plan.assignments[8] == fold) ||
                (idx == 9 && plan.assignments[9] == fold);
            CHECK(!same_copy_in_train);
        }
    }
}

TEST_CASE("run_cv propagates fold failures with fold context") {
    RunConfig config;
    config.method = Method::kPcrc;
    config.synth = SynthSpec{4, 2, 10, 1.0, 1.0};
    config.folds = 5;
    config.patch = PatchScheme{9, 1};  // longer than the feature dimension
    CHECK_THROWS_WITH_AS(run_cv(config),
                         doctest::Contains("fold 0"), Error);
}

TEST_CASE("run_cv validates its configuration") {
    RunConfig config;
    config.method = Method::kCrc;
    CHECK_THROWS_AS(run_cv(config), ConfigError);  // no data source
    config.synth = SynthSpec{4, 2, 10, 1.0, 1.0};
    config.feature_path = "also_set.csv";
    CHECK_THROWS_AS(run_cv(config), ConfigError);  // both sources
    config.feature_path.reset();
    config.folds = 1;
    CHECK_THROWS_AS(run_cv(config), ConfigError);
}

TEST_CASE("CSV report round-trips through the parser") {
    RunConfig config;
    config.method = Method::kCrc;
    config.synth = SynthSpec{6, 3, 9, 3.0, 1.0};
    config.folds = 3;
    CvReport report = run_cv(config);
    std::string csv = report.to_csv();

    ParsedCvCsv parsed = parse_cv_csv(csv);
    CHECK(parsed.method == "crc");
    REQUIRE(parsed.fold_accuracy.size() == report.fold_accuracy.size());
    for (std::size_t f = 0; f < parsed.fold_accuracy.size(); ++f)
        CHECK(std::abs(parsed.fold_accuracy[f] - report.fold_accuracy[f]) <= 5e-7);
    CHECK(std::abs(parsed.mean - report.mean) <= 5e-7);

    // the rendered report re-renders identically after parsing
    CvReport again = report;
    again.fold_accuracy = parsed.fold_accuracy;
    again.mean = parsed.mean;
    CHECK(again.to_csv() == csv);
}

TEST_CASE("gradcheck passes on the shipped gradient and fails on a corrupted one") {
    RunConfig config;
    config.method = Method::kDmlCrc;
    config.seed = 42;
    GradcheckReport good = gradcheck(config);
    CHECK(good.pass);
    CHECK(good.max_rel_error <= 1e-5);
    REQUIRE(good.per_instance.size() == 20);
    // the zero-coefficient instance contributes zero error
    CHECK(good.per_instance[10] == 0.0);

    GradcheckReport bad = gradcheck(config, [](const FeatureMatrix& x,
                                               const Eigen::VectorXd& y,
                                               const ReconstructionVector& a,
                                               const MetricState& m) {
        return (-grad_features(x, y, a, m)).eval();
    });
    CHECK(!bad.pass);

    config.method = Method::kCrc;
    CHECK_THROWS_AS(gradcheck(config), ConfigError);
}

TEST_CASE("emit_synth: file round-trip, line count, header") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "dmlcrc_emit.csv";
    SynthSpec spec{7, 4, 30, 2.0, 3.0};

    emit_synth(spec, 21, path.string(), false);
    FeatureMatrix loaded = load_feature_table(path.string(), false);
    FeatureMatrix direct = synthesize(21, 7, 4, 30, 2.0, 3.0);
    CHECK(loaded.columns() == direct.columns());  // bitwise through 17 digits
    CHECK(loaded.labels() == direct.labels());

    std::ifstream in(path);
    int lines = 0;
    std::string line, first;
    while (std::getline(in, line)) {
        if (lines == 0) first = line;
        ++lines;
    }
    CHECK(lines == 120);
    CHECK(first.substr(0, 2) == "0,");

    emit_synth(spec, 21, path.string(), true);
    std::ifstream in2(path);
    std::getline(in2, first);
    CHECK(first == "label,f1,f2,f3,f4,f5,f6,f7");
    fs::remove(path);
}

TEST_CASE("method names parse both ways") {
    for (Method m : {Method::kCrc, Method::kPcrc, Method::kProcrc, Method::kDmlCrc,
                     Method::kDmlProcrc})
        CHECK(parse_method(method_name(m)) == m);
    CHECK(!parse_method("svm").has_value());
}

TEST_CASE("fold parallelism does not change the report") {
    RunConfig config;
    config.method = Method::kDmlCrc;
    config.synth = SynthSpec{6, 3, 10, 2.0, 3.0};
    config.folds = 5;
    config.hyper.inner_max_iters = 2;
    config.threads = 1;
    std::string serial = run_cv(config).to_csv();
    config.threads = 4;
    std::string parallel = run_cv(config).to_csv();
    CHECK(serial == parallel);

    // the DMLCRC_THREADS environment variable caps parallelism when the
    // config leaves it unset
    config.threads = 0;
    setenv("DMLCRC_THREADS", "2", 1);
    std::string from_env = run_cv(config).to_csv();
    unsetenv("DMLCRC_THREADS");
    CHECK(from_env == serial);
}
