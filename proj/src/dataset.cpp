#include "dmlcrc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dmlcrc/rng.hpp"

namespace dmlcrc {

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd columns, std::vector<int> labels)
    : columns_(std::move(columns)), labels_(std::move(labels)) {
    if (columns_.rows() < 1 || columns_.cols() < 1)
        throw DimensionMismatch("feature matrix must have at least one row and column");
    if (static_cast<Eigen::Index>(labels_.size()) != columns_.cols())
        throw DimensionMismatch("label count " + std::to_string(labels_.size()) +
                                " does not match column count " +
                                std::to_string(columns_.cols()));
    if (!columns_.allFinite())
        throw NonFinite("feature matrix has non-finite entries");

    int max_label = -1;
    for (int lab : labels_) {
        if (lab < 0) throw DataError("negative class label " + std::to_string(lab));
        max_label = std::max(max_label, lab);
    }
    auto part = std::make_shared<ClassPartition>(max_label + 1);
    for (int j = 0; j < count(); ++j) (*part)[labels_[j]].push_back(j);
    for (int i = 0; i <= max_label; ++i)
        if ((*part)[i].empty()) throw EmptyClass(i);
    partition_ = std::move(part);
}

Eigen::MatrixXd FeatureMatrix::class_columns(int i) const {
    const auto& idx = class_indices(i);
    Eigen::MatrixXd out(dim(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = columns_.col(idx[j]);
    return out;
}

FeatureMatrix FeatureMatrix::subset(const std::vector<int>& indices) const {
    Eigen::MatrixXd cols(dim(), indices.size());
    std::vector<int> labs(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        cols.col(j) = columns_.col(indices[j]);
        labs[j] = labels_[indices[j]];
    }
    return FeatureMatrix(std::move(cols), std::move(labs));
}

namespace {

// Splits on commas; trims spaces, tabs and a trailing CR from each field.
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string field = line.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? std::string()
                                                : field.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !s.empty();
}

bool parse_int(const std::string& s, long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !s.empty();
}

}  // namespace

FeatureMatrix load_feature_table(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::vector<long> raw_labels;
    std::string line;
    int line_no = 0;
    int dim = -1;
    bool skipped_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (has_header && !skipped_header) {
            skipped_header = true;
            continue;
        }
        // tolerate blank lines (trailing newlines, hand-edited files)
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        std::vector<std::string> fields = split_fields(line);
        if (static_cast<int>(fields.size()) < 2)
            throw RaggedRows("expected a label and at least one feature", line_no);
        if (dim < 0) {
            dim = static_cast<int>(fields.size()) - 1;
        } else if (static_cast<int>(fields.size()) - 1 != dim) {
            throw RaggedRows("expected " + std::to_string(dim) + " features, got " +
                             std::to_string(fields.size() - 1), line_no);
        }

        long label;
        if (!parse_int(fields[0], label))
            throw ParseError("cannot parse label '" + fields[0] + "'", line_no, 1);
        raw_labels.push_back(label);

        std::vector<double> feats(dim);
        for (int j = 0; j < dim; ++j) {
            if (!parse_double(fields[j + 1], feats[j]))
                throw ParseError("cannot parse value '" + fields[j + 1] + "'",
                                 line_no, j + 2);
        }
        rows.push_back(std::move(feats));
    }

    if (rows.empty()) throw EmptyFile("no data rows in " + path);

    // dense remap preserving the sorted order of the original label values
    std::map<long, int> remap;
    for (long lab : raw_labels) remap[lab] = 0;
    int next = 0;
    for (auto& [lab, id] : remap) id = next++;

    Eigen::MatrixXd cols(dim, rows.size());
    std::vector<int> labels(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (int i = 0; i < dim; ++i) cols(i, j) = rows[j][i];
        labels[j] = remap[raw_labels[j]];
    }
    return FeatureMatrix(std::move(cols), std::move(labels));
}

void save_feature_table(const FeatureMatrix& x, const std::string& path,
                        bool write_header) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    if (write_header) {
        out << "label";
        for (int i = 1; i <= x.dim(); ++i) out << ",f" << i;
        out << "\n";
    }
    char buf[40];
    for (int j = 0; j < x.count(); ++j) {
        out << x.labels()[j];
        for (int i = 0; i < x.dim(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", x.columns()(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write to " + path + " failed");
}

FeatureMatrix normalize_columns(const FeatureMatrix& x) {
    Eigen::MatrixXd cols = x.columns();
    for (int j = 0; j < x.count(); ++j) {
        double norm = cols.col(j).norm();
        if (norm == 0.0) throw ZeroColumn(j);
        cols.col(j) /= norm;
    }
    return FeatureMatrix(std::move(cols), x.labels());
}

FeatureMatrix synthesize(std::uint64_t seed, int d, int c, int n_per_class,
                         double separation, double nuisance_scale) {
    if (d < 2) throw std::invalid_argument("synthesize: d must be at least 2");
    if (c < 1 || n_per_class < 1)
        throw std::invalid_argument("synthesize: c and n_per_class must be positive");
    if (separation < 0.0 || nuisance_scale < 0.0)
        throw std::invalid_argument("synthesize: scales must be non-negative");

    RandomStream rng(seed);
    int unit_coords = (d + 1) / 2;  // ceil(d/2)
    Eigen::MatrixXd cols(d, static_cast<Eigen::Index>(c) * n_per_class);
    std::vector<int> labels(static_cast<std::size_t>(c) * n_per_class);

    int col = 0;
    for (int i = 0; i < c; ++i) {
        for (int s = 0; s < n_per_class; ++s, ++col) {
            for (int r = 0; r < d; ++r) {
                double sd = r < unit_coords ? 1.0 : nuisance_scale;
                double mean = (r == i % d) ? separation : 0.0;
                cols(r, col) = mean + sd * rng.gaussian();
            }
            labels[col] = i;
        }
    }
    return FeatureMatrix(std::move(cols), std::move(labels));
}

FoldPlan kfold_split(const FeatureMatrix& x, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_split: k must be at least 2");
    for (int i = 0; i < x.classes(); ++i)
        if (x.class_size(i) < k) throw ClassTooSmall(i, x.class_size(i), k);

    RandomStream rng(seed);
    FoldPlan plan;
    plan.k = k;
    plan.assignments.assign(x.count(), 0);
    for (int i = 0; i < x.classes(); ++i) {
        std::vector<int> idx = x.class_indices(i);
        for (std::size_t j = idx.size() - 1; j > 0; --j)
            std::swap(idx[j], idx[rng.uniform_below(j + 1)]);
        for (std::size_t j = 0; j < idx.size(); ++j)
            plan.assignments[idx[j]] = static_cast<int>(j % k);
    }
    return plan;
}

}  // namespace dmlcrc
