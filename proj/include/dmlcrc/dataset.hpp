#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dmlcrc/errors.hpp"

namespace dmlcrc {

/// Per-class column index lists. Shared between a feature matrix and the
/// coefficient vectors coded against it, so slice maps can be compared.
using ClassPartition = std::vector<std::vector<int>>;

/// Immutable d x N feature matrix, one sample per column, with dense class
/// labels in [0, c). Every class must occur at least once and all entries
/// must be finite.
class FeatureMatrix {
public:
    FeatureMatrix(Eigen::MatrixXd columns, std::vector<int> labels);

    int dim() const { return static_cast<int>(columns_.rows()); }
    int count() const { return static_cast<int>(columns_.cols()); }
    int classes() const { return static_cast<int>(partition_->size()); }

    const Eigen::MatrixXd& columns() const { return columns_; }
    const std::vector<int>& labels() const { return labels_; }

    const std::vector<int>& class_indices(int i) const { return (*partition_)[i]; }
    int class_size(int i) const { return static_cast<int>((*partition_)[i].size()); }
    Eigen::MatrixXd class_columns(int i) const;

    std::shared_ptr<const ClassPartition> partition() const { return partition_; }

    /// New matrix keeping only the given columns (storage order preserved).
    /// Every class must survive the selection.
    FeatureMatrix subset(const std::vector<int>& indices) const;

private:
    Eigen::MatrixXd columns_;
    std::vector<int> labels_;
    std::shared_ptr<const ClassPartition> partition_;
};

/// Stratified fold assignment: assignments[j] is the fold of sample j.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;
};

/// Reads a feature table: one sample per line, `label,f1,...,fd`. Labels are
/// remapped to a dense [0, c) range preserving the sorted order of the
/// original values; column j of the result holds data row j.
FeatureMatrix load_feature_table(const std::string& path, bool has_header);

/// Writes the table format read by load_feature_table. Values are printed
/// with 17 significant digits so a round trip is bit-exact.
void save_feature_table(const FeatureMatrix& x, const std::string& path,
                        bool write_header);

/// Rescales every column to unit Euclidean norm.
FeatureMatrix normalize_columns(const FeatureMatrix& x);

/// Deterministic synthetic dataset: class i has mean separation * e_{i mod d};
/// coordinates [0, ceil(d/2)) carry unit Gaussian noise and the remaining
/// coordinates carry Gaussian noise of standard deviation nuisance_scale.
/// Columns are grouped by class. See RandomStream for the generator.
FeatureMatrix synthesize(std::uint64_t seed, int d, int c, int n_per_class,
                         double separation, double nuisance_scale);

/// Stratified k-fold split: within each class, samples are shuffled by seed
/// (Fisher-Yates) and dealt round-robin to folds, so per-class fold sizes
/// differ by at most one.
FoldPlan kfold_split(const FeatureMatrix& x, int k, std::uint64_t seed);

}  // namespace dmlcrc
