#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wadapt/ingest.hpp"
#include "wadapt/types.hpp"

namespace wadapt {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 12;
  int min_samples_leaf = 5;
  /// Features examined per split; 0 means ceil(sqrt(F)).
  int features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// One node of a classification tree. Leaves have `feature == -1`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// n·gini(node) − n_l·gini(left) − n_r·gini(right); zero for leaves.
  double impurity_decrease = 0.0;
  std::size_t n_samples = 0;
  std::vector<std::size_t> class_counts;

  bool is_leaf() const { return feature < 0; }
};

/// Nodes stored flat; index 0 is the root, children refer by index.
struct Tree {
  std::vector<TreeNode> nodes;

  int predict(const Eigen::Ref<const VectorXd>& x) const;
  int depth() const;
};

struct Forest {
  std::vector<Tree> trees;
  VectorXd importances;
  ForestConfig config;
};

double gini_impurity(std::span<const std::size_t> class_counts);

/// Grows one Gini CART tree on rows `sample_rows` of X (duplicates allowed,
/// as produced by bootstrap resampling). Thresholds are midpoints between
/// consecutive distinct values; splits leaving fewer than min_samples_leaf
/// rows on either side are not considered.
Tree build_tree(const RowMatrixXd& X, std::span<const int> y, int n_classes, std::span<const Index> sample_rows,
                const ForestConfig& cfg, std::mt19937_64& rng);

/// Convenience overload growing on every row of X.
Tree build_tree(const RowMatrixXd& X, std::span<const int> y, int n_classes, const ForestConfig& cfg,
                std::mt19937_64& rng);

/// Per-feature mean decrease in impurity of one tree, normalized by its
/// root sample count.
VectorXd tree_importances(const Tree& tree, Index n_features);

/// Trees use independent RNG streams keyed on (seed, tree index).
Forest fit_forest(const RowMatrixXd& X, std::span<const int> y, int n_classes, const ForestConfig& cfg);

/// Indices of the k largest importances, descending; ties go to the lower index.
std::vector<Index> select_top_k(const VectorXd& importances, Index k);
std::vector<Index> select_top_k(const Forest& forest, Index k);

/// Pearson correlation of the chosen features. Throws DegenerateFeature
/// naming any zero-variance feature.
RowMatrixXd correlation_matrix(const AlignedSeries& series, std::span<const Index> feature_indices);

/// Stacks the sample feature vectors into a T×F matrix.
RowMatrixXd feature_matrix(const AlignedSeries& series);

void write_importances_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                           const VectorXd& importances);
void write_correlation_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                           const RowMatrixXd& corr);

}  // namespace wadapt
