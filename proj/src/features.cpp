#include "wadapt/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wadapt/error.hpp"

namespace wadapt {
namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

double sum_sq_over_n(const std::vector<double>& counts, double n) {
  double s = 0.0;
  for (double c : counts) s += c * c;
  return n > 0.0 ? s / n : 0.0;
}

class TreeBuilder {
 public:
  TreeBuilder(const RowMatrixXd& X, std::span<const int> y, int n_classes, const ForestConfig& cfg,
              std::mt19937_64& rng)
      : X_(X), y_(y), n_classes_(n_classes), cfg_(cfg), rng_(rng) {
    const int nf = static_cast<int>(X.cols());
    per_split_ = cfg.features_per_split > 0 ? cfg.features_per_split
                                            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(nf))));
    if (per_split_ < 1 || per_split_ > nf) {
      throw Error(Errc::InvalidArgument, "features_per_split must lie in [1, " + std::to_string(nf) + "]");
    }
    all_features_.resize(static_cast<std::size_t>(nf));
    std::iota(all_features_.begin(), all_features_.end(), 0);
  }

  Tree build(std::vector<Index> rows) {
    Tree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  std::vector<std::size_t> count_classes(const std::vector<Index>& rows) const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
    for (Index r : rows) ++counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])];
    return counts;
  }

  int grow(Tree& tree, std::vector<Index> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode node;
    node.n_samples = rows.size();
    node.class_counts = count_classes(rows);

    const bool pure = std::count_if(node.class_counts.begin(), node.class_counts.end(),
                                    [](std::size_t c) { return c > 0; }) <= 1;
    const auto min_leaf = static_cast<std::size_t>(std::max(cfg_.min_samples_leaf, 1));
    if (pure || depth >= cfg_.max_depth || rows.size() < 2 * min_leaf) {
      tree.nodes[static_cast<std::size_t>(id)] = std::move(node);
      return id;
    }

    const SplitChoice best = find_split(rows, node.class_counts, min_leaf);
    if (best.feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)] = std::move(node);
      return id;
    }

    std::vector<Index> left_rows, right_rows;
    for (Index r : rows) {
      (X_(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    node.feature = best.feature;
    node.threshold = best.threshold;
    node.impurity_decrease = best.decrease;
    tree.nodes[static_cast<std::size_t>(id)] = std::move(node);
    const int left = grow(tree, std::move(left_rows), depth + 1);
    const int right = grow(tree, std::move(right_rows), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = left;
    tree.nodes[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  SplitChoice find_split(const std::vector<Index>& rows, const std::vector<std::size_t>& counts,
                         std::size_t min_leaf) {
    // Partial Fisher-Yates draw of the candidate features.
    std::vector<int> features = all_features_;
    for (int i = 0; i < per_split_; ++i) {
      std::uniform_int_distribution<int> pick(i, static_cast<int>(features.size()) - 1);
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(pick(rng_))]);
    }

    const double n = static_cast<double>(rows.size());
    std::vector<double> parent(counts.begin(), counts.end());
    const double parent_term = sum_sq_over_n(parent, n);

    SplitChoice best;
    std::vector<std::pair<double, int>> column(rows.size());
    std::vector<double> left(static_cast<std::size_t>(n_classes_));
    std::vector<double> right(static_cast<std::size_t>(n_classes_));
    for (int fi = 0; fi < per_split_; ++fi) {
      const int f = features[static_cast<std::size_t>(fi)];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {X_(rows[i], f), y_[static_cast<std::size_t>(rows[i])]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;

      std::fill(left.begin(), left.end(), 0.0);
      right = parent;
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double c : right) right_sq += c * c;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const auto k = static_cast<std::size_t>(column[i].second);
        left_sq += 2.0 * left[k] + 1.0;
        right_sq += -2.0 * right[k] + 1.0;
        left[k] += 1.0;
        right[k] -= 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = column.size() - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double decrease =
            left_sq / static_cast<double>(n_left) + right_sq / static_cast<double>(n_right) - parent_term;
        if (decrease > best.decrease + 1e-12) {
          best.feature = f;
          best.threshold = 0.5 * (column[i].first + column[i + 1].first);
          best.decrease = decrease;
        }
      }
    }
    return best;
  }

  const RowMatrixXd& X_;
  std::span<const int> y_;
  int n_classes_;
  const ForestConfig& cfg_;
  std::mt19937_64& rng_;
  int per_split_ = 1;
  std::vector<int> all_features_;
};

void check_inputs(const RowMatrixXd& X, std::span<const int> y, int n_classes) {
  if (X.rows() == 0 || y.empty()) throw Error(Errc::EmptyDataset, "tree induction needs at least one sample");
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(Errc::ShapeMismatch, "feature rows and label count differ");
  }
  if (n_classes < 1) throw Error(Errc::InvalidArgument, "n_classes must be positive");
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw Error(Errc::OutOfRange, "label outside [0, n_classes)");
  }
}

}  // namespace

int Tree::predict(const Eigen::Ref<const VectorXd>& x) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(id)];
    id = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  const auto& counts = nodes[static_cast<std::size_t>(id)].class_counts;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

int Tree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

double gini_impurity(std::span<const std::size_t> class_counts) {
  double n = 0.0;
  double sq = 0.0;
  for (std::size_t c : class_counts) {
    n += static_cast<double>(c);
    sq += static_cast<double>(c) * static_cast<double>(c);
  }
  return n > 0.0 ? 1.0 - sq / (n * n) : 0.0;
}

Tree build_tree(const RowMatrixXd& X, std::span<const int> y, int n_classes, std::span<const Index> sample_rows,
                const ForestConfig& cfg, std::mt19937_64& rng) {
  check_inputs(X, y, n_classes);
  if (sample_rows.empty()) throw Error(Errc::EmptyDataset, "tree induction needs at least one sample");
  TreeBuilder builder(X, y, n_classes, cfg, rng);
  return builder.build(std::vector<Index>(sample_rows.begin(), sample_rows.end()));
}

Tree build_tree(const RowMatrixXd& X, std::span<const int> y, int n_classes, const ForestConfig& cfg,
                std::mt19937_64& rng) {
  std::vector<Index> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return build_tree(X, y, n_classes, rows, cfg, rng);
}

VectorXd tree_importances(const Tree& tree, Index n_features) {
  VectorXd imp = VectorXd::Zero(n_features);
  if (tree.nodes.empty()) return imp;
  for (const TreeNode& n : tree.nodes) {
    if (!n.is_leaf()) imp[n.feature] += n.impurity_decrease;
  }
  return imp / static_cast<double>(tree.nodes.front().n_samples);
}

Forest fit_forest(const RowMatrixXd& X, std::span<const int> y, int n_classes, const ForestConfig& cfg) {
  check_inputs(X, y, n_classes);
  if (cfg.n_trees < 1) throw Error(Errc::InvalidArgument, "n_trees must be positive");
  Forest forest;
  forest.config = cfg;
  forest.importances = VectorXd::Zero(X.cols());
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<Index> rows(n);
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    if (cfg.bootstrap) {
      std::uniform_int_distribution<Index> draw(0, static_cast<Index>(n) - 1);
      for (auto& r : rows) r = draw(rng);
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    forest.trees.push_back(build_tree(X, y, n_classes, rows, cfg, rng));
    VectorXd imp = tree_importances(forest.trees.back(), X.cols());
    const double total = imp.sum();
    if (total > 0.0) forest.importances += imp / total;
  }
  const double total = forest.importances.sum();
  if (total > 0.0) forest.importances /= total;
  return forest;
}

std::vector<Index> select_top_k(const VectorXd& importances, Index k) {
  if (k < 1 || k > importances.size()) {
    throw Error(Errc::OutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(importances.size()) + "]");
  }
  std::vector<Index> order(static_cast<std::size_t>(importances.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return importances[a] > importances[b]; });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

std::vector<Index> select_top_k(const Forest& forest, Index k) { return select_top_k(forest.importances, k); }

RowMatrixXd feature_matrix(const AlignedSeries& series) {
  RowMatrixXd X(static_cast<Index>(series.samples.size()), series.n_features());
  for (std::size_t i = 0; i < series.samples.size(); ++i) X.row(static_cast<Index>(i)) = series.samples[i].features;
  return X;
}

RowMatrixXd correlation_matrix(const AlignedSeries& series, std::span<const Index> feature_indices) {
  if (series.samples.size() < 2) throw Error(Errc::EmptyDataset, "correlation needs at least 2 samples");
  const Index k = static_cast<Index>(feature_indices.size());
  Eigen::MatrixXd X(static_cast<Index>(series.samples.size()), k);
  for (std::size_t i = 0; i < series.samples.size(); ++i) {
    for (Index j = 0; j < k; ++j) {
      const Index f = feature_indices[static_cast<std::size_t>(j)];
      if (f < 0 || f >= series.n_features()) throw Error(Errc::OutOfRange, "feature index out of range");
      X(static_cast<Index>(i), j) = series.samples[i].features[f];
    }
  }
  const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Index j = 0; j < k; ++j) {
    if (!(sd[j] > 0.0)) {
      throw Error(Errc::DegenerateFeature,
                  "feature '" + series.feature_names[static_cast<std::size_t>(feature_indices[static_cast<std::size_t>(j)])] +
                      "' has zero variance");
    }
  }
  const Eigen::MatrixXd scaled = sd.asDiagonal().inverse() * cov * sd.asDiagonal().inverse();
  RowMatrixXd corr = (0.5 * (scaled + scaled.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
  corr.diagonal().setOnes();
  return corr;
}

void write_importances_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                           const VectorXd& importances) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out.precision(17);
  out << "feature,importance\n";
  for (Index j = 0; j < importances.size(); ++j) out << names[static_cast<std::size_t>(j)] << ',' << importances[j] << '\n';
}

void write_correlation_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                           const RowMatrixXd& corr) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out.precision(17);
  out << "feature";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Index i = 0; i < corr.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < corr.cols(); ++j) out << ',' << corr(i, j);
    out << '\n';
  }
}

}  // namespace wadapt
