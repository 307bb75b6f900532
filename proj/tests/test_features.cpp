#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "wadapt/error.hpp"
#include "wadapt/features.hpp"
#include "wadapt/labeling.hpp"

using namespace wadapt;

namespace {

struct Fixture {
  RowMatrixXd X;
  std::vector<int> y;
};

Fixture random_fixture(Index n, Index F, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f{oracle::random_matrix(n, F, rng), {}};
  std::uniform_int_distribution<int> noise(0, classes - 1);
  for (Index i = 0; i < n; ++i) {
    // Labels depend on feature 1 with some noise so the best split is informative.
    const int signal = f.X(i, 1) > 0.3 ? classes - 1 : 0;
    f.y.push_back(noise(rng) % 3 == 0 ? noise(rng) : signal);
  }
  return f;
}

}  // namespace

TEST(Gini, KnownValues) {
  const std::vector<std::size_t> pure = {5, 0};
  const std::vector<std::size_t> even = {5, 5};
  const std::vector<std::size_t> three = {1, 1, 1};
  EXPECT_DOUBLE_EQ(gini_impurity(pure), 0.0);
  EXPECT_DOUBLE_EQ(gini_impurity(even), 0.5);
  EXPECT_NEAR(gini_impurity(three), 2.0 / 3.0, 1e-15);
}

TEST(Tree, RootSplitMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const Index n = 10 + static_cast<Index>(seed % 41);  // 11..50 samples
    const auto f = random_fixture(n, 4, 3, seed);
    ForestConfig cfg;
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 1 + static_cast<int>(seed % 3);
    cfg.features_per_split = 4;
    std::mt19937_64 rng(seed);
    const Tree t = build_tree(f.X, f.y, 3, cfg, rng);
    const auto best = oracle::exhaustive_split(f.X, f.y, 3, static_cast<std::size_t>(cfg.min_samples_leaf));
    ASSERT_FALSE(t.nodes.empty());
    if (best.feature < 0) {
      EXPECT_TRUE(t.nodes[0].is_leaf());
      continue;
    }
    ASSERT_FALSE(t.nodes[0].is_leaf()) << "seed " << seed;
    EXPECT_EQ(t.nodes[0].feature, best.feature) << "seed " << seed;
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, best.threshold) << "seed " << seed;
    EXPECT_NEAR(t.nodes[0].impurity_decrease, best.decrease, 1e-9) << "seed " << seed;
  }
}

TEST(Tree, EveryInternalNodeIsItsSubsetsBestSplit) {
  const auto f = random_fixture(48, 3, 2, 99);
  ForestConfig cfg;
  cfg.max_depth = 4;
  cfg.min_samples_leaf = 2;
  cfg.features_per_split = 3;
  std::mt19937_64 rng(1);
  const Tree t = build_tree(f.X, f.y, 2, cfg, rng);

  // Re-derive each node's rows by routing the fixture down the tree.
  std::vector<std::vector<Index>> rows(t.nodes.size());
  for (Index i = 0; i < f.X.rows(); ++i) {
    int id = 0;
    rows[0].push_back(i);
    while (!t.nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& nd = t.nodes[static_cast<std::size_t>(id)];
      id = f.X(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
      rows[static_cast<std::size_t>(id)].push_back(i);
    }
  }
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    const auto& nd = t.nodes[id];
    EXPECT_EQ(nd.n_samples, rows[id].size());
    if (nd.is_leaf()) continue;
    RowMatrixXd sub(static_cast<Index>(rows[id].size()), f.X.cols());
    std::vector<int> ys;
    for (std::size_t r = 0; r < rows[id].size(); ++r) {
      sub.row(static_cast<Index>(r)) = f.X.row(rows[id][r]);
      ys.push_back(f.y[static_cast<std::size_t>(rows[id][r])]);
    }
    const auto best = oracle::exhaustive_split(sub, ys, 2, 2);
    EXPECT_EQ(nd.feature, best.feature);
    EXPECT_DOUBLE_EQ(nd.threshold, best.threshold);
  }
  EXPECT_LE(t.depth(), 4);
}

TEST(Tree, PureNodeIsLeafAndPredicts) {
  RowMatrixXd X(4, 1);
  X << 1, 2, 3, 4;
  const std::vector<int> y = {1, 1, 1, 1};
  std::mt19937_64 rng(0);
  ForestConfig cfg;
  cfg.min_samples_leaf = 1;
  const Tree t = build_tree(X, y, 2, cfg, rng);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.predict(X.row(0).transpose()), 1);
}

TEST(Tree, SeparableDataIsMemorized) {
  RowMatrixXd X(8, 1);
  X << 0, 1, 2, 3, 10, 11, 12, 13;
  const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  std::mt19937_64 rng(0);
  ForestConfig cfg;
  cfg.min_samples_leaf = 1;
  const Tree t = build_tree(X, y, 2, cfg, rng);
  EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 6.5);
  for (Index i = 0; i < 8; ++i) EXPECT_EQ(t.predict(X.row(i).transpose()), y[static_cast<std::size_t>(i)]);
}

TEST(Forest, ImportancesNormalizedAndDeterministic) {
  const auto f = random_fixture(300, 5, 3, 4);
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.seed = 12;
  const Forest a = fit_forest(f.X, f.y, 3, cfg);
  const Forest b = fit_forest(f.X, f.y, 3, cfg);
  EXPECT_EQ(a.trees.size(), 15u);
  EXPECT_NEAR(a.importances.sum(), 1.0, 1e-12);
  EXPECT_GE(a.importances.minCoeff(), 0.0);
  EXPECT_EQ(a.importances, b.importances);
  Index top = 0;
  a.importances.maxCoeff(&top);
  EXPECT_EQ(top, 1);
}

TEST(Forest, FlatImportancesWhenNoFeatureHelps) {
  // Labels independent of every feature: no feature should dominate.
  std::mt19937_64 rng(8);
  const RowMatrixXd X = oracle::random_matrix(2000, 4, rng);
  std::vector<int> y;
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < X.rows(); ++i) y.push_back(coin(rng));
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.max_depth = 4;
  cfg.min_samples_leaf = 20;
  const Forest forest = fit_forest(X, y, 2, cfg);
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(forest.importances[j], 0.25, 0.12);
}

TEST(Forest, PlantedFeaturesRecovered) {
  SynthConfig c;
  c.n_hours = 4000;
  c.seed = 21;
  const auto s = synth_domain(c);
  const RowMatrixXd X = feature_matrix(s);
  const BinSpec bins = make_bins(6);
  std::vector<int> y;
  for (const auto& smp : s.samples) y.push_back(assign_bin(smp.capacity_factor, bins));
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.seed = 2;
  const Forest forest = fit_forest(X, y, 6, cfg);
  auto top = select_top_k(forest, 6);
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, synth_causal_features(18));
}

TEST(SelectTopK, OrderAndTies) {
  VectorXd imp(5);
  imp << 0.1, 0.3, 0.3, 0.05, 0.25;
  EXPECT_EQ(select_top_k(imp, 3), (std::vector<Index>{1, 2, 4}));
  EXPECT_EQ(select_top_k(imp, 5).size(), 5u);
  EXPECT_THROW(select_top_k(imp, 6), Error);
}

TEST(Correlation, MatchesTwoPassOracle) {
  const auto s = oracle::toy_series(500, 5, 3);
  // Introduce a strong linear relation between two columns.
  auto series = s;
  for (auto& smp : series.samples) smp.features[3] = 2.0 * smp.features[0] + 0.1 * smp.features[3];
  const std::vector<Index> all = {0, 1, 2, 3, 4};
  const RowMatrixXd corr = correlation_matrix(series, all);
  const RowMatrixXd ref = oracle::correlation_two_pass(feature_matrix(series));
  EXPECT_LE((corr - ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(corr, corr.transpose());
  for (Index i = 0; i < 5; ++i) EXPECT_EQ(corr(i, i), 1.0);
}

TEST(Correlation, SubsetAndDegenerate) {
  auto s = oracle::toy_series(100, 4, 5);
  const std::vector<Index> sub = {2, 0};
  const RowMatrixXd corr = correlation_matrix(s, sub);
  ASSERT_EQ(corr.rows(), 2);
  const RowMatrixXd full = oracle::correlation_two_pass(feature_matrix(s));
  EXPECT_NEAR(corr(0, 1), full(2, 0), 1e-12);

  for (auto& smp : s.samples) smp.features[1] = 3.0;
  try {
    const std::vector<Index> all = {0, 1, 2, 3};
    correlation_matrix(s, all);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateFeature);
    EXPECT_NE(std::string(e.what()).find("f1"), std::string::npos);
  }
}
