#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "wadapt/error.hpp"
#include "wadapt/experiments.hpp"

using namespace wadapt;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.window = 8;
  c.feature_indices = synth_causal_features(18);
  c.arch.conv1 = 4;
  c.arch.conv2 = 4;
  c.arch.hidden = 8;
  c.source_train.max_epochs = 2;
  c.source_train.patience = 1;
  c.adapt_train = c.source_train;
  c.root_seed = 77;
  c.forest.n_trees = 10;
  return c;
}

DomainSpec synth(const std::string& name, double shift, std::uint64_t seed, std::size_t hours = 1200) {
  SynthConfig s;
  s.n_hours = hours;
  s.shift = shift;
  s.seed = seed;
  s.name = name;
  return {name, synth_domain(s)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(MatrixCell, DiffIsTheSubtraction) {
  const auto c = matrix_cell("Germany", "France", 53.25, 67.25);
  EXPECT_NEAR(c.diff, 14.00, 1e-9);
  EXPECT_EQ(c.diff, c.acc_with - c.acc_without);
}

TEST(Matrix, ThreeDomainsSixCells) {
  const std::vector<DomainSpec> d = {synth("A", 0.0, 1), synth("B", 1.0, 2), synth("C", 0.5, 3)};
  const auto m = run_matrix(d, small_config());
  EXPECT_EQ(m.cells.size(), 6u);
  for (const auto& c : m.cells) {
    EXPECT_NE(c.source, c.target);
    EXPECT_EQ(c.diff, c.acc_with - c.acc_without);
    EXPECT_GE(c.acc_with, 0.0);
    EXPECT_LE(c.acc_with, 100.0);
  }
  EXPECT_FALSE(m.at("A", "A").has_value());
  EXPECT_TRUE(m.at("C", "A").has_value());
  // Cells sharing a source share its checkpoint.
  EXPECT_EQ(m.at("A", "B")->checkpoint_hash, m.at("A", "C")->checkpoint_hash);
  EXPECT_NE(m.at("A", "B")->checkpoint_hash, m.at("B", "A")->checkpoint_hash);
}

TEST(Matrix, IdenticalDomainsDoNotRegress) {
  const auto a = synth("A", 0.0, 4, 2500);
  auto b = a;
  b.name = "B";
  auto cfg = small_config();
  cfg.source_train.max_epochs = 4;
  cfg.source_train.patience = 3;
  cfg.adapt_train = cfg.source_train;
  const auto m = run_matrix({a, b}, cfg);
  for (const auto& c : m.cells) EXPECT_GE(c.acc_with, c.acc_without - 2.0) << c.source << "->" << c.target;
}

TEST(Matrix, RerunIsByteIdentical) {
  const auto dir = oracle::scratch_dir("matrix_rerun");
  const std::vector<DomainSpec> d = {synth("A", 0.0, 1, 600), synth("B", 1.0, 2, 600)};
  auto cfg = small_config();
  cfg.work_dir = dir / "ck1";
  write_matrix_csv(dir / "m1.csv", run_matrix(d, cfg));
  cfg.work_dir = dir / "ck2";
  write_matrix_csv(dir / "m2.csv", run_matrix(d, cfg));
  EXPECT_EQ(slurp(dir / "m1.csv"), slurp(dir / "m2.csv"));
  EXPECT_EQ(slurp(dir / "ck1" / "A.ckpt"), slurp(dir / "ck2" / "A.ckpt"));
  const auto text = slurp(dir / "m1.csv");
  EXPECT_NE(text.find("A,A,N/A,N/A,N/A"), std::string::npos);
}

TEST(Matrix, Validation) {
  EXPECT_THROW(run_matrix({synth("A", 0.0, 1, 300)}, small_config()), Error);
  EXPECT_THROW(run_matrix({synth("A", 0.0, 1, 300), synth("A", 0.0, 2, 300)}, small_config()), Error);
}

TEST(PartialVsFull, SharedStartAndDifference) {
  const auto r = run_partial_vs_full(synth("S", 0.0, 1), synth("T", 1.0, 2), small_config());
  EXPECT_EQ(r.partial.initial_eval_accuracy, r.full.initial_eval_accuracy);
  EXPECT_EQ(r.difference, r.acc_full - r.acc_partial);
}

TEST(FeatureAblation, SelectingEverythingChangesNothing) {
  auto cfg = small_config();
  const auto r = run_feature_ablation(synth("D", 0.0, 3, 800), 18, cfg);
  EXPECT_EQ(r.selected.size(), 18u);
  EXPECT_EQ(r.acc_all, r.acc_selected);
  EXPECT_EQ(r.difference, 0.0);
}

TEST(FeatureAblation, SelectedSetKeepsAccuracy) {
  auto cfg = small_config();
  cfg.window = 12;
  cfg.source_train.max_epochs = 6;
  cfg.source_train.patience = 5;
  cfg.forest.n_trees = 30;
  const auto r = run_feature_ablation(synth("D", 0.0, 6, 4000), 6, cfg);
  auto sel = r.selected;
  std::sort(sel.begin(), sel.end());
  EXPECT_EQ(sel, synth_causal_features(18));
  EXPECT_GE(r.acc_selected, r.acc_all - 5.0);
  EXPECT_THROW(run_feature_ablation(synth("D", 0.0, 6, 300), 19, cfg), Error);
}

TEST(Convergence, CurvesShareGridAndCsv) {
  const auto dir = oracle::scratch_dir("curves");
  auto cfg = small_config();
  cfg.source_train.max_epochs = 3;
  cfg.source_train.patience = 2;
  cfg.adapt_train = cfg.source_train;
  const auto r = run_convergence_comparison(synth("S", 0.0, 1), synth("T", 1.0, 2), cfg);
  for (const auto* h : {&r.scratch, &r.adapted}) {
    for (std::size_t i = 0; i < h->epochs.size(); ++i) EXPECT_EQ(h->epochs[i].epoch, static_cast<int>(i) + 1);
  }
  EXPECT_EQ(r.saturation_scratch, epochs_to_saturation(r.scratch));
  write_curves_csv(dir / "c.csv", r);
  std::ifstream in(dir / "c.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2 + static_cast<int>(std::max(r.scratch.epochs.size(), r.adapted.epochs.size())));
}

TEST(Hashing, Fnv1aKnownVectors) {
  const std::string a = "a";
  EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(a.data()), 1)), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}
