#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "oracles.hpp"
#include "wadapt/error.hpp"
#include "wadapt/train.hpp"

using namespace wadapt;

namespace {

nn::Architecture small_arch(int W, int F, int N) {
  nn::Architecture a;
  a.window = W;
  a.features = F;
  a.classes = N;
  a.conv1 = 4;
  a.conv2 = 4;
  a.hidden = 8;
  return a;
}

WindowedDataset windows_of(const AlignedSeries& s, int W, int N) {
  std::vector<Index> feats(static_cast<std::size_t>(s.n_features()));
  std::iota(feats.begin(), feats.end(), Index{0});
  return window(s, W, feats, make_bins(N));
}

/// A model whose logits are the constant vector `bias`.
nn::ModelParams constant_model(const nn::Architecture& a, const VectorXd& bias) {
  auto p = nn::init_params(a, 1);
  p.fc2_w.setZero();
  p.fc2_b = bias;
  return p;
}

/// Keeps only the windows whose label is in `labels`, in that order.
WindowedDataset with_labels(const WindowedDataset& ds, const std::vector<int>& labels) {
  std::vector<WindowRef> picked;
  for (int want : labels) {
    for (const auto& w : ds.windows) {
      const bool used = std::any_of(picked.begin(), picked.end(), [&](const WindowRef& p) { return p.start == w.start; });
      if (w.label == want && !used) {
        picked.push_back(w);
        break;
      }
    }
  }
  return ds.subset(picked);
}

}  // namespace

TEST(Evaluate, AllCorrectAndHalfCorrect) {
  const auto ds = windows_of(oracle::separable_series(200, 1), 4, 2);
  const auto arch = small_arch(4, 2, 2);
  const auto zeros = with_labels(ds, {0, 0, 0});
  EXPECT_EQ(evaluate(constant_model(arch, VectorXd::Unit(2, 0)), zeros).accuracy, 1.0);
  const auto mixed = with_labels(ds, {0, 0, 1, 1});
  ASSERT_EQ(mixed.size(), 4u);
  const auto r = evaluate(constant_model(arch, VectorXd::Unit(2, 0)), mixed);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.confusion(0, 0), 2);
  EXPECT_EQ(r.confusion(1, 0), 2);
}

TEST(Evaluate, TiesGoToLowestClass) {
  const auto ds = windows_of(oracle::separable_series(50, 2), 4, 2);
  const auto p = constant_model(small_arch(4, 2, 2), VectorXd::Zero(2));
  for (int c : predict(p, ds)) EXPECT_EQ(c, 0);
}

TEST(Evaluate, ConfusionIdentities) {
  const auto ds = windows_of(oracle::balanced_series(300, 3, 4), 6, 6);
  const auto p = nn::init_params(small_arch(6, 3, 6), 11);
  const auto r = evaluate(p, ds);
  EXPECT_EQ(static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.sum()), r.accuracy);
  EXPECT_EQ(r.confusion.sum(), static_cast<std::int64_t>(ds.size()));
  for (int c = 0; c < 6; ++c) {
    std::int64_t count = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) count += ds.y(i) == c;
    EXPECT_EQ(r.confusion.row(c).sum(), count);
  }
  EXPECT_EQ(evaluate(p, ds).accuracy, r.accuracy);
}

TEST(Evaluate, EmptyAndMismatch) {
  const auto ds = windows_of(oracle::separable_series(50, 2), 4, 2);
  const auto p = nn::init_params(small_arch(4, 2, 2), 1);
  EXPECT_THROW(evaluate(p, ds.subset({})), Error);
  try {
    evaluate(nn::init_params(small_arch(4, 2, 3), 1), ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ArchMismatch);
    EXPECT_NE(std::string(e.what()).find("architecture mismatch"), std::string::npos);
  }
}

TEST(Train, MemorizesSingleSample) {
  const auto ds = windows_of(oracle::balanced_series(4, 2, 3), 4, 6);
  ASSERT_EQ(ds.size(), 1u);
  TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 59;
  cfg.seed = 1;
  const auto r = train_source(ds, ds, small_arch(4, 2, 6), cfg);
  EXPECT_EQ(r.history.epochs.back().train_accuracy, 1.0);
  EXPECT_EQ(evaluate(r.model, ds).accuracy, 1.0);
}

TEST(Train, Deterministic) {
  const auto ds = windows_of(oracle::separable_series(300, 5), 6, 2);
  const auto [tr, te] = split_chronological(ds, 0.7);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.patience = 3;
  cfg.seed = 42;
  const auto a = train_source(tr, te, small_arch(6, 2, 2), cfg);
  const auto b = train_source(tr, te, small_arch(6, 2, 2), cfg);
  EXPECT_TRUE(a.model == b.model);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  EXPECT_EQ(a.history.initial_eval_accuracy, b.history.initial_eval_accuracy);
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
    EXPECT_EQ(a.history.epochs[i].loss, b.history.epochs[i].loss);
    EXPECT_EQ(a.history.epochs[i].eval_accuracy, b.history.epochs[i].eval_accuracy);
  }
}

TEST(Train, SeparableReachesHighAccuracy) {
  const auto ds = windows_of(oracle::separable_series(1200, 8), 4, 2);
  const auto [tr, te] = split_chronological(ds, 0.75);
  TrainConfig cfg;
  cfg.lr = 0.005;
  cfg.max_epochs = 50;
  cfg.patience = 10;
  cfg.seed = 3;
  const auto r = train_source(tr, te, small_arch(4, 2, 2), cfg);
  EXPECT_GT(evaluate(r.model, te).accuracy, 0.95);
  // History invariants.
  const auto& h = r.history;
  ASSERT_FALSE(h.epochs.empty());
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    EXPECT_EQ(h.epochs[i].epoch, static_cast<int>(i) + 1);
    EXPECT_TRUE(std::isfinite(h.epochs[i].loss));
    EXPECT_GE(h.epochs[i].eval_accuracy, 0.0);
    EXPECT_LE(h.epochs[i].eval_accuracy, 1.0);
  }
  EXPECT_LE(h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].loss, h.epochs.front().loss);
  EXPECT_EQ(evaluate(r.model, te).accuracy, h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].eval_accuracy);
  for (const auto& e : h.epochs) EXPECT_LE(e.eval_accuracy, h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].eval_accuracy);
}

TEST(Train, PlateauStopsAfterPatience) {
  const auto ds = windows_of(oracle::separable_series(200, 8), 4, 2);
  TrainConfig cfg;
  cfg.lr = 1e-12;  // effectively frozen, so the loss never improves by min_delta
  cfg.shuffle = false;
  cfg.max_epochs = 50;
  cfg.patience = 3;
  const auto r = train_source(ds, ds, small_arch(4, 2, 2), cfg);
  EXPECT_EQ(r.history.epochs.size(), 4u);
}

TEST(Train, ShuffleOffIgnoresSeed) {
  const auto ds = windows_of(oracle::separable_series(200, 8), 4, 2);
  const auto init = nn::init_params(small_arch(4, 2, 2), 5);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.patience = 2;
  cfg.shuffle = false;
  cfg.seed = 1;
  const auto a = fit(init, ds, ds, nn::FreezeMask::all_trainable(), cfg);
  cfg.seed = 2;
  const auto b = fit(init, ds, ds, nn::FreezeMask::all_trainable(), cfg);
  EXPECT_TRUE(a.model == b.model);
}

TEST(Train, ConfigAndDataValidation) {
  const auto ds = windows_of(oracle::separable_series(200, 8), 4, 2);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.patience = 5;
  EXPECT_THROW(train_source(ds, ds, small_arch(4, 2, 2), cfg), Error);
  cfg.patience = 2;
  cfg.lr = 0.0;
  EXPECT_THROW(train_source(ds, ds, small_arch(4, 2, 2), cfg), Error);
  cfg.lr = 0.001;
  try {
    train_source(ds.subset({}), ds, small_arch(4, 2, 2), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyDataset);
  }
}

TEST(Train, DivergenceIsReported) {
  const auto ds = windows_of(oracle::separable_series(200, 8), 4, 2);
  auto init = nn::init_params(small_arch(4, 2, 2), 5);
  init.fc1_w(0, 0) = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.patience = 2;
  try {
    fit(init, ds, ds, nn::FreezeMask::all_trainable(), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NumericalDivergence);
  }
}

namespace {

History history_of(std::initializer_list<double> acc) {
  History h;
  int e = 1;
  for (double a : acc) h.epochs.push_back({e++, 1.0, 0.0, a, 0.0});
  return h;
}

}  // namespace

TEST(Saturation, Examples) {
  EXPECT_EQ(epochs_to_saturation(history_of({0.2, 0.5, 0.9, 0.91}), 0.95), 3);
  EXPECT_EQ(epochs_to_saturation(history_of({0.4})), 1);
  EXPECT_EQ(epochs_to_saturation(history_of({0.2, 0.7, 0.6, 0.7}), 1.0), 2);
  EXPECT_THROW(epochs_to_saturation(History{}), Error);
  EXPECT_THROW(epochs_to_saturation(history_of({0.4}), 0.0), Error);
  EXPECT_THROW(epochs_to_saturation(history_of({0.4}), 1.5), Error);
}

TEST(Saturation, MatchesDirectScan) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    History h;
    for (int e = 1; e <= 12; ++e) h.epochs.push_back({e, 1.0, 0.0, u(rng), 0.0});
    const double frac = 0.5 + 0.5 * u(rng);
    double best = 0.0;
    for (const auto& e : h.epochs) best = std::max(best, e.eval_accuracy);
    int expect = -1;
    for (const auto& e : h.epochs) {
      if (expect < 0 && e.eval_accuracy >= frac * best) expect = e.epoch;
    }
    EXPECT_EQ(epochs_to_saturation(h, frac), expect);
  }
}

TEST(History, CsvColumns) {
  const auto dir = oracle::scratch_dir("history");
  write_history_csv(dir / "h.csv", history_of({0.5, 0.75}));
  std::ifstream in(dir / "h.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "epoch,loss,train_acc,eval_acc,seconds");
  EXPECT_EQ(row.substr(0, 6), "1,1,0,");
}
