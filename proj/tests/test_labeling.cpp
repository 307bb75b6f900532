#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "wadapt/error.hpp"
#include "wadapt/labeling.hpp"

using namespace wadapt;

TEST(Bins, EdgesAndValidation) {
  const BinSpec b = make_bins(4);
  EXPECT_EQ(b.n_bins, 4);
  EXPECT_EQ(b.edges, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_THROW(make_bins(1), Error);
}

TEST(Bins, KnownAssignments) {
  const BinSpec b = make_bins(6);
  EXPECT_EQ(assign_bin(0.0, b), 0);
  EXPECT_EQ(assign_bin(1.0, b), 5);
  EXPECT_EQ(assign_bin(0.5, b), 3);
  EXPECT_EQ(assign_bin(0.1666, b), 0);
  EXPECT_EQ(assign_bin(0.17, b), 1);
  try {
    assign_bin(1.0001, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OutOfRange);
  }
  EXPECT_THROW(assign_bin(-0.1, b), Error);
  EXPECT_THROW(assign_bin(std::nan(""), b), Error);
}

TEST(Bins, PartitionProperties) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n : {2, 6, 10}) {
    const BinSpec b = make_bins(n);
    std::vector<double> values(10000);
    for (auto& v : values) v = u(rng);
    std::sort(values.begin(), values.end());
    int prev = 0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(n), 0);
    for (double v : values) {
      const int k = assign_bin(v, b);
      // Exactly one half-open interval contains v (the last is closed).
      int hits = 0;
      for (int i = 0; i < n; ++i) {
        const bool in = v >= b.edges[i] && (v < b.edges[i + 1] || (i == n - 1 && v <= 1.0));
        hits += in;
        if (in) EXPECT_EQ(i, k);
      }
      EXPECT_EQ(hits, 1);
      EXPECT_GE(k, prev);
      prev = k;
      ++counts[static_cast<std::size_t>(k)];
    }
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), values.size());
    EXPECT_EQ(assign_bin(1.0, b), n - 1);
  }
}

TEST(Histogram, SumsToSampleCount) {
  const auto s = oracle::toy_series(777, 2, 1);
  const auto h = histogram(s.samples, make_bins(6));
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::size_t{0}), 777u);
}

namespace {

AlignedSeries series_with_gap(std::size_t first, std::size_t gap, std::size_t second) {
  auto s = oracle::toy_series(first + second, 2, 9);
  for (std::size_t i = first; i < s.samples.size(); ++i) s.samples[i].time = s.samples[i].time + static_cast<std::int64_t>(gap);
  return s;
}

}  // namespace

TEST(Window, CountsRespectContiguity) {
  const std::vector<Index> feats = {0, 1};
  const auto ds = window(series_with_gap(30, 5, 10), 24, feats, make_bins(6));
  // Only the first run is long enough: 30 − 24 + 1 windows.
  EXPECT_EQ(ds.size(), 7u);
  const auto ds2 = window(series_with_gap(30, 5, 30), 24, feats, make_bins(6));
  EXPECT_EQ(ds2.size(), 14u);
  for (std::size_t i = 0; i < ds2.size(); ++i) EXPECT_EQ(ds2.windows[i].last_hour - ds2.windows[i].first_hour, 23);
}

TEST(Window, ContentsAndLabelAtLastHour) {
  const auto s = oracle::toy_series(40, 3, 2);
  const std::vector<Index> feats = {2, 0};
  const BinSpec bins = make_bins(6);
  const auto ds = window(s, 5, feats, bins);
  ASSERT_EQ(ds.size(), 36u);
  EXPECT_EQ(ds.n_features(), 2);
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{35}}) {
    const auto X = ds.X(i);
    for (Index t = 0; t < 5; ++t) {
      EXPECT_EQ(X(t, 0), s.samples[i + t].features[2]);
      EXPECT_EQ(X(t, 1), s.samples[i + t].features[0]);
    }
    EXPECT_EQ(ds.y(i), assign_bin(s.samples[i + 4].capacity_factor, bins));
  }
}

TEST(Window, NoWindows) {
  const auto s = oracle::toy_series(10, 2, 2);
  const std::vector<Index> feats = {0};
  try {
    window(s, 24, feats, make_bins(6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoWindows);
  }
}

TEST(Split, ChronologicalWithoutOverlap) {
  // 223 hours → 200 windows at W = 24.
  const auto s = oracle::toy_series(223, 2, 4);
  const std::vector<Index> feats = {0, 1};
  const auto ds = window(s, 24, feats, make_bins(6));
  ASSERT_EQ(ds.size(), 200u);
  const auto [train, test] = split_chronological(ds, 0.8);
  EXPECT_EQ(train.size(), 160u);
  EXPECT_EQ(test.size(), 17u);  // 40 minus the 23 windows overlapping the last train window
  for (const auto& w : test.windows) EXPECT_GT(w.first_hour, train.windows.back().last_hour);
  for (std::size_t i = 1; i < train.size(); ++i) EXPECT_LT(train.windows[i - 1].first_hour, train.windows[i].first_hour);
  EXPECT_EQ(train.rows.get(), ds.rows.get());
}

TEST(Split, HundredWindowsLeavesEmptyTestSide) {
  const auto s = oracle::toy_series(123, 2, 4);
  const std::vector<Index> feats = {0, 1};
  const auto ds = window(s, 24, feats, make_bins(6));
  ASSERT_EQ(ds.size(), 100u);
  try {
    split_chronological(ds, 0.8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptySide);
  }
}

TEST(Split, RejectsDegenerateFractions) {
  const auto s = oracle::toy_series(300, 2, 4);
  const std::vector<Index> feats = {0};
  const auto ds = window(s, 4, feats, make_bins(6));
  EXPECT_THROW(split_chronological(ds, 0.0), Error);
  EXPECT_THROW(split_chronological(ds, 1.0), Error);
}
