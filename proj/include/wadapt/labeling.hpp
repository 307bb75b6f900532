#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wadapt/ingest.hpp"
#include "wadapt/types.hpp"

namespace wadapt {

/// Equal-width classes over the capacity-factor range [0, 1].
struct BinSpec {
  int n_bins = 6;
  std::vector<double> edges;
};

BinSpec make_bins(int n);

/// min(floor(v·N), N−1). Throws OutOfRange for v outside [0, 1].
int assign_bin(double v, const BinSpec& spec);

std::vector<std::size_t> histogram(std::span<const AlignedSample> samples, const BinSpec& spec);

void write_histogram_csv(const std::filesystem::path& path, const BinSpec& spec,
                         const std::vector<std::size_t>& counts);

struct WindowRef {
  /// First row of the window in the dataset's row matrix.
  Index start = 0;
  int label = 0;
  HourStamp first_hour;
  HourStamp last_hour;
};

/// W-hour windows over the selected feature columns. Window rows are views
/// into one shared T×F matrix, so splitting does not copy feature data.
struct WindowedDataset {
  std::shared_ptr<const RowMatrixXd> rows;
  std::vector<WindowRef> windows;
  int window_len = 1;
  std::vector<Index> feature_indices;
  BinSpec bin_spec;
  std::string domain_tag;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  Index n_features() const { return static_cast<Index>(feature_indices.size()); }

  /// The W×F input of window i.
  auto X(std::size_t i) const { return rows->middleRows(windows[i].start, window_len); }
  int y(std::size_t i) const { return windows[i].label; }

  /// Same backing rows, restricted to the given windows.
  WindowedDataset subset(std::vector<WindowRef> selected) const;
};

/// Stride-1 windows inside each hour-contiguous run; a window's label is the
/// bin of the capacity factor at its final hour. Throws NoWindows when no run
/// reaches length W.
WindowedDataset window(const AlignedSeries& series, int window_len, std::span<const Index> feature_indices,
                       const BinSpec& spec);

/// Earliest floor(frac·n) windows train; test windows overlapping the last
/// training window in time are dropped. Throws EmptySide.
std::pair<WindowedDataset, WindowedDataset> split_chronological(const WindowedDataset& ds, double train_frac);

}  // namespace wadapt
