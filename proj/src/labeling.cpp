#include "wadapt/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wadapt/error.hpp"

namespace wadapt {

BinSpec make_bins(int n) {
  if (n < 2) throw Error(Errc::InvalidArgument, "need at least 2 bins, got " + std::to_string(n));
  BinSpec spec;
  spec.n_bins = n;
  spec.edges.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) spec.edges[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
  return spec;
}

int assign_bin(double v, const BinSpec& spec) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::OutOfRange, "capacity factor " + std::to_string(v) + " outside [0,1]");
  const int label = static_cast<int>(std::floor(v * spec.n_bins));
  return std::min(label, spec.n_bins - 1);
}

std::vector<std::size_t> histogram(std::span<const AlignedSample> samples, const BinSpec& spec) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(spec.n_bins), 0);
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(assign_bin(s.capacity_factor, spec))];
  return counts;
}

void write_histogram_csv(const std::filesystem::path& path, const BinSpec& spec,
                         const std::vector<std::size_t>& counts) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out.precision(17);
  out << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out << spec.edges[i] << ',' << spec.edges[i + 1] << ',' << counts[i] << '\n';
  }
}

WindowedDataset WindowedDataset::subset(std::vector<WindowRef> selected) const {
  WindowedDataset out;
  out.rows = rows;
  out.windows = std::move(selected);
  out.window_len = window_len;
  out.feature_indices = feature_indices;
  out.bin_spec = bin_spec;
  out.domain_tag = domain_tag;
  return out;
}

WindowedDataset window(const AlignedSeries& series, int window_len, std::span<const Index> feature_indices,
                       const BinSpec& spec) {
  if (window_len < 1) throw Error(Errc::InvalidArgument, "window length must be positive");
  if (feature_indices.empty()) throw Error(Errc::InvalidArgument, "no features selected");
  for (Index f : feature_indices) {
    if (f < 0 || f >= series.n_features()) throw Error(Errc::OutOfRange, "feature index out of range");
  }
  const auto& samples = series.samples;
  auto rows = std::make_shared<RowMatrixXd>(static_cast<Index>(samples.size()),
                                            static_cast<Index>(feature_indices.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < feature_indices.size(); ++j) {
      (*rows)(static_cast<Index>(i), static_cast<Index>(j)) = samples[i].features[feature_indices[j]];
    }
  }

  WindowedDataset ds;
  ds.window_len = window_len;
  ds.feature_indices.assign(feature_indices.begin(), feature_indices.end());
  ds.bin_spec = spec;
  ds.domain_tag = series.name;

  std::size_t run_start = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && samples[i].time - samples[i - 1].time != 1) run_start = i;
    if (i + 1 - run_start >= static_cast<std::size_t>(window_len)) {
      const std::size_t first = i + 1 - static_cast<std::size_t>(window_len);
      ds.windows.push_back({static_cast<Index>(first), assign_bin(samples[i].capacity_factor, spec),
                            samples[first].time, samples[i].time});
    }
  }
  if (ds.windows.empty()) {
    throw Error(Errc::NoWindows, "'" + series.name + "' has no contiguous run of " + std::to_string(window_len) +
                                     " hours");
  }
  ds.rows = std::move(rows);
  return ds;
}

std::pair<WindowedDataset, WindowedDataset> split_chronological(const WindowedDataset& ds, double train_frac) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error(Errc::InvalidArgument, "train_frac must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(ds.size())));
  if (n_train == 0) throw Error(Errc::EmptySide, "split leaves the training side empty");

  std::vector<WindowRef> train(ds.windows.begin(), ds.windows.begin() + static_cast<std::ptrdiff_t>(n_train));
  const HourStamp boundary = train.back().last_hour;
  std::vector<WindowRef> test;
  for (std::size_t i = n_train; i < ds.size(); ++i) {
    if (ds.windows[i].first_hour > boundary) test.push_back(ds.windows[i]);
  }
  if (test.empty()) {
    throw Error(Errc::EmptySide, "split leaves the test side empty after dropping windows that overlap training");
  }
  return {ds.subset(std::move(train)), ds.subset(std::move(test))};
}

}  // namespace wadapt
