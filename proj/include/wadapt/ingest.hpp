#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wadapt/hour_stamp.hpp"
#include "wadapt/types.hpp"

namespace wadapt {

/// The 21 hourly weather parameters of the merged dataset, in table order.
const std::vector<std::string>& weather_feature_names();

/// Weather parameters stored as text; these are dropped during parsing.
const std::vector<std::string>& string_weather_features();

struct GenerationRow {
  HourStamp time;
  double capacity_factor = 0.0;
};

/// Hourly capacity factors for one country, strictly increasing in time.
struct GenerationSeries {
  std::string country_id;
  std::vector<GenerationRow> rows;
};

struct WeatherRow {
  HourStamp time;
  std::vector<std::optional<double>> values;
};

struct WeatherSeries {
  std::string location_id;
  std::vector<std::string> feature_names;
  std::vector<WeatherRow> rows;
  std::vector<std::string> notices;
};

struct AlignedSample {
  HourStamp time;
  VectorXd features;
  double capacity_factor = 0.0;
};

/// A named, gap-free-valued table of aligned samples.
struct AlignedSeries {
  std::string name;
  std::vector<std::string> feature_names;
  std::vector<AlignedSample> samples;

  Index n_features() const { return static_cast<Index>(feature_names.size()); }
  /// Throws UnknownColumn.
  Index feature_index(const std::string& feature) const;
};

struct ImputePolicy {
  /// A missing value is forward-filled when the last observed value of that
  /// feature is at most this many hours older; otherwise the row is dropped.
  int max_fill_hours = 3;
};

struct MergeResult {
  AlignedSeries series;
  std::size_t n_intersection = 0;
  std::size_t n_dropped = 0;
};

GenerationSeries parse_generation_csv(const std::filesystem::path& path, const std::string& country_id);
WeatherSeries parse_weather_csv(const std::filesystem::path& path);

MergeResult merge_hourly(const GenerationSeries& gen, const WeatherSeries& weather,
                         const ImputePolicy& impute = {});

struct PowerCurve {
  double cut_in = 3.0;
  double rated = 12.0;
};

struct SynthConfig {
  std::size_t n_hours = 5 * 8766;
  std::size_t n_features = 18;
  double shift = 0.0;
  double noise_sd = 0.05;
  PowerCurve power_curve;
  std::uint64_t seed = 0;
  HourStamp start{394464};  // 2015-01-01T00:00
  std::string name = "synth";
};

/// Ground-truth power curve: zero up to cut_in, one from rated upwards, and a
/// rescaled logistic in between.
double synth_power_curve(double wind_speed, const PowerCurve& curve);

/// Names of the synthetic features: the numeric weather parameters first,
/// then `aux<i>` for any beyond them.
std::vector<std::string> synth_feature_names(std::size_t n_features);

/// Indices of the six features that drive synthetic power output.
std::vector<Index> synth_causal_features(std::size_t n_features);

/// Index of the feature the power curve reads.
Index synth_wind_speed_feature(std::size_t n_features);

AlignedSeries synth_domain(const SynthConfig& cfg);

void write_generation_csv(const std::filesystem::path& path, const AlignedSeries& series,
                          const std::string& country_id);
void write_weather_csv(const std::filesystem::path& path, const AlignedSeries& series);
void write_aligned_csv(const std::filesystem::path& path, const AlignedSeries& series);
AlignedSeries read_aligned_csv(const std::filesystem::path& path, const std::string& name);

}  // namespace wadapt
