#include "wadapt/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "wadapt/audit.hpp"
#include "wadapt/error.hpp"

namespace wadapt {
namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(begin));
      break;
    }
    cells.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

/// Reads all lines; returns the header cells and data lines (blank lines skipped).
struct CsvText {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::string>> lines;
};

CsvText read_csv_text(const std::filesystem::path& path) {
  std::ifstream in = audit::open_input(path);
  CsvText text;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!have_header) {
      for (auto cell : split_csv(line)) text.header.emplace_back(trim(cell));
      have_header = true;
    } else {
      text.lines.emplace_back(lineno, std::move(line));
    }
  }
  if (!have_header) throw Error(Errc::EmptyFile, path.string() + " has no header row");
  return text;
}

template <typename Row>
void sort_and_check(std::vector<Row>& rows, const std::filesystem::path& path) {
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].time == rows[i - 1].time) {
      throw Error(Errc::MalformedTimestamp,
                  path.string() + ": duplicate timestamp " + format_hour_stamp(rows[i].time));
    }
  }
}

}  // namespace

const std::vector<std::string>& weather_feature_names() {
  static const std::vector<std::string> names = {
      "temp",       "feelslike", "dew",       "humidity",         "precip",     "precipprob",     "preciptype",
      "snow",       "snowdepth", "windgust",  "windspeed",        "winddir",    "sealevelpressure", "cloudcover",
      "visibility", "solarradiation", "solarenergy", "uvindex", "severerisk", "conditions",    "icon"};
  return names;
}

const std::vector<std::string>& string_weather_features() {
  static const std::vector<std::string> names = {"preciptype", "conditions", "icon"};
  return names;
}

Index AlignedSeries::feature_index(const std::string& feature) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), feature);
  if (it == feature_names.end()) {
    throw Error(Errc::UnknownColumn, "feature '" + feature + "' not present in '" + name + "'");
  }
  return static_cast<Index>(it - feature_names.begin());
}

GenerationSeries parse_generation_csv(const std::filesystem::path& path, const std::string& country_id) {
  const CsvText text = read_csv_text(path);
  const auto& header = text.header;
  if (header.empty() || header.front() != "timestamp") {
    throw Error(Errc::UnknownColumn, path.string() + ": first column must be 'timestamp'");
  }
  const auto col = std::find(header.begin(), header.end(), country_id);
  if (col == header.end() || col == header.begin()) {
    throw Error(Errc::UnknownColumn, path.string() + ": no column for country '" + country_id + "'");
  }
  const std::size_t ci = static_cast<std::size_t>(col - header.begin());

  GenerationSeries series;
  series.country_id = country_id;
  series.rows.reserve(text.lines.size());
  for (const auto& [lineno, line] : text.lines) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::MalformedValue, where(path, lineno) + ": expected " + std::to_string(header.size()) +
                                            " cells, found " + std::to_string(cells.size()));
    }
    GenerationRow row;
    try {
      row.time = parse_hour_stamp(trim(cells[0]));
    } catch (const Error& e) {
      throw Error(Errc::MalformedTimestamp, where(path, lineno) + ": " + e.detail());
    }
    if (!parse_double(trim(cells[ci]), row.capacity_factor)) {
      throw Error(Errc::MalformedValue, where(path, lineno) + ": '" + std::string(cells[ci]) + "' is not a number");
    }
    if (row.capacity_factor < 0.0 || row.capacity_factor > 1.0) {
      throw Error(Errc::OutOfRange, where(path, lineno) + ": capacity factor " + format_double(row.capacity_factor) +
                                        " outside [0,1]");
    }
    series.rows.push_back(row);
  }
  if (series.rows.empty()) throw Error(Errc::EmptyFile, path.string() + " has no data rows");
  sort_and_check(series.rows, path);
  return series;
}

WeatherSeries parse_weather_csv(const std::filesystem::path& path) {
  const CsvText text = read_csv_text(path);
  const auto& header = text.header;
  const auto ts = std::find(header.begin(), header.end(), "timestamp");
  if (ts == header.end()) throw Error(Errc::UnknownColumn, path.string() + ": missing 'timestamp' column");
  const std::size_t ts_col = static_cast<std::size_t>(ts - header.begin());

  WeatherSeries series;
  series.location_id = path.stem().string();
  const auto& strings = string_weather_features();
  std::vector<std::size_t> numeric_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == ts_col) continue;
    if (std::find(strings.begin(), strings.end(), header[c]) != strings.end()) {
      series.notices.push_back("dropped non-numeric feature '" + header[c] + "'");
      continue;
    }
    numeric_cols.push_back(c);
    series.feature_names.push_back(header[c]);
  }

  series.rows.reserve(text.lines.size());
  for (const auto& [lineno, line] : text.lines) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::MalformedValue, where(path, lineno) + ": expected " + std::to_string(header.size()) +
                                            " cells, found " + std::to_string(cells.size()));
    }
    WeatherRow row;
    try {
      row.time = parse_hour_stamp(trim(cells[ts_col]));
    } catch (const Error& e) {
      throw Error(Errc::MalformedTimestamp, where(path, lineno) + ": " + e.detail());
    }
    row.values.reserve(numeric_cols.size());
    for (std::size_t c : numeric_cols) {
      const auto cell = trim(cells[c]);
      if (cell.empty()) {
        row.values.emplace_back(std::nullopt);
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw Error(Errc::MalformedValue,
                    where(path, lineno) + ": column '" + header[c] + "' value '" + std::string(cell) + "' is not numeric");
      }
      row.values.emplace_back(v);
    }
    series.rows.push_back(std::move(row));
  }
  if (series.rows.empty()) throw Error(Errc::EmptyFile, path.string() + " has no data rows");
  sort_and_check(series.rows, path);
  return series;
}

MergeResult merge_hourly(const GenerationSeries& gen, const WeatherSeries& weather, const ImputePolicy& impute) {
  if (gen.rows.empty() || weather.rows.empty()) {
    throw Error(Errc::EmptyDataset, "merge_hourly needs non-empty generation and weather series");
  }
  const std::size_t nf = weather.feature_names.size();
  MergeResult result;
  result.series.name = gen.country_id;
  result.series.feature_names = weather.feature_names;

  std::vector<std::optional<HourStamp>> last_time(nf);
  std::vector<double> last_value(nf, 0.0);
  VectorXd resolved(static_cast<Index>(nf));

  std::size_t g = 0;
  for (const WeatherRow& row : weather.rows) {
    bool complete = true;
    for (std::size_t j = 0; j < nf; ++j) {
      if (row.values[j]) {
        last_time[j] = row.time;
        last_value[j] = *row.values[j];
        resolved[static_cast<Index>(j)] = *row.values[j];
      } else if (last_time[j] && row.time - *last_time[j] <= impute.max_fill_hours) {
        resolved[static_cast<Index>(j)] = last_value[j];
      } else {
        complete = false;
      }
    }
    while (g < gen.rows.size() && gen.rows[g].time < row.time) ++g;
    if (g == gen.rows.size() || gen.rows[g].time != row.time) continue;
    ++result.n_intersection;
    if (!complete) {
      ++result.n_dropped;
      continue;
    }
    result.series.samples.push_back({row.time, resolved, gen.rows[g].capacity_factor});
  }
  if (result.n_intersection == 0) {
    throw Error(Errc::EmptyIntersection, "generation '" + gen.country_id + "' and weather '" + weather.location_id +
                                             "' share no hourly timestamps");
  }
  return result;
}

double synth_power_curve(double wind_speed, const PowerCurve& curve) {
  if (wind_speed <= curve.cut_in) return 0.0;
  if (wind_speed >= curve.rated) return 1.0;
  const double mid = 0.5 * (curve.cut_in + curve.rated);
  const double steep = 10.0 / (curve.rated - curve.cut_in);
  const auto logistic = [&](double u) { return 1.0 / (1.0 + std::exp(-steep * (u - mid))); };
  const double lo = logistic(curve.cut_in);
  const double hi = logistic(curve.rated);
  return std::clamp((logistic(wind_speed) - lo) / (hi - lo), 0.0, 1.0);
}

namespace {

std::vector<std::string> numeric_weather_features() {
  std::vector<std::string> out;
  const auto& strings = string_weather_features();
  for (const auto& n : weather_feature_names()) {
    if (std::find(strings.begin(), strings.end(), n) == strings.end()) out.push_back(n);
  }
  return out;
}

const std::vector<std::string>& causal_names() {
  static const std::vector<std::string> names = {"temp", "dew", "snow", "snowdepth", "windspeed", "cloudcover"};
  return names;
}

struct FeatureScale {
  double mean;
  double sd;
};

// Location and spread of each synthetic feature in scaled units.
FeatureScale base_scale(const std::string& name) {
  static const std::map<std::string, FeatureScale> table = {
      {"temp", {10.0, 6.0}},       {"feelslike", {8.0, 7.0}},        {"dew", {5.0, 5.0}},
      {"humidity", {7.5, 1.5}},    {"precip", {0.5, 0.5}},           {"precipprob", {2.0, 1.5}},
      {"snow", {0.3, 0.4}},        {"snowdepth", {1.5, 1.2}},        {"windgust", {10.0, 4.0}},
      {"windspeed", {7.0, 3.5}},   {"winddir", {2.0, 1.0}},          {"sealevelpressure", {10.1, 0.8}},
      {"cloudcover", {6.0, 3.0}},  {"visibility", {2.0, 0.8}},       {"solarradiation", {1.2, 1.5}},
      {"solarenergy", {0.4, 0.5}}, {"uvindex", {1.5, 2.0}},          {"severerisk", {1.0, 1.0}}};
  const auto it = table.find(name);
  return it == table.end() ? FeatureScale{0.0, 1.0} : it->second;
}

}  // namespace

std::vector<std::string> synth_feature_names(std::size_t n_features) {
  const auto numeric = numeric_weather_features();
  std::vector<std::string> names;
  if (n_features >= numeric.size()) {
    names = numeric;
  } else {
    names = causal_names();
    for (const auto& n : numeric) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }
  names.resize(std::min(names.size(), n_features));
  for (std::size_t i = names.size(); i < n_features; ++i) names.push_back("aux" + std::to_string(i));
  return names;
}

std::vector<Index> synth_causal_features(std::size_t n_features) {
  const auto names = synth_feature_names(n_features);
  std::vector<Index> idx;
  for (const auto& c : causal_names()) {
    idx.push_back(static_cast<Index>(std::find(names.begin(), names.end(), c) - names.begin()));
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

Index synth_wind_speed_feature(std::size_t n_features) {
  const auto names = synth_feature_names(n_features);
  return static_cast<Index>(std::find(names.begin(), names.end(), "windspeed") - names.begin());
}

AlignedSeries synth_domain(const SynthConfig& cfg) {
  if (cfg.n_hours == 0) throw Error(Errc::InvalidArgument, "n_hours must be positive");
  if (cfg.n_features < 6) throw Error(Errc::InvalidArgument, "n_features must be at least 6");
  if (!(cfg.power_curve.cut_in < cfg.power_curve.rated)) {
    throw Error(Errc::InvalidArgument, "power curve needs cut_in < rated");
  }
  if (cfg.shift < 0.0 || cfg.noise_sd < 0.0) throw Error(Errc::InvalidArgument, "shift and noise_sd must be >= 0");

  constexpr double kPersistence = 0.9;  // hourly AR(1) coefficient of the latent weather
  constexpr double kCoupling = 0.45;
  constexpr double kModulation = 0.5;
  constexpr double kMeanShift = 0.5;
  constexpr double kScaleShift = 0.15;

  const std::size_t nf = cfg.n_features;
  AlignedSeries out;
  out.name = cfg.name;
  out.feature_names = synth_feature_names(nf);
  const auto causal = synth_causal_features(nf);
  const Index wind = synth_wind_speed_feature(nf);

  VectorXd mean(static_cast<Index>(nf)), scale(static_cast<Index>(nf));
  for (std::size_t j = 0; j < nf; ++j) {
    const FeatureScale base = base_scale(out.feature_names[j]);
    const double direction = (j % 2 == 0) ? 1.0 : -1.0;
    const double stretch = (j % 3 == 0) ? 1.0 : -1.0;
    mean[static_cast<Index>(j)] = base.mean + kMeanShift * cfg.shift * base.sd * direction;
    scale[static_cast<Index>(j)] = base.sd * (1.0 + kScaleShift * cfg.shift * stretch);
  }
  const FeatureScale wind_base = base_scale("windspeed");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd latent(static_cast<Index>(nf));
  for (Index j = 0; j < latent.size(); ++j) latent[j] = normal(rng);
  const double innovation = std::sqrt(1.0 - kPersistence * kPersistence);

  out.samples.reserve(cfg.n_hours);
  for (std::size_t t = 0; t < cfg.n_hours; ++t) {
    if (t > 0) {
      for (Index j = 0; j < latent.size(); ++j) latent[j] = kPersistence * latent[j] + innovation * normal(rng);
    }
    double coupling = 0.0;
    for (Index c : causal) {
      if (c != wind) coupling += kCoupling * latent[c];
    }
    const double wind_speed = wind_base.mean + wind_base.sd * latent[wind];
    double effective = wind_speed;
    if (wind_speed > cfg.power_curve.cut_in) {
      effective = cfg.power_curve.cut_in +
                  (wind_speed - cfg.power_curve.cut_in) * std::exp(kModulation * std::tanh(coupling));
    }
    const double noise = normal(rng);
    AlignedSample s;
    s.time = cfg.start + static_cast<std::int64_t>(t);
    s.features = mean.array() + scale.array() * latent.array();
    s.capacity_factor = std::clamp(synth_power_curve(effective, cfg.power_curve) + cfg.noise_sd * noise, 0.0, 1.0);
    out.samples.push_back(std::move(s));
  }
  return out;
}

void write_generation_csv(const std::filesystem::path& path, const AlignedSeries& series,
                          const std::string& country_id) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out << "timestamp," << country_id << '\n';
  for (const auto& s : series.samples) out << format_hour_stamp(s.time) << ',' << format_double(s.capacity_factor) << '\n';
}

void write_weather_csv(const std::filesystem::path& path, const AlignedSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out << "timestamp";
  for (const auto& n : series.feature_names) out << ',' << n;
  out << '\n';
  for (const auto& s : series.samples) {
    out << format_hour_stamp(s.time);
    for (Index j = 0; j < s.features.size(); ++j) out << ',' << format_double(s.features[j]);
    out << '\n';
  }
}

void write_aligned_csv(const std::filesystem::path& path, const AlignedSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out << "timestamp";
  for (const auto& n : series.feature_names) out << ',' << n;
  out << ",capacity_factor\n";
  for (const auto& s : series.samples) {
    out << format_hour_stamp(s.time);
    for (Index j = 0; j < s.features.size(); ++j) out << ',' << format_double(s.features[j]);
    out << ',' << format_double(s.capacity_factor) << '\n';
  }
}

AlignedSeries read_aligned_csv(const std::filesystem::path& path, const std::string& name) {
  const CsvText text = read_csv_text(path);
  const auto& header = text.header;
  if (header.size() < 3 || header.front() != "timestamp" || header.back() != "capacity_factor") {
    throw Error(Errc::UnknownColumn, path.string() + ": expected header timestamp,<features...>,capacity_factor");
  }
  AlignedSeries series;
  series.name = name;
  series.feature_names.assign(header.begin() + 1, header.end() - 1);
  const Index nf = series.n_features();
  series.samples.reserve(text.lines.size());
  for (const auto& [lineno, line] : text.lines) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::MalformedValue, where(path, lineno) + ": wrong number of cells");
    }
    AlignedSample s;
    try {
      s.time = parse_hour_stamp(trim(cells[0]));
    } catch (const Error& e) {
      throw Error(Errc::MalformedTimestamp, where(path, lineno) + ": " + e.detail());
    }
    s.features.resize(nf);
    for (Index j = 0; j < nf; ++j) {
      if (!parse_double(trim(cells[static_cast<std::size_t>(j) + 1]), s.features[j])) {
        throw Error(Errc::MalformedValue, where(path, lineno) + ": feature '" +
                                              series.feature_names[static_cast<std::size_t>(j)] + "' is not numeric");
      }
    }
    if (!parse_double(trim(cells.back()), s.capacity_factor) || s.capacity_factor < 0.0 || s.capacity_factor > 1.0) {
      throw Error(Errc::OutOfRange, where(path, lineno) + ": capacity factor missing or outside [0,1]");
    }
    series.samples.push_back(std::move(s));
  }
  if (series.samples.empty()) throw Error(Errc::EmptyFile, path.string() + " has no data rows");
  sort_and_check(series.samples, path);
  return series;
}

}  // namespace wadapt
