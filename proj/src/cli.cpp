#include "wadapt/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>

#include "wadapt/adapt.hpp"
#include "wadapt/audit.hpp"
#include "wadapt/error.hpp"
#include "wadapt/experiments.hpp"
#include "wadapt/features.hpp"
#include "wadapt/ingest.hpp"
#include "wadapt/labeling.hpp"
#include "wadapt/nn/checkpoint.hpp"
#include "wadapt/train.hpp"

namespace wadapt {
namespace {

namespace fs = std::filesystem;
// Keeps domains in the order the config lists them.
using json = nlohmann::ordered_json;

struct DomainSource {
  std::string name;
  std::optional<SynthConfig> synth;
  fs::path generation;
  fs::path weather;
  std::string country;
};

struct RunConfig {
  std::vector<DomainSource> domains;
  int bins = 6;
  int window = 24;
  int k = 6;
  nn::Architecture arch;
  TrainConfig train;
  TrainConfig adapt;
  double train_frac = 0.8;
  ForestConfig forest;
  ImputePolicy impute;
  std::uint64_t seed = 0;
  fs::path out = "out";
  json raw = json::object();
};

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int bins = 0;
  int window = 0;
  int k = 0;
  int epochs = 0;
  std::string mode = "partial";
  std::string domain;
  std::string source;
  std::string target;
  std::string checkpoint;
  std::vector<std::string> synth;
  std::string audit_log;
  bool update_bn_stats = false;
};

void apply_synth_keys(SynthConfig& s, const json& j) {
  s.n_hours = j.value("n_hours", s.n_hours);
  s.n_features = j.value("n_features", s.n_features);
  s.shift = j.value("shift", s.shift);
  s.noise_sd = j.value("noise_sd", s.noise_sd);
  s.power_curve.cut_in = j.value("cut_in", s.power_curve.cut_in);
  s.power_curve.rated = j.value("rated", s.power_curve.rated);
  s.seed = j.value("seed", s.seed);
}

void apply_train_keys(TrainConfig& t, const json& j) {
  t.lr = j.value("lr", t.lr);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.patience = j.value("patience", t.patience);
  t.min_delta = j.value("min_delta", t.min_delta);
  t.shuffle = j.value("shuffle", t.shuffle);
}

/// `key=value` tokens of --synth, as a JSON object of numbers.
json parse_synth_tokens(const std::vector<std::string>& tokens) {
  static const std::set<std::string> keys = {"n_hours", "n_features", "shift", "noise_sd", "cut_in", "rated", "seed"};
  json j = json::object();
  for (const auto& tok : tokens) {
    const auto eq = tok.find('=');
    const std::string key = tok.substr(0, eq);
    if (eq == std::string::npos || !keys.contains(key)) {
      throw Error(Errc::InvalidArgument, "--synth expects key=value with key in n_hours, n_features, shift, noise_sd, "
                                         "cut_in, rated, seed; got '" + tok + "'");
    }
    const std::string value = tok.substr(eq + 1);
    try {
      if (key == "n_hours" || key == "n_features" || key == "seed") {
        j[key] = std::stoull(value);
      } else {
        j[key] = std::stod(value);
      }
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "--synth value for '" + key + "' is not a number: '" + value + "'");
    }
  }
  return j;
}

RunConfig load_config(const Flags& f) {
  RunConfig c;
  fs::path base = ".";
  if (!f.config.empty()) {
    auto in = audit::open_input(f.config);
    try {
      c.raw = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(Errc::InvalidArgument, "config '" + f.config + "' is not valid JSON: " + e.what());
    }
    base = fs::path(f.config).parent_path();
  }
  const json& j = c.raw;
  c.bins = j.value("bins", c.bins);
  c.window = j.value("window", c.window);
  c.k = j.value("k", c.k);
  c.train_frac = j.value("train_frac", c.train_frac);
  c.seed = j.value("seed", c.seed);
  c.impute.max_fill_hours = j.value("impute_max_gap", c.impute.max_fill_hours);
  if (j.contains("out")) c.out = base / j["out"].get<std::string>();
  if (j.contains("arch")) {
    const json& a = j["arch"];
    c.arch.kernel = a.value("kernel", c.arch.kernel);
    c.arch.conv1 = a.value("conv1", c.arch.conv1);
    c.arch.conv2 = a.value("conv2", c.arch.conv2);
    c.arch.hidden = a.value("hidden", c.arch.hidden);
  }
  if (j.contains("train")) apply_train_keys(c.train, j["train"]);
  c.adapt = c.train;
  if (j.contains("adapt")) apply_train_keys(c.adapt, j["adapt"]);
  if (j.contains("forest")) {
    const json& r = j["forest"];
    c.forest.n_trees = r.value("n_trees", c.forest.n_trees);
    c.forest.max_depth = r.value("max_depth", c.forest.max_depth);
    c.forest.min_samples_leaf = r.value("min_samples_leaf", c.forest.min_samples_leaf);
    c.forest.features_per_split = r.value("features_per_split", c.forest.features_per_split);
  }
  if (j.contains("domains")) {
    for (const auto& [name, d] : j["domains"].items()) {
      DomainSource src;
      src.name = name;
      if (d.contains("synth")) {
        SynthConfig s;
        s.name = name;
        apply_synth_keys(s, d["synth"]);
        src.synth = s;
      } else {
        if (!d.contains("generation") || !d.contains("weather")) {
          throw Error(Errc::InvalidArgument, "domain '" + name + "' needs either synth or generation+weather");
        }
        src.generation = base / d["generation"].get<std::string>();
        src.weather = base / d["weather"].get<std::string>();
        src.country = d.value("country", name);
      }
      c.domains.push_back(std::move(src));
    }
  }

  // Flags win over the file.
  if (!f.out.empty()) c.out = f.out;
  if (f.bins) c.bins = f.bins;
  if (f.window) c.window = f.window;
  if (f.k) c.k = f.k;
  if (f.epochs) {
    c.train.max_epochs = c.adapt.max_epochs = f.epochs;
    c.train.patience = std::min(c.train.patience, std::max(1, f.epochs - 1));
    c.adapt.patience = std::min(c.adapt.patience, std::max(1, f.epochs - 1));
  }
  if (f.seed) c.seed = f.seed;
  if (!f.synth.empty()) {
    const std::string name = f.domain.empty() ? "synth" : f.domain;
    SynthConfig s;
    s.name = name;
    apply_synth_keys(s, parse_synth_tokens(f.synth));
    auto it = std::find_if(c.domains.begin(), c.domains.end(), [&](const auto& d) { return d.name == name; });
    if (it == c.domains.end()) it = c.domains.insert(c.domains.end(), DomainSource{name, {}, {}, {}, {}});
    it->synth = s;
  }
  if (c.bins < 2) throw Error(Errc::InvalidArgument, "--bins must be at least 2");
  if (c.window < 1) throw Error(Errc::InvalidArgument, "--window must be positive");
  if (c.k < 1) throw Error(Errc::InvalidArgument, "--k must be positive");
  return c;
}

json config_json(const RunConfig& c) {
  const auto train_json = [](const TrainConfig& t) {
    return json{{"lr", t.lr}, {"batch_size", t.batch_size}, {"max_epochs", t.max_epochs},
                {"patience", t.patience}, {"min_delta", t.min_delta}, {"shuffle", t.shuffle}};
  };
  json domains = json::object();
  for (const auto& d : c.domains) {
    if (d.synth) {
      const auto& s = *d.synth;
      domains[d.name] = {{"synth",
                          {{"n_hours", s.n_hours}, {"n_features", s.n_features}, {"shift", s.shift},
                           {"noise_sd", s.noise_sd}, {"cut_in", s.power_curve.cut_in},
                           {"rated", s.power_curve.rated}, {"seed", s.seed}}}};
    } else {
      domains[d.name] = {{"generation", d.generation.filename().string()},
                         {"weather", d.weather.filename().string()},
                         {"country", d.country}};
    }
  }
  return json{{"bins", c.bins},
              {"window", c.window},
              {"k", c.k},
              {"seed", c.seed},
              {"train_frac", c.train_frac},
              {"impute_max_gap", c.impute.max_fill_hours},
              {"arch", {{"kernel", c.arch.kernel}, {"conv1", c.arch.conv1}, {"conv2", c.arch.conv2},
                        {"hidden", c.arch.hidden}}},
              {"train", train_json(c.train)},
              {"adapt", train_json(c.adapt)},
              {"forest", {{"n_trees", c.forest.n_trees}, {"max_depth", c.forest.max_depth},
                          {"min_samples_leaf", c.forest.min_samples_leaf},
                          {"features_per_split", c.forest.features_per_split}}},
              {"domains", domains}};
}

class Session {
 public:
  Session(RunConfig cfg, const Flags& flags, std::ostream& out) : c_(std::move(cfg)), f_(flags), out_(out) {
    fs::create_directories(c_.out);
  }

  void prepare() {
    for (const auto& d : selected_domains()) {
      const MergeResult m = build(d);
      write_aligned_csv(path(d.name + ".aligned.csv"), m.series);
      json summary{{"domain", d.name},
                   {"rows", m.series.samples.size()},
                   {"intersection", m.n_intersection},
                   {"dropped", m.n_dropped},
                   {"features", m.series.feature_names}};
      write_json(path(d.name + ".summary.json"), summary);
      out_ << d.name << ": " << m.series.samples.size() << " aligned rows (" << m.n_dropped << " dropped)\n";
    }
  }

  void synth() {
    for (const auto& d : selected_domains()) {
      if (!d.synth) throw Error(Errc::InvalidArgument, "domain '" + d.name + "' is not synthetic");
      const AlignedSeries s = synth_domain(*d.synth);
      write_generation_csv(path(d.name + ".generation.csv"), s, d.name);
      write_weather_csv(path(d.name + ".weather.csv"), s);
      out_ << d.name << ": wrote " << s.samples.size() << " hours\n";
    }
  }

  void features() {
    const std::string name = single_domain(f_.domain);
    const AlignedSeries s = load(name);
    if (c_.k > s.n_features()) {
      throw Error(Errc::InvalidArgument, "--k " + std::to_string(c_.k) + " exceeds the " +
                                             std::to_string(s.n_features()) + " features of '" + name + "'");
    }
    const Forest forest = fit_source_forest(s);
    write_importances_csv(path(name + ".importances.csv"), s.feature_names, forest.importances);
    const auto top = select_top_k(forest, c_.k);
    std::ofstream sel(path(name + ".selected.txt"));
    for (Index i : top) sel << s.feature_names[static_cast<std::size_t>(i)] << '\n';
    std::vector<Index> all(static_cast<std::size_t>(s.n_features()));
    std::iota(all.begin(), all.end(), Index{0});
    write_correlation_csv(path(name + ".correlation.csv"), s.feature_names, correlation_matrix(s, all));
    const BinSpec bins = make_bins(c_.bins);
    write_histogram_csv(path(name + ".histogram.csv"), bins, histogram(s.samples, bins));
    for (Index i : top) out_ << s.feature_names[static_cast<std::size_t>(i)] << '\n';
  }

  void train() {
    const std::string name = single_domain(f_.domain);
    const AlignedSeries s = load(name);
    const auto names = selected_names(name, s);
    const DomainSplit split = split_for(name, s, names);
    ExperimentConfig ec = experiment_config();
    TrainConfig tc = c_.train;
    tc.seed = derive_seed(c_.seed, 0);
    const TrainResult r = train_source(split.train, split.test, resolve_arch(ec, split), tc);
    const fs::path ckpt = path(name + ".ckpt");
    nn::save_checkpoint(r.model, ckpt);
    write_feature_sidecar(ckpt, names);
    write_history_csv(path(name + ".history.csv"), r.history);
    out_ << "trained on " << name << ": eval accuracy " << format_number(best_accuracy(r.history)) << " after "
         << r.history.epochs.size() << " epochs\n";
  }

  void adapt_cmd() {
    const fs::path ckpt = require_checkpoint();
    const std::string name = single_domain(f_.domain.empty() ? f_.target : f_.domain);
    const nn::ModelParams pre = nn::load_checkpoint(ckpt);
    const auto names = read_feature_sidecar(ckpt);
    const AlignedSeries s = load(name);
    const DomainSplit split = split_for(name, s, names);
    const AdaptMode mode = parse_adapt_mode(f_.mode);
    TrainConfig tc = c_.adapt;
    tc.seed = derive_seed(c_.seed, 1);
    check_compatible(pre.arch, split.train);
    nn::FreezeMask mask = make_freeze_mask(mode, pre.arch);
    if (f_.update_bn_stats) mask.bn_stats_frozen = false;
    const TrainResult r = fit(pre, split.train, split.test, mask, tc);
    const std::string stem = ckpt.stem().string() + "_to_" + name + "." + std::string(to_string(mode));
    const fs::path out_ckpt = path(stem + ".ckpt");
    nn::save_checkpoint(r.model, out_ckpt);
    write_feature_sidecar(out_ckpt, names);
    write_history_csv(path(stem + ".history.csv"), r.history);
    out_ << "adapted (" << to_string(mode) << ") to " << name << ": eval accuracy "
         << format_number(r.history.initial_eval_accuracy) << " -> " << format_number(best_accuracy(r.history))
         << '\n';
  }

  void eval() {
    const fs::path ckpt = require_checkpoint();
    const std::string name = single_domain(f_.domain);
    const nn::ModelParams model = nn::load_checkpoint(ckpt);
    const AlignedSeries s = load(name);
    const DomainSplit split = split_for(name, s, read_feature_sidecar(ckpt));
    const EvalResult r = evaluate(model, split.test);
    const std::string stem = ckpt.stem().string() + "." + name;
    write_confusion_csv(path(stem + ".confusion.csv"), r.confusion);
    write_json(path(stem + ".eval.json"),
               json{{"checkpoint", ckpt.filename().string()}, {"domain", name}, {"accuracy", r.accuracy},
                    {"windows", split.test.size()}});
    out_ << "accuracy " << format_number(r.accuracy) << " on " << split.test.size() << " windows\n";
  }

  void matrix() {
    if (c_.domains.size() < 2) throw Error(Errc::InvalidArgument, "matrix needs at least two domains in the config");
    std::vector<DomainSpec> specs;
    for (const auto& d : c_.domains) specs.push_back({d.name, load(d.name)});
    ExperimentConfig ec = experiment_config();
    ec.feature_indices = shared_features(specs);
    ec.work_dir = path("matrix");
    const MatrixResult m = run_matrix(specs, ec);
    write_matrix_csv(path("matrix.csv"), m);
    json ckpts = json::object();
    for (const auto& cell : m.cells) ckpts[cell.source] = hex64(cell.checkpoint_hash);
    write_manifest("matrix", ckpts);
    for (const auto& cell : m.cells) {
      out_ << cell.source << " -> " << cell.target << ": " << format_number(cell.acc_without) << " -> "
           << format_number(cell.acc_with) << " (" << format_number(cell.diff) << ")\n";
    }
  }

  void ablate(const std::string& which) {
    if (which == "network") {
      const auto [src, tgt] = pair_names();
      std::vector<DomainSpec> specs{{src, load(src)}, {tgt, load(tgt)}};
      ExperimentConfig ec = experiment_config();
      ec.feature_indices = shared_features(specs);
      const PartialFullResult r = run_partial_vs_full(specs[0], specs[1], ec);
      write_partial_full_csv(path("ablate_network.csv"), src, tgt, r);
      write_manifest("ablate_network", json::object());
      out_ << "partial " << format_number(r.acc_partial) << ", full " << format_number(r.acc_full) << '\n';
    } else if (which == "features") {
      // Selection belongs to the source, so that is the default domain.
      std::string name = f_.domain.empty() ? f_.source : f_.domain;
      if (name.empty()) name = single_domain(c_.domains.empty() ? "" : c_.domains.front().name);
      const DomainSpec spec{name, load(name)};
      ExperimentConfig ec = experiment_config();
      const FeatureAblationResult r = run_feature_ablation(spec, c_.k, ec);
      write_feature_ablation_csv(path("ablate_features.csv"), name, r);
      write_manifest("ablate_features", json::object());
      out_ << "all " << format_number(r.acc_all) << ", selected " << format_number(r.acc_selected) << '\n';
    } else {
      throw Error(Errc::InvalidArgument, "ablate expects 'network' or 'features', got '" + which + "'");
    }
  }

  void curves() {
    const auto [src, tgt] = pair_names();
    std::vector<DomainSpec> specs{{src, load(src)}, {tgt, load(tgt)}};
    ExperimentConfig ec = experiment_config();
    ec.feature_indices = shared_features(specs);
    const ConvergenceResult r = run_convergence_comparison(specs[0], specs[1], ec);
    write_curves_csv(path("curves.csv"), r);
    write_manifest("curves", json::object(),
                   json{{"saturation_scratch", r.saturation_scratch}, {"saturation_adapted", r.saturation_adapted}});
    out_ << "epochs to saturation: scratch " << r.saturation_scratch << ", adapted " << r.saturation_adapted << '\n';
  }

 private:
  fs::path path(const std::string& file) const { return c_.out / file; }

  const DomainSource& domain_source(const std::string& name) const {
    for (const auto& d : c_.domains) {
      if (d.name == name) return d;
    }
    throw Error(Errc::InvalidArgument, "unknown domain '" + name + "'");
  }

  std::vector<DomainSource> selected_domains() const {
    if (!f_.domain.empty()) return {domain_source(f_.domain)};
    if (c_.domains.empty()) throw Error(Errc::InvalidArgument, "no domains configured; pass --config or --synth");
    return c_.domains;
  }

  std::string single_domain(const std::string& requested) const {
    if (!requested.empty()) return requested;
    if (c_.domains.size() == 1) return c_.domains.front().name;
    throw Error(Errc::InvalidArgument, "choose a domain with --domain");
  }

  std::pair<std::string, std::string> pair_names() const {
    std::string src = f_.source, tgt = f_.target;
    if (src.empty() && !c_.domains.empty()) src = c_.domains[0].name;
    if (tgt.empty() && c_.domains.size() > 1) tgt = c_.domains[1].name;
    if (src.empty() || tgt.empty()) throw Error(Errc::InvalidArgument, "choose --source and --target");
    if (src == tgt) throw Error(Errc::InvalidArgument, "source and target must differ");
    return {src, tgt};
  }

  MergeResult build(const DomainSource& d) const {
    if (d.synth) {
      MergeResult m;
      m.series = synth_domain(*d.synth);
      m.n_intersection = m.series.samples.size();
      return m;
    }
    MergeResult m = merge_hourly(parse_generation_csv(d.generation, d.country), parse_weather_csv(d.weather),
                                 c_.impute);
    m.series.name = d.name;
    return m;
  }

  /// Prepared samples when present, otherwise built from the domain's sources.
  AlignedSeries load(const std::string& name) const {
    const fs::path prepared = path(name + ".aligned.csv");
    if (fs::exists(prepared)) return read_aligned_csv(prepared, name);
    return build(domain_source(name)).series;
  }

  Forest fit_source_forest(const AlignedSeries& s) const {
    const BinSpec bins = make_bins(c_.bins);
    const RowMatrixXd X = feature_matrix(s);
    std::vector<int> y;
    y.reserve(s.samples.size());
    for (const auto& smp : s.samples) y.push_back(assign_bin(smp.capacity_factor, bins));
    ForestConfig fc = c_.forest;
    fc.seed = derive_seed(c_.seed, 2);
    return fit_forest(X, y, c_.bins, fc);
  }

  std::vector<std::string> selected_names(const std::string& name, const AlignedSeries& s) const {
    const fs::path sel = path(name + ".selected.txt");
    if (!fs::exists(sel)) return s.feature_names;
    return read_lines(sel);
  }

  /// The first domain's selected features, by name, when it has been through `features`.
  std::vector<Index> shared_features(const std::vector<DomainSpec>& specs) const {
    const auto names = selected_names(specs.front().name, specs.front().series);
    std::vector<Index> idx;
    for (const auto& spec : specs) {
      std::vector<Index> here = indices_of(spec.series, names);
      if (idx.empty()) idx = here;
      if (here != idx) throw Error(Errc::InvalidArgument, "domains disagree on the feature column order");
    }
    return idx;
  }

  static std::vector<Index> indices_of(const AlignedSeries& s, const std::vector<std::string>& names) {
    std::vector<Index> idx;
    for (const auto& n : names) {
      const auto it = std::find(s.feature_names.begin(), s.feature_names.end(), n);
      if (it == s.feature_names.end()) {
        throw Error(Errc::ArchMismatch, "architecture mismatch: domain '" + s.name + "' has no feature '" + n + "'");
      }
      idx.push_back(static_cast<Index>(it - s.feature_names.begin()));
    }
    return idx;
  }

  DomainSplit split_for(const std::string& name, const AlignedSeries& s, const std::vector<std::string>& names) const {
    ExperimentConfig ec = experiment_config();
    ec.feature_indices = indices_of(s, names);
    return split_domain({name, s}, ec);
  }

  ExperimentConfig experiment_config() const {
    ExperimentConfig ec;
    ec.n_bins = c_.bins;
    ec.window = c_.window;
    ec.arch = c_.arch;
    ec.source_train = c_.train;
    ec.adapt_train = c_.adapt;
    ec.train_frac = c_.train_frac;
    ec.root_seed = c_.seed;
    ec.forest = c_.forest;
    return ec;
  }

  fs::path require_checkpoint() const {
    if (f_.checkpoint.empty()) throw Error(Errc::InvalidArgument, "--checkpoint is required");
    return f_.checkpoint;
  }

  static fs::path sidecar(const fs::path& ckpt) { return fs::path(ckpt.string() + ".features"); }

  static void write_feature_sidecar(const fs::path& ckpt, const std::vector<std::string>& names) {
    std::ofstream out(sidecar(ckpt));
    if (!out) throw Error(Errc::Io, "cannot write '" + sidecar(ckpt).string() + "'");
    for (const auto& n : names) out << n << '\n';
  }

  static std::vector<std::string> read_feature_sidecar(const fs::path& ckpt) { return read_lines(sidecar(ckpt)); }

  static std::vector<std::string> read_lines(const fs::path& p) {
    auto in = audit::open_input(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw Error(Errc::EmptyFile, "'" + p.string() + "' lists no features");
    return lines;
  }

  static double best_accuracy(const History& h) {
    return h.epochs.at(static_cast<std::size_t>(h.best_epoch - 1)).eval_accuracy;
  }

  static void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw Error(Errc::Io, "cannot write '" + p.string() + "'");
    out << j.dump(2) << '\n';
  }

  void write_manifest(const std::string& command, const json& checkpoints, const json& extra = json::object()) {
    json inputs = json::object();
    auto read = audit::reads();
    std::sort(read.begin(), read.end());
    read.erase(std::unique(read.begin(), read.end()), read.end());
    for (const auto& r : read) inputs[fs::path(r).filename().string()] = hex64(file_hash(r));
    json m{{"command", command},
           {"seed", c_.seed},
           {"config", config_json(c_)},
           {"inputs", inputs},
           {"checkpoints", checkpoints}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_json(path(command + ".manifest.json"), m);
  }

  RunConfig c_;
  const Flags& f_;
  std::ostream& out_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-adaptive wind power classification toolkit", "wadapt"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "Root seed (overrides the config)");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--bins", f.bins, "Number of capacity-factor classes");
  app.add_option("--window", f.window, "Window length in hours");
  app.add_option("--k", f.k, "Number of selected features");
  app.add_option("--epochs", f.epochs, "Maximum epochs for training and adaptation");
  app.add_option("--mode", f.mode, "Adaptation mode")->check(CLI::IsMember({"partial", "full"}));
  app.add_option("--domain", f.domain, "Domain name");
  app.add_option("--source", f.source, "Source domain name");
  app.add_option("--target", f.target, "Target domain name");
  app.add_option("--checkpoint", f.checkpoint, "Checkpoint file");
  app.add_option("--synth", f.synth, "Synthetic domain parameters as key=value")->expected(1, -1);
  app.add_option("--audit-log", f.audit_log, "Write the list of files read to this path");
  app.add_flag("--update-bn-stats", f.update_bn_stats, "Let partial adaptation update batch-norm statistics");

  std::string which;
  auto* prepare = app.add_subcommand("prepare", "Merge or synthesize domains into aligned samples");
  auto* features = app.add_subcommand("features", "Forest importances, selected features, correlation, histogram");
  auto* train = app.add_subcommand("train", "Train a source model");
  auto* adapt_sc = app.add_subcommand("adapt", "Adapt a checkpoint to a target domain");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a domain's test split");
  auto* matrix = app.add_subcommand("matrix", "Adaptation matrix over all configured domains");
  auto* ablate = app.add_subcommand("ablate", "Partial-vs-full or all-vs-selected feature ablation");
  ablate->add_option("which", which, "network or features")->required();
  auto* curves = app.add_subcommand("curves", "Scratch-vs-adapted convergence curves");
  auto* synth = app.add_subcommand("synth", "Write synthetic generation and weather CSVs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }

  audit::clear();
  audit::set_recording(true);
  int status = kExitOk;
  try {
    Session s(load_config(f), f, out);
    if (prepare->parsed()) s.prepare();
    if (features->parsed()) s.features();
    if (train->parsed()) s.train();
    if (adapt_sc->parsed()) s.adapt_cmd();
    if (eval->parsed()) s.eval();
    if (matrix->parsed()) s.matrix();
    if (ablate->parsed()) s.ablate(which);
    if (curves->parsed()) s.curves();
    if (synth->parsed()) s.synth();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    status = e.code() == Errc::NumericalDivergence ? kExitDivergence : kExitDataError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    status = kExitDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    status = kExitDataError;
  }
  if (!f.audit_log.empty()) {
    std::ofstream log(f.audit_log);
    for (const auto& r : audit::reads()) log << r << '\n';
  }
  audit::set_recording(false);
  return status;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace wadapt
