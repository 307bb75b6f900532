#include "wadapt/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <numeric>

#include "wadapt/audit.hpp"
#include "wadapt/error.hpp"
#include "wadapt/nn/checkpoint.hpp"

namespace wadapt {
namespace {

constexpr double kPercent = 100.0;

std::vector<Index> resolve_features(const ExperimentConfig& cfg, const AlignedSeries& series) {
  if (!cfg.feature_indices.empty()) return cfg.feature_indices;
  std::vector<Index> all(static_cast<std::size_t>(series.n_features()));
  std::iota(all.begin(), all.end(), Index{0});
  return all;
}

TrainConfig seeded(TrainConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(std::begin(buf), std::end(buf), v);
  return std::string(buf, r.ptr);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  auto in = audit::open_input(path);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto r = std::to_chars(std::begin(buf), std::end(buf), v, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

DomainSplit split_domain(const DomainSpec& domain, const ExperimentConfig& cfg) {
  const auto features = resolve_features(cfg, domain.series);
  const WindowedDataset ds = window(domain.series, cfg.window, features, make_bins(cfg.n_bins));
  auto [train, test] = split_chronological(ds, cfg.train_frac);
  train.domain_tag = test.domain_tag = domain.name;
  return {domain.name, std::move(train), std::move(test)};
}

nn::Architecture resolve_arch(const ExperimentConfig& cfg, const DomainSplit& split) {
  nn::Architecture a = cfg.arch;
  a.window = split.train.window_len;
  a.features = static_cast<int>(split.train.n_features());
  a.classes = split.train.bin_spec.n_bins;
  return a;
}

PretrainedModel pretrain(const DomainSplit& source, const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainResult r = train_source(source.train, source.test, resolve_arch(cfg, source), seeded(cfg.source_train, seed));
  PretrainedModel p{std::move(r.model), std::move(r.history), 0, {}};
  const auto bytes = nn::serialize(p.model);
  p.checkpoint_hash = fnv1a64(bytes);
  if (!cfg.work_dir.empty()) {
    std::filesystem::create_directories(cfg.work_dir);
    p.checkpoint_path = cfg.work_dir / (source.name + ".ckpt");
    nn::save_checkpoint(p.model, p.checkpoint_path);
  }
  return p;
}

MatrixCell matrix_cell(std::string source, std::string target, double acc_without, double acc_with) {
  MatrixCell c;
  c.source = std::move(source);
  c.target = std::move(target);
  c.acc_without = acc_without;
  c.acc_with = acc_with;
  c.diff = acc_with - acc_without;
  return c;
}

std::optional<MatrixCell> MatrixResult::at(const std::string& source, const std::string& target) const {
  for (const auto& c : cells) {
    if (c.source == source && c.target == target) return c;
  }
  return std::nullopt;
}

MatrixResult run_matrix(const std::vector<DomainSpec>& domains, const ExperimentConfig& cfg) {
  if (domains.size() < 2) throw Error(Errc::InvalidArgument, "the adaptation matrix needs at least two domains");
  MatrixResult m;
  std::vector<DomainSplit> splits;
  for (const auto& d : domains) {
    if (std::find(m.domains.begin(), m.domains.end(), d.name) != m.domains.end()) {
      throw Error(Errc::InvalidArgument, "duplicate domain name '" + d.name + "'");
    }
    m.domains.push_back(d.name);
    splits.push_back(split_domain(d, cfg));
  }
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const PretrainedModel pre = pretrain(splits[i], cfg, derive_seed(cfg.root_seed, static_cast<std::uint32_t>(i)));
    for (std::size_t j = 0; j < splits.size(); ++j) {
      if (i == j) continue;
      const auto seed = derive_seed(cfg.root_seed, static_cast<std::uint32_t>(1000 + i * splits.size() + j));
      const double without = kPercent * zero_shot_eval(pre.model, splits[j].test);
      const TrainResult adapted =
          adapt(pre.model, splits[j].train, splits[j].test, AdaptMode::Partial, seeded(cfg.adapt_train, seed));
      MatrixCell cell = matrix_cell(splits[i].name, splits[j].name, without,
                                    kPercent * evaluate(adapted.model, splits[j].test).accuracy);
      cell.seed = seed;
      cell.checkpoint_hash = pre.checkpoint_hash;
      m.cells.push_back(std::move(cell));
    }
  }
  return m;
}

PartialFullResult run_partial_vs_full(const DomainSpec& source, const DomainSpec& target,
                                      const ExperimentConfig& cfg) {
  const DomainSplit src = split_domain(source, cfg);
  const DomainSplit tgt = split_domain(target, cfg);
  const PretrainedModel pre = pretrain(src, cfg, derive_seed(cfg.root_seed, 0));
  const TrainConfig tc = seeded(cfg.adapt_train, derive_seed(cfg.root_seed, 1));
  PartialFullResult r;
  TrainResult partial = adapt(pre.model, tgt.train, tgt.test, AdaptMode::Partial, tc);
  TrainResult full = adapt(pre.model, tgt.train, tgt.test, AdaptMode::Full, tc);
  r.acc_partial = kPercent * evaluate(partial.model, tgt.test).accuracy;
  r.acc_full = kPercent * evaluate(full.model, tgt.test).accuracy;
  r.difference = r.acc_full - r.acc_partial;
  r.partial = std::move(partial.history);
  r.full = std::move(full.history);
  return r;
}

FeatureAblationResult run_feature_ablation(const DomainSpec& domain, Index k, const ExperimentConfig& cfg) {
  const Index F = domain.series.n_features();
  if (k < 1 || k > F) throw Error(Errc::InvalidArgument, "k must lie in [1, " + std::to_string(F) + "]");

  ExperimentConfig all_cfg = cfg;
  all_cfg.feature_indices.clear();
  const DomainSplit all = split_domain(domain, all_cfg);

  // Forest rows: every hour up to the end of the last training window.
  const Index fit_rows = all.train.windows.back().start + all.train.window_len;
  const RowMatrixXd X = feature_matrix(domain.series).topRows(fit_rows);
  const BinSpec bins = make_bins(cfg.n_bins);
  std::vector<int> y(static_cast<std::size_t>(fit_rows));
  for (Index i = 0; i < fit_rows; ++i) y[static_cast<std::size_t>(i)] = assign_bin(domain.series.samples[i].capacity_factor, bins);
  ForestConfig fc = cfg.forest;
  fc.seed = derive_seed(cfg.root_seed, 2);
  const Forest forest = fit_forest(X, y, cfg.n_bins, fc);

  FeatureAblationResult r;
  r.importances = forest.importances;
  r.selected = select_top_k(forest, k);
  ExperimentConfig sel_cfg = cfg;
  // Columns keep their dataset order so k = F reproduces the all-feature run.
  sel_cfg.feature_indices = r.selected;
  std::sort(sel_cfg.feature_indices.begin(), sel_cfg.feature_indices.end());
  const DomainSplit sel = split_domain(domain, sel_cfg);

  const std::uint64_t seed = derive_seed(cfg.root_seed, 0);
  const TrainResult a = train_source(all.train, all.test, resolve_arch(cfg, all), seeded(cfg.source_train, seed));
  const TrainResult s = train_source(sel.train, sel.test, resolve_arch(cfg, sel), seeded(cfg.source_train, seed));
  r.acc_all = kPercent * evaluate(a.model, all.test).accuracy;
  r.acc_selected = kPercent * evaluate(s.model, sel.test).accuracy;
  r.difference = r.acc_all - r.acc_selected;
  return r;
}

ConvergenceResult run_convergence_comparison(const DomainSpec& source, const DomainSpec& target,
                                             const ExperimentConfig& cfg) {
  const DomainSplit src = split_domain(source, cfg);
  const DomainSplit tgt = split_domain(target, cfg);
  const PretrainedModel pre = pretrain(src, cfg, derive_seed(cfg.root_seed, 0));
  const TrainConfig tc = seeded(cfg.adapt_train, derive_seed(cfg.root_seed, 1));
  ConvergenceResult r;
  r.adapted = adapt(pre.model, tgt.train, tgt.test, AdaptMode::Partial, tc).history;
  r.scratch = train_source(tgt.train, tgt.test, resolve_arch(cfg, tgt), tc).history;
  r.saturation_adapted = epochs_to_saturation(r.adapted);
  r.saturation_scratch = epochs_to_saturation(r.scratch);
  return r;
}

TransferRun run_transfer(const DomainSplit& source, const DomainSplit& target, const ExperimentConfig& cfg,
                         std::uint64_t seed) {
  const PretrainedModel pre = pretrain(source, cfg, derive_seed(seed, 0));
  const TrainConfig tc = seeded(cfg.adapt_train, derive_seed(seed, 1));
  TransferRun r;
  r.source = pre.history;
  r.acc_without = kPercent * zero_shot_eval(pre.model, target.test);
  TrainResult partial = adapt(pre.model, target.train, target.test, AdaptMode::Partial, tc);
  TrainResult full = adapt(pre.model, target.train, target.test, AdaptMode::Full, tc);
  TrainResult scratch = train_source(target.train, target.test, resolve_arch(cfg, target), tc);
  r.acc_partial = kPercent * evaluate(partial.model, target.test).accuracy;
  r.acc_full = kPercent * evaluate(full.model, target.test).accuracy;
  r.acc_scratch = kPercent * evaluate(scratch.model, target.test).accuracy;
  r.partial = std::move(partial.history);
  r.full = std::move(full.history);
  r.scratch = std::move(scratch.history);
  r.saturation_adapted = epochs_to_saturation(r.partial);
  r.saturation_scratch = epochs_to_saturation(r.scratch);
  return r;
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixResult& m) {
  auto out = open_output(path);
  out << "source,target,acc_without,acc_with,diff,seed,checkpoint_hash\n";
  for (const auto& s : m.domains) {
    for (const auto& t : m.domains) {
      const auto cell = m.at(s, t);
      if (!cell) {
        out << s << ',' << t << ",N/A,N/A,N/A,,\n";
        continue;
      }
      out << s << ',' << t << ',' << format_number(cell->acc_without) << ',' << format_number(cell->acc_with) << ','
          << format_number(cell->diff) << ',' << cell->seed << ',' << hex64(cell->checkpoint_hash) << '\n';
    }
  }
}

void write_partial_full_csv(const std::filesystem::path& path, const std::string& source, const std::string& target,
                            const PartialFullResult& r) {
  auto out = open_output(path);
  out << "source,target,acc_partial,acc_full,difference\n";
  out << source << ',' << target << ',' << format_number(r.acc_partial) << ',' << format_number(r.acc_full) << ','
      << format_number(r.difference) << '\n';
}

void write_feature_ablation_csv(const std::filesystem::path& path, const std::string& domain,
                                const FeatureAblationResult& r) {
  auto out = open_output(path);
  out << "domain,acc_all,acc_selected,difference\n";
  out << domain << ',' << format_number(r.acc_all) << ',' << format_number(r.acc_selected) << ','
      << format_number(r.difference) << '\n';
}

void write_curves_csv(const std::filesystem::path& path, const ConvergenceResult& r) {
  auto out = open_output(path);
  out << "epoch,scratch_loss,scratch_eval_acc,adapted_loss,adapted_eval_acc\n";
  out << "0,," << format_number(r.scratch.initial_eval_accuracy) << ",,"
      << format_number(r.adapted.initial_eval_accuracy) << '\n';
  const std::size_t n = std::max(r.scratch.epochs.size(), r.adapted.epochs.size());
  const auto cols = [&](const History& h, std::size_t i) {
    if (i >= h.epochs.size()) return std::string(",");
    return format_number(h.epochs[i].loss) + ',' + format_number(h.epochs[i].eval_accuracy);
  };
  for (std::size_t i = 0; i < n; ++i) {
    out << (i + 1) << ',' << cols(r.scratch, i) << ',' << cols(r.adapted, i) << '\n';
  }
}

}  // namespace wadapt
