#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wadapt/adapt.hpp"
#include "wadapt/features.hpp"
#include "wadapt/ingest.hpp"
#include "wadapt/labeling.hpp"
#include "wadapt/train.hpp"

namespace wadapt {

struct DomainSpec {
  std::string name;
  AlignedSeries series;
};

struct ExperimentConfig {
  int n_bins = 6;
  int window = 24;
  /// Shared input columns; empty means every feature of the domain.
  std::vector<Index> feature_indices;
  /// Window, feature and class counts are filled in from the data.
  nn::Architecture arch;
  TrainConfig source_train;
  TrainConfig adapt_train;
  double train_frac = 0.8;
  std::uint64_t root_seed = 0;
  ForestConfig forest;
  /// Checkpoints go here when set.
  std::filesystem::path work_dir;
};

struct DomainSplit {
  std::string name;
  WindowedDataset train;
  WindowedDataset test;
};

DomainSplit split_domain(const DomainSpec& domain, const ExperimentConfig& cfg);

/// The architecture `cfg` yields for windows of `split`.
nn::Architecture resolve_arch(const ExperimentConfig& cfg, const DomainSplit& split);

/// 64-bit FNV-1a, used for file and checkpoint fingerprints in manifests.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t file_hash(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

struct PretrainedModel {
  nn::ModelParams model;
  History history;
  std::uint64_t checkpoint_hash = 0;
  std::filesystem::path checkpoint_path;
};

/// Trains on the source train split, evaluates on its test split, and writes
/// `<work_dir>/<name>.ckpt` when a work directory is set.
PretrainedModel pretrain(const DomainSplit& source, const ExperimentConfig& cfg, std::uint64_t seed);

/// Percentages throughout; diff = acc_with − acc_without.
struct MatrixCell {
  std::string source;
  std::string target;
  double acc_without = 0.0;
  double acc_with = 0.0;
  double diff = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_hash = 0;
};

/// A cell with diff computed from its two accuracies.
MatrixCell matrix_cell(std::string source, std::string target, double acc_without, double acc_with);

struct MatrixResult {
  std::vector<std::string> domains;
  /// Off-diagonal cells only, in row-major (source, target) order.
  std::vector<MatrixCell> cells;

  /// Empty for the diagonal.
  std::optional<MatrixCell> at(const std::string& source, const std::string& target) const;
};

MatrixResult run_matrix(const std::vector<DomainSpec>& domains, const ExperimentConfig& cfg);

struct PartialFullResult {
  double acc_partial = 0.0;
  double acc_full = 0.0;
  /// acc_full − acc_partial.
  double difference = 0.0;
  History partial;
  History full;
};

PartialFullResult run_partial_vs_full(const DomainSpec& source, const DomainSpec& target,
                                      const ExperimentConfig& cfg);

struct FeatureAblationResult {
  double acc_all = 0.0;
  double acc_selected = 0.0;
  /// acc_all − acc_selected.
  double difference = 0.0;
  std::vector<Index> selected;
  VectorXd importances;
};

/// The forest sees only the hours of the chronological train part.
FeatureAblationResult run_feature_ablation(const DomainSpec& domain, Index k, const ExperimentConfig& cfg);

struct ConvergenceResult {
  History scratch;
  History adapted;
  int saturation_scratch = 0;
  int saturation_adapted = 0;
};

ConvergenceResult run_convergence_comparison(const DomainSpec& source, const DomainSpec& target,
                                             const ExperimentConfig& cfg);

/// Everything one (source, target, seed) transfer run produces: the
/// pretrained model scored zero-shot, adapted both ways, and a from-scratch
/// target model trained with the same seed and splits.
struct TransferRun {
  double acc_without = 0.0;
  double acc_partial = 0.0;
  double acc_full = 0.0;
  double acc_scratch = 0.0;
  History source;
  History partial;
  History full;
  History scratch;
  int saturation_adapted = 0;
  int saturation_scratch = 0;
};

TransferRun run_transfer(const DomainSplit& source, const DomainSplit& target, const ExperimentConfig& cfg,
                         std::uint64_t seed);

void write_matrix_csv(const std::filesystem::path& path, const MatrixResult& m);
void write_partial_full_csv(const std::filesystem::path& path, const std::string& source, const std::string& target,
                            const PartialFullResult& r);
void write_feature_ablation_csv(const std::filesystem::path& path, const std::string& domain,
                                const FeatureAblationResult& r);
/// Epoch 0 holds the starting accuracies; a run that stopped earlier leaves
/// its columns blank from then on.
void write_curves_csv(const std::filesystem::path& path, const ConvergenceResult& r);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace wadapt
