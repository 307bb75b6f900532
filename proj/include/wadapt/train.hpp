#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wadapt/labeling.hpp"
#include "wadapt/nn/adam.hpp"
#include "wadapt/nn/model.hpp"

namespace wadapt {

/// Independent 64-bit stream seed for one purpose under a root seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t purpose);

struct TrainConfig {
  double lr = 0.001;
  int batch_size = 64;
  int max_epochs = 200;
  /// Epochs without a loss improvement of at least min_delta before stopping.
  int patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double eval_accuracy = 0.0;
  double seconds = 0.0;
};

struct History {
  /// Eval accuracy of the starting model, before any update.
  double initial_eval_accuracy = 0.0;
  std::vector<EpochRecord> epochs;
  /// Epoch whose weights were returned (highest eval accuracy, earliest on ties).
  int best_epoch = 0;

  double seconds_per_epoch() const;
};

struct TrainResult {
  nn::ModelParams model;
  History history;
};

using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct EvalResult {
  double accuracy = 0.0;
  /// Rows are true classes, columns predicted classes.
  ConfusionMatrix confusion;
};

/// Throws ArchMismatch unless the dataset's feature count, window length and
/// class count match the architecture.
void check_compatible(const nn::Architecture& arch, const WindowedDataset& ds);

/// Argmax of each logit row; ties go to the lowest class.
std::vector<int> predict(const nn::ModelParams& model, const WindowedDataset& ds);

EvalResult evaluate(const nn::ModelParams& model, const WindowedDataset& ds);

/// The shared training loop: Adam over shuffled mini-batches, updating only
/// the groups `mask` leaves trainable, with plateau early stopping on the
/// mean epoch loss. Returns the weights of the best-eval-accuracy epoch.
TrainResult fit(nn::ModelParams initial, const WindowedDataset& train, const WindowedDataset& eval,
                const nn::FreezeMask& mask, const TrainConfig& cfg);

/// From-scratch supervised training with every group trainable.
TrainResult train_source(const WindowedDataset& train, const WindowedDataset& eval, const nn::Architecture& arch,
                         const TrainConfig& cfg);

/// Smallest epoch whose eval accuracy reaches frac × the best in `h`.
int epochs_to_saturation(const History& h, double frac = 0.95);

/// Columns epoch, loss, train_acc, eval_acc, seconds.
void write_history_csv(const std::filesystem::path& path, const History& h);

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& confusion);

}  // namespace wadapt
