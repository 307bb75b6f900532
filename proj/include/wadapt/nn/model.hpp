#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "wadapt/labeling.hpp"
#include "wadapt/nn/layers.hpp"
#include "wadapt/types.hpp"

namespace wadapt::nn {

/// Conv → BN → ReLU → Conv → BN → ReLU → flatten → FC → ReLU → FC.
struct Architecture {
  int window = 24;
  int features = 6;
  int kernel = 3;
  int conv1 = 32;
  int conv2 = 64;
  int hidden = 128;
  int classes = 6;

  /// Temporal length after the convolutions (same padding keeps W).
  int conv_out_len() const { return window; }
  Index flat_dim() const { return static_cast<Index>(conv2) * conv_out_len(); }
  /// Throws InvalidArgument.
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// The learnable tensors, in checkpoint order.
enum class ParamGroup : int {
  Conv1W, Conv1B, Bn1Gamma, Bn1Beta,
  Conv2W, Conv2B, Bn2Gamma, Bn2Beta,
  Fc1W, Fc1B, Fc2W, Fc2B,
};
inline constexpr int kLearnableGroups = 12;
/// Learnable groups plus the batch-norm running statistics.
inline constexpr int kMaskGroups = kLearnableGroups + 1;

std::string_view group_name(ParamGroup g);

struct ModelParams {
  Architecture arch;
  RowMatrixXd conv1_w;  // C1 × (F·K)
  VectorXd conv1_b;
  BatchNormParams<double> bn1;
  RowMatrixXd conv2_w;  // C2 × (C1·K)
  VectorXd conv2_b;
  BatchNormParams<double> bn2;
  RowMatrixXd fc1_w;  // H × (C2·W')
  VectorXd fc1_b;
  RowMatrixXd fc2_w;  // N × H
  VectorXd fc2_b;

  std::span<double> group(ParamGroup g);
  std::span<const double> group(ParamGroup g) const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// He-normal conv/FC weights (std = sqrt(2 / fan_in)), zero biases, identity BN.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

/// One flat gradient vector per learnable group, row-major like the group.
struct Gradients {
  std::array<VectorXd, kLearnableGroups> groups;

  VectorXd& operator[](ParamGroup g) { return groups[static_cast<std::size_t>(g)]; }
  const VectorXd& operator[](ParamGroup g) const { return groups[static_cast<std::size_t>(g)]; }
};

struct FreezeMask {
  std::array<bool, kLearnableGroups> trainable{};
  bool bn_stats_frozen = false;

  bool is_trainable(ParamGroup g) const { return trainable[static_cast<std::size_t>(g)]; }
  /// Counted over the learnable groups plus the running-statistics group.
  int trainable_count() const;
  int frozen_count() const { return kMaskGroups - trainable_count(); }

  static FreezeMask all_trainable();
  static FreezeMask all_frozen();
};

struct ForwardCache {
  SeqBatch<double> input;
  SeqBatch<double> conv1_out;
  BatchNormCache<double> bn1;
  SeqBatch<double> act1;
  SeqBatch<double> conv2_out;
  BatchNormCache<double> bn2;
  SeqBatch<double> act2;
  RowMatrixXd flat;
  RowMatrixXd fc1_out;
  RowMatrixXd act3;
};

/// Packs windows as an F×(B·W) channel-major batch (B×W×F transposed).
SeqBatch<double> make_batch(const WindowedDataset& ds, std::span<const std::size_t> indices);

/// Train-mode batch norm uses batch statistics and updates the running
/// statistics in `params`; eval mode leaves `params` untouched. Throws
/// NumericalDivergence when any logit is NaN or infinite.
RowMatrixXd forward(ModelParams& params, const SeqBatch<double>& input, NormMode mode, ForwardCache* cache = nullptr);

/// Eval-mode forward; a pure function of its arguments.
RowMatrixXd forward(const ModelParams& params, const SeqBatch<double>& input);

/// Gradients of the loss w.r.t. every trainable group of `mask`. Frozen
/// groups come back empty, and backpropagation stops below the lowest
/// trainable layer.
Gradients backward(const ModelParams& params, const ForwardCache& cache, const RowMatrixXd& grad_logits,
                   const FreezeMask& mask = FreezeMask::all_trainable());

}  // namespace wadapt::nn
