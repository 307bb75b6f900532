#pragma once

#include <filesystem>
#include <string_view>

#include "wadapt/train.hpp"

namespace wadapt {

/// Partial trains only fc1/fc2 with frozen batch-norm statistics; Full
/// trains every group and lets the statistics follow the target data.
enum class AdaptMode { Partial, Full };

std::string_view to_string(AdaptMode mode);
/// Accepts "partial" or "full"; throws InvalidArgument.
AdaptMode parse_adapt_mode(std::string_view text);

nn::FreezeMask make_freeze_mask(AdaptMode mode, const nn::Architecture& arch);

/// Fine-tunes a pretrained model on labelled target data with a fresh
/// optimizer state. Only the model crosses domains.
TrainResult adapt(const nn::ModelParams& pretrained, const WindowedDataset& target_train,
                  const WindowedDataset& target_eval, AdaptMode mode, const TrainConfig& cfg);

TrainResult adapt(const std::filesystem::path& checkpoint, const WindowedDataset& target_train,
                  const WindowedDataset& target_eval, AdaptMode mode, const TrainConfig& cfg);

/// Accuracy of the untouched pretrained model on target data.
double zero_shot_eval(const nn::ModelParams& pretrained, const WindowedDataset& target_eval);
double zero_shot_eval(const std::filesystem::path& checkpoint, const WindowedDataset& target_eval);

}  // namespace wadapt
