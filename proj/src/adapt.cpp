#include "wadapt/adapt.hpp"

#include "wadapt/error.hpp"
#include "wadapt/nn/checkpoint.hpp"

namespace wadapt {

std::string_view to_string(AdaptMode mode) { return mode == AdaptMode::Partial ? "partial" : "full"; }

AdaptMode parse_adapt_mode(std::string_view text) {
  if (text == "partial") return AdaptMode::Partial;
  if (text == "full") return AdaptMode::Full;
  throw Error(Errc::InvalidArgument, "adaptation mode must be 'partial' or 'full', got '" + std::string(text) + "'");
}

nn::FreezeMask make_freeze_mask(AdaptMode mode, const nn::Architecture& arch) {
  arch.validate();
  if (mode == AdaptMode::Full) return nn::FreezeMask::all_trainable();
  nn::FreezeMask mask = nn::FreezeMask::all_frozen();
  for (auto g : {nn::ParamGroup::Fc1W, nn::ParamGroup::Fc1B, nn::ParamGroup::Fc2W, nn::ParamGroup::Fc2B}) {
    mask.trainable[static_cast<std::size_t>(g)] = true;
  }
  return mask;
}

TrainResult adapt(const nn::ModelParams& pretrained, const WindowedDataset& target_train,
                  const WindowedDataset& target_eval, AdaptMode mode, const TrainConfig& cfg) {
  check_compatible(pretrained.arch, target_train);
  check_compatible(pretrained.arch, target_eval);
  return fit(pretrained, target_train, target_eval, make_freeze_mask(mode, pretrained.arch), cfg);
}

TrainResult adapt(const std::filesystem::path& checkpoint, const WindowedDataset& target_train,
                  const WindowedDataset& target_eval, AdaptMode mode, const TrainConfig& cfg) {
  return adapt(nn::load_checkpoint(checkpoint), target_train, target_eval, mode, cfg);
}

double zero_shot_eval(const nn::ModelParams& pretrained, const WindowedDataset& target_eval) {
  return evaluate(pretrained, target_eval).accuracy;
}

double zero_shot_eval(const std::filesystem::path& checkpoint, const WindowedDataset& target_eval) {
  return zero_shot_eval(nn::load_checkpoint(checkpoint), target_eval);
}

}  // namespace wadapt
