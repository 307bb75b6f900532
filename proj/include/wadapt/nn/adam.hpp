#pragma once

#include <cstdint>

#include "wadapt/nn/model.hpp"

namespace wadapt::nn {

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  /// First and second moments per learnable group; empty until first touched.
  std::array<VectorXd, kLearnableGroups> m;
  std::array<VectorXd, kLearnableGroups> v;
};

/// Bias-corrected Adam update of one flat tensor at step `t` (1-based),
/// using the hyperparameters of `hyper`.
void adam_update(Eigen::Ref<VectorXd> param, const Eigen::Ref<const VectorXd>& grad, VectorXd& m, VectorXd& v,
                 std::int64_t t, const AdamState& hyper);

/// One bias-corrected Adam step. `t` advances on every call; groups frozen
/// by `mask` keep their parameters and moments untouched.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const FreezeMask& mask);

}  // namespace wadapt::nn
