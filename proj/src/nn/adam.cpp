#include "wadapt/nn/adam.hpp"

#include <cmath>

namespace wadapt::nn {

void adam_update(Eigen::Ref<VectorXd> param, const Eigen::Ref<const VectorXd>& grad, VectorXd& m, VectorXd& v,
                 std::int64_t t, const AdamState& hyper) {
  if (m.size() != param.size()) {
    m = VectorXd::Zero(param.size());
    v = VectorXd::Zero(param.size());
  }
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad;
  v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad.cwiseAbs2();
  param.array() -= hyper.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + hyper.eps);
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const FreezeMask& mask) {
  state.t += 1;
  for (int gi = 0; gi < kLearnableGroups; ++gi) {
    const auto g = static_cast<ParamGroup>(gi);
    if (!mask.is_trainable(g)) continue;
    const auto span = params.group(g);
    Eigen::Map<VectorXd> p(span.data(), static_cast<Index>(span.size()));
    const VectorXd& grad = grads[g];
    if (grad.size() != p.size()) {
      throw Error(Errc::ShapeMismatch, "gradient for " + std::string(group_name(g)) + " has wrong size");
    }
    adam_update(p, grad, state.m[static_cast<std::size_t>(gi)], state.v[static_cast<std::size_t>(gi)], state.t, state);
  }
}

}  // namespace wadapt::nn
