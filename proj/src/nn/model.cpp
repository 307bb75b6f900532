#include "wadapt/nn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

namespace wadapt::nn {
namespace {

template <typename M>
std::span<double> as_span(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename M>
std::span<const double> as_span(const M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

void he_normal(RowMatrixXd& w, Index fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
}

void check_finite(const RowMatrixXd& m, const char* where) {
  if (!m.allFinite()) throw Error(Errc::NumericalDivergence, std::string("non-finite values in ") + where);
}

}  // namespace

void Architecture::validate() const {
  if (window < 1 || features < 1 || kernel < 1 || conv1 < 1 || conv2 < 1 || hidden < 1 || classes < 1) {
    throw Error(Errc::InvalidArgument, "architecture dimensions must be positive");
  }
  if (kernel % 2 == 0) throw Error(Errc::InvalidArgument, "kernel size must be odd");
}

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::Conv1W: return "conv1_w";
    case ParamGroup::Conv1B: return "conv1_b";
    case ParamGroup::Bn1Gamma: return "bn1.gamma";
    case ParamGroup::Bn1Beta: return "bn1.beta";
    case ParamGroup::Conv2W: return "conv2_w";
    case ParamGroup::Conv2B: return "conv2_b";
    case ParamGroup::Bn2Gamma: return "bn2.gamma";
    case ParamGroup::Bn2Beta: return "bn2.beta";
    case ParamGroup::Fc1W: return "fc1_w";
    case ParamGroup::Fc1B: return "fc1_b";
    case ParamGroup::Fc2W: return "fc2_w";
    case ParamGroup::Fc2B: return "fc2_b";
  }
  return "?";
}

std::span<double> ModelParams::group(ParamGroup g) {
  const auto& self = *this;
  const auto s = self.group(g);
  return {const_cast<double*>(s.data()), s.size()};
}

std::span<const double> ModelParams::group(ParamGroup g) const {
  switch (g) {
    case ParamGroup::Conv1W: return as_span(conv1_w);
    case ParamGroup::Conv1B: return as_span(conv1_b);
    case ParamGroup::Bn1Gamma: return as_span(bn1.gamma);
    case ParamGroup::Bn1Beta: return as_span(bn1.beta);
    case ParamGroup::Conv2W: return as_span(conv2_w);
    case ParamGroup::Conv2B: return as_span(conv2_b);
    case ParamGroup::Bn2Gamma: return as_span(bn2.gamma);
    case ParamGroup::Bn2Beta: return as_span(bn2.beta);
    case ParamGroup::Fc1W: return as_span(fc1_w);
    case ParamGroup::Fc1B: return as_span(fc1_b);
    case ParamGroup::Fc2W: return as_span(fc2_w);
    case ParamGroup::Fc2B: return as_span(fc2_b);
  }
  return {};
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!(a.arch == b.arch)) return false;
  const auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() &&
           std::equal(x.data(), x.data() + x.size(), y.data(), [](double p, double q) {
             return std::bit_cast<std::uint64_t>(p) == std::bit_cast<std::uint64_t>(q);
           });
  };
  const auto same_bn = [&](const BatchNormParams<double>& x, const BatchNormParams<double>& y) {
    return same(x.gamma, y.gamma) && same(x.beta, y.beta) && same(x.run_mean, y.run_mean) && same(x.run_var, y.run_var);
  };
  return same(a.conv1_w, b.conv1_w) && same(a.conv1_b, b.conv1_b) && same_bn(a.bn1, b.bn1) &&
         same(a.conv2_w, b.conv2_w) && same(a.conv2_b, b.conv2_b) && same_bn(a.bn2, b.bn2) &&
         same(a.fc1_w, b.fc1_w) && same(a.fc1_b, b.fc1_b) && same(a.fc2_w, b.fc2_w) && same(a.fc2_b, b.fc2_b);
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.arch = arch;
  p.conv1_w.resize(arch.conv1, static_cast<Index>(arch.features) * arch.kernel);
  he_normal(p.conv1_w, p.conv1_w.cols(), rng);
  p.conv1_b = VectorXd::Zero(arch.conv1);
  p.bn1 = BatchNormParams<double>::identity(arch.conv1);
  p.conv2_w.resize(arch.conv2, static_cast<Index>(arch.conv1) * arch.kernel);
  he_normal(p.conv2_w, p.conv2_w.cols(), rng);
  p.conv2_b = VectorXd::Zero(arch.conv2);
  p.bn2 = BatchNormParams<double>::identity(arch.conv2);
  p.fc1_w.resize(arch.hidden, arch.flat_dim());
  he_normal(p.fc1_w, p.fc1_w.cols(), rng);
  p.fc1_b = VectorXd::Zero(arch.hidden);
  p.fc2_w.resize(arch.classes, arch.hidden);
  he_normal(p.fc2_w, p.fc2_w.cols(), rng);
  p.fc2_b = VectorXd::Zero(arch.classes);
  return p;
}

int FreezeMask::trainable_count() const {
  int n = bn_stats_frozen ? 0 : 1;
  for (bool t : trainable) n += t ? 1 : 0;
  return n;
}

FreezeMask FreezeMask::all_trainable() {
  FreezeMask m;
  m.trainable.fill(true);
  m.bn_stats_frozen = false;
  return m;
}

FreezeMask FreezeMask::all_frozen() {
  FreezeMask m;
  m.trainable.fill(false);
  m.bn_stats_frozen = true;
  return m;
}

SeqBatch<double> make_batch(const WindowedDataset& ds, std::span<const std::size_t> indices) {
  const Index W = ds.window_len;
  SeqBatch<double> batch(ds.n_features(), static_cast<Index>(indices.size()), W);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    batch.data.middleCols(static_cast<Index>(b) * W, W) = ds.X(indices[b]).transpose();
  }
  return batch;
}

RowMatrixXd forward(ModelParams& params, const SeqBatch<double>& input, NormMode mode, ForwardCache* cache) {
  const Architecture& a = params.arch;
  if (input.channels() != a.features || input.length != a.window) {
    throw Error(Errc::ShapeMismatch, "input batch is " + std::to_string(input.channels()) + " features x " +
                                         std::to_string(input.length) + " hours, model expects " +
                                         std::to_string(a.features) + " x " + std::to_string(a.window));
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.input = input;
  c.conv1_out = conv1d_forward(input, params.conv1_w, params.conv1_b);
  const SeqBatch<double> bn1 = batchnorm_forward(c.conv1_out, params.bn1, mode, &c.bn1);
  c.act1 = bn1;
  c.act1.data = relu(bn1.data);
  c.conv2_out = conv1d_forward(c.act1, params.conv2_w, params.conv2_b);
  const SeqBatch<double> bn2 = batchnorm_forward(c.conv2_out, params.bn2, mode, &c.bn2);
  c.act2 = bn2;
  c.act2.data = relu(bn2.data);
  c.flat = flatten(c.act2);
  c.fc1_out = dense_forward(c.flat, params.fc1_w, params.fc1_b);
  c.act3 = relu(c.fc1_out);
  RowMatrixXd logits = dense_forward(c.act3, params.fc2_w, params.fc2_b);
  check_finite(logits, "logits");
  return logits;
}

RowMatrixXd forward(const ModelParams& params, const SeqBatch<double>& input) {
  // Eval mode reads but never writes the running statistics.
  return forward(const_cast<ModelParams&>(params), input, NormMode::Eval, nullptr);
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, const RowMatrixXd& grad_logits,
                   const FreezeMask& mask) {
  using G = ParamGroup;
  // Deepest layer (in forward order) that still needs a gradient.
  const auto any = [&](std::initializer_list<G> gs) {
    for (G g : gs) {
      if (mask.is_trainable(g)) return true;
    }
    return false;
  };
  const bool below_fc2 = any({G::Fc1W, G::Fc1B, G::Bn2Gamma, G::Bn2Beta, G::Conv2W, G::Conv2B, G::Bn1Gamma,
                              G::Bn1Beta, G::Conv1W, G::Conv1B});
  const bool below_fc1 = any({G::Bn2Gamma, G::Bn2Beta, G::Conv2W, G::Conv2B, G::Bn1Gamma, G::Bn1Beta, G::Conv1W,
                              G::Conv1B});
  const bool below_bn2 = any({G::Conv2W, G::Conv2B, G::Bn1Gamma, G::Bn1Beta, G::Conv1W, G::Conv1B});
  const bool below_conv2 = any({G::Bn1Gamma, G::Bn1Beta, G::Conv1W, G::Conv1B});
  const bool below_bn1 = any({G::Conv1W, G::Conv1B});

  Gradients grads;
  const auto keep = [&](G g, const auto& m) {
    if (mask.is_trainable(g)) grads[g] = Eigen::Map<const VectorXd>(m.data(), m.size());
  };

  auto fc2 = dense_backward(cache.act3, params.fc2_w, grad_logits, below_fc2);
  keep(G::Fc2W, fc2.w);
  keep(G::Fc2B, fc2.bias);
  if (!below_fc2) return grads;

  const RowMatrixXd grad_fc1_out = relu_backward(cache.fc1_out, fc2.x);
  auto fc1 = dense_backward(cache.flat, params.fc1_w, grad_fc1_out, below_fc1);
  keep(G::Fc1W, fc1.w);
  keep(G::Fc1B, fc1.bias);
  if (!below_fc1) return grads;

  const Architecture& a = params.arch;
  SeqBatch<double> grad_act2 = unflatten(fc1.x, a.conv2, a.conv_out_len());
  // relu's input is the bn output, which is positive exactly where act2 is.
  grad_act2.data = relu_backward(cache.act2.data, grad_act2.data);
  auto bn2 = batchnorm_backward(cache.bn2, params.bn2.gamma, grad_act2, below_bn2);
  keep(G::Bn2Gamma, bn2.gamma);
  keep(G::Bn2Beta, bn2.beta);
  if (!below_bn2) return grads;

  auto conv2 = conv1d_backward(cache.act1, params.conv2_w, bn2.x, below_conv2);
  keep(G::Conv2W, conv2.w);
  keep(G::Conv2B, conv2.bias);
  if (!below_conv2) return grads;

  SeqBatch<double> grad_act1 = conv2.x;
  grad_act1.data = relu_backward(cache.act1.data, conv2.x.data);
  auto bn1 = batchnorm_backward(cache.bn1, params.bn1.gamma, grad_act1, below_bn1);
  keep(G::Bn1Gamma, bn1.gamma);
  keep(G::Bn1Beta, bn1.beta);
  if (!below_bn1) return grads;

  auto conv1 = conv1d_backward(cache.input, params.conv1_w, bn1.x, false);
  keep(G::Conv1W, conv1.w);
  keep(G::Conv1B, conv1.bias);
  return grads;
}

}  // namespace wadapt::nn
