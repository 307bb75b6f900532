#pragma once

// Forward and backward passes of the individual layers. Sequence batches are
// stored channel-major: a C×(B·L) row-major matrix whose column b·L + t holds
// time step t of sample b, so convolution reduces to one GEMM over an
// im2col matrix and batch normalization works on whole rows.

#include <cmath>
#include <span>
#include <utility>

#include "wadapt/error.hpp"
#include "wadapt/types.hpp"

namespace wadapt::nn {

template <typename Scalar>
struct SeqBatch {
  Index batch = 0;
  Index length = 0;
  RowMatrix<Scalar> data;

  SeqBatch() = default;
  SeqBatch(Index channels, Index batch_size, Index len)
      : batch(batch_size), length(len), data(RowMatrix<Scalar>::Zero(channels, batch_size * len)) {}

  Index channels() const { return data.rows(); }
  Scalar& operator()(Index b, Index c, Index t) { return data(c, b * length + t); }
  Scalar operator()(Index b, Index c, Index t) const { return data(c, b * length + t); }
};

/// Rows (c·K + k) hold channel c shifted by k − K/2 with zero padding.
template <typename Scalar>
RowMatrix<Scalar> im2col(const SeqBatch<Scalar>& x, Index kernel) {
  const Index L = x.length;
  const Index pad = kernel / 2;
  RowMatrix<Scalar> col = RowMatrix<Scalar>::Zero(x.channels() * kernel, x.batch * L);
  for (Index c = 0; c < x.channels(); ++c) {
    for (Index k = 0; k < kernel; ++k) {
      const Index offset = k - pad;
      const Index t0 = std::max<Index>(0, -offset);
      const Index t1 = std::min<Index>(L, L - offset);
      if (t1 <= t0) continue;
      for (Index b = 0; b < x.batch; ++b) {
        col.row(c * kernel + k).segment(b * L + t0, t1 - t0) = x.data.row(c).segment(b * L + t0 + offset, t1 - t0);
      }
    }
  }
  return col;
}

template <typename Scalar>
SeqBatch<Scalar> col2im(const RowMatrix<Scalar>& col, Index channels, Index batch, Index length, Index kernel) {
  const Index pad = kernel / 2;
  SeqBatch<Scalar> x(channels, batch, length);
  for (Index c = 0; c < channels; ++c) {
    for (Index k = 0; k < kernel; ++k) {
      const Index offset = k - pad;
      const Index t0 = std::max<Index>(0, -offset);
      const Index t1 = std::min<Index>(length, length - offset);
      if (t1 <= t0) continue;
      for (Index b = 0; b < batch; ++b) {
        x.data.row(c).segment(b * length + t0 + offset, t1 - t0) +=
            col.row(c * kernel + k).segment(b * length + t0, t1 - t0);
      }
    }
  }
  return x;
}

/// out[b][o][t] = bias[o] + Σ_{c,k} w[o][c][k]·x_pad[b][c][t+k], with `w`
/// stored as Cout×(Cin·K) and padding K/2.
template <typename Scalar>
SeqBatch<Scalar> conv1d_forward(const SeqBatch<Scalar>& x, const RowMatrix<Scalar>& w, const Vector<Scalar>& bias) {
  if (x.channels() == 0 || w.cols() % x.channels() != 0 || w.rows() != bias.size()) {
    throw Error(Errc::ShapeMismatch, "conv1d weight/bias shapes do not match the input channels");
  }
  const Index kernel = w.cols() / x.channels();
  SeqBatch<Scalar> out;
  out.batch = x.batch;
  out.length = x.length;
  out.data.noalias() = w * im2col(x, kernel);
  out.data.colwise() += bias;
  return out;
}

template <typename Scalar>
struct Conv1dGrads {
  SeqBatch<Scalar> x;
  RowMatrix<Scalar> w;
  Vector<Scalar> bias;
};

template <typename Scalar>
Conv1dGrads<Scalar> conv1d_backward(const SeqBatch<Scalar>& x, const RowMatrix<Scalar>& w,
                                    const SeqBatch<Scalar>& grad_out, bool need_grad_x = true) {
  if (grad_out.channels() != w.rows() || grad_out.data.cols() != x.data.cols()) {
    throw Error(Errc::ShapeMismatch, "conv1d gradient shape does not match the forward output");
  }
  const Index kernel = w.cols() / x.channels();
  const RowMatrix<Scalar> col = im2col(x, kernel);
  Conv1dGrads<Scalar> g;
  g.w.noalias() = grad_out.data * col.transpose();
  g.bias = grad_out.data.rowwise().sum();
  if (need_grad_x) {
    const RowMatrix<Scalar> grad_col = w.transpose() * grad_out.data;
    g.x = col2im(grad_col, x.channels(), x.batch, x.length, kernel);
  }
  return g;
}

template <typename Scalar>
struct BatchNormParams {
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
  Vector<Scalar> run_mean;
  Vector<Scalar> run_var;

  static BatchNormParams identity(Index channels) {
    return {Vector<Scalar>::Ones(channels), Vector<Scalar>::Zero(channels), Vector<Scalar>::Zero(channels),
            Vector<Scalar>::Ones(channels)};
  }
};

enum class NormMode { Train, Eval };

template <typename Scalar>
struct BatchNormCache {
  NormMode mode = NormMode::Eval;
  RowMatrix<Scalar> xhat;
  Vector<Scalar> inv_std;
};

inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kBatchNormEps = 1e-5;

/// Train mode normalizes each channel by its batch mean and biased batch
/// variance and folds them into the running statistics; eval mode uses the
/// running statistics and leaves `bn` untouched.
template <typename Scalar>
SeqBatch<Scalar> batchnorm_forward(const SeqBatch<Scalar>& x, BatchNormParams<Scalar>& bn, NormMode mode,
                                   BatchNormCache<Scalar>* cache = nullptr, Scalar momentum = kBatchNormMomentum,
                                   Scalar eps = kBatchNormEps) {
  const Index n = x.data.cols();
  Vector<Scalar> mean, var;
  if (mode == NormMode::Train) {
    if (n < 2) throw Error(Errc::InvalidArgument, "batch norm in train mode needs at least 2 values per channel");
    mean = x.data.rowwise().mean();
    var = (x.data.colwise() - mean).array().square().rowwise().mean().matrix();
    bn.run_mean = (Scalar(1) - momentum) * bn.run_mean + momentum * mean;
    bn.run_var = (Scalar(1) - momentum) * bn.run_var + momentum * var;
  } else {
    mean = bn.run_mean;
    var = bn.run_var;
  }
  const Vector<Scalar> inv_std = (var.array() + eps).rsqrt().matrix();
  SeqBatch<Scalar> y;
  y.batch = x.batch;
  y.length = x.length;
  RowMatrix<Scalar> xhat = inv_std.asDiagonal() * (x.data.colwise() - mean);
  y.data = ((xhat.array().colwise() * bn.gamma.array()).colwise() + bn.beta.array()).matrix();
  if (cache) {
    cache->mode = mode;
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

template <typename Scalar>
struct BatchNormGrads {
  SeqBatch<Scalar> x;
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
};

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_backward(const BatchNormCache<Scalar>& cache, const Vector<Scalar>& gamma,
                                          const SeqBatch<Scalar>& grad_out, bool need_grad_x = true) {
  BatchNormGrads<Scalar> g;
  g.beta = grad_out.data.rowwise().sum();
  g.gamma = grad_out.data.cwiseProduct(cache.xhat).rowwise().sum();
  if (!need_grad_x) return g;
  g.x.batch = grad_out.batch;
  g.x.length = grad_out.length;
  const Vector<Scalar> scale = gamma.cwiseProduct(cache.inv_std);
  if (cache.mode == NormMode::Eval) {
    g.x.data = scale.asDiagonal() * grad_out.data;
    return g;
  }
  // dx = γ·σ⁻¹/n · (n·dy − Σdy − x̂·Σ(dy·x̂))
  const Scalar n = static_cast<Scalar>(grad_out.data.cols());
  RowMatrix<Scalar> centered = (n * grad_out.data).colwise() - g.beta;
  centered -= g.gamma.asDiagonal() * cache.xhat;
  g.x.data = (scale / n).asDiagonal() * centered;
  return g;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// Subgradient 0 at x = 0.
template <typename DerivedX, typename DerivedG>
auto relu_backward(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedG>& grad_out) {
  using Scalar = typename DerivedX::Scalar;
  return (x.array() > Scalar(0)).select(grad_out.array(), Scalar(0)).matrix();
}

/// y = x·wᵀ + b for x of shape B×Din and w of shape Dout×Din.
template <typename Scalar>
RowMatrix<Scalar> dense_forward(const RowMatrix<Scalar>& x, const RowMatrix<Scalar>& w, const Vector<Scalar>& bias) {
  if (x.cols() != w.cols() || w.rows() != bias.size()) {
    throw Error(Errc::ShapeMismatch, "dense layer shapes do not match");
  }
  RowMatrix<Scalar> y;
  y.noalias() = x * w.transpose();
  y.rowwise() += bias.transpose();
  return y;
}

template <typename Scalar>
struct DenseGrads {
  RowMatrix<Scalar> x;
  RowMatrix<Scalar> w;
  Vector<Scalar> bias;
};

template <typename Scalar>
DenseGrads<Scalar> dense_backward(const RowMatrix<Scalar>& x, const RowMatrix<Scalar>& w,
                                  const RowMatrix<Scalar>& grad_out, bool need_grad_x = true) {
  if (grad_out.rows() != x.rows() || grad_out.cols() != w.rows()) {
    throw Error(Errc::ShapeMismatch, "dense gradient shape does not match the forward output");
  }
  DenseGrads<Scalar> g;
  g.w.noalias() = grad_out.transpose() * x;
  g.bias = grad_out.colwise().sum().transpose();
  if (need_grad_x) g.x.noalias() = grad_out * w;
  return g;
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss = 0;
  RowMatrix<Scalar> grad;
};

/// Mean softmax cross-entropy over the batch and its gradient (softmax − onehot)/B.
template <typename Scalar>
LossAndGrad<Scalar> softmax_cross_entropy(const RowMatrix<Scalar>& logits, std::span<const int> labels) {
  const Index B = logits.rows();
  const Index N = logits.cols();
  if (static_cast<std::size_t>(B) != labels.size()) throw Error(Errc::ShapeMismatch, "one label per row required");
  LossAndGrad<Scalar> out;
  out.grad.resize(B, N);
  Scalar total = 0;
  for (Index i = 0; i < B; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= N) throw Error(Errc::OutOfRange, "label " + std::to_string(label) + " outside [0, N)");
    const Scalar top = logits.row(i).maxCoeff();
    const auto shifted = (logits.row(i).array() - top).eval();
    const Scalar log_z = std::log(shifted.exp().sum());
    total += log_z - shifted[label];
    out.grad.row(i) = (shifted - log_z).exp().matrix();
    out.grad(i, label) -= Scalar(1);
  }
  out.loss = total / static_cast<Scalar>(B);
  out.grad /= static_cast<Scalar>(B);
  return out;
}

/// C×(B·L) → B×(C·L), feature index c·L + t.
template <typename Scalar>
RowMatrix<Scalar> flatten(const SeqBatch<Scalar>& x) {
  const Index L = x.length;
  RowMatrix<Scalar> out(x.batch, x.channels() * L);
  for (Index b = 0; b < x.batch; ++b) {
    for (Index c = 0; c < x.channels(); ++c) out.row(b).segment(c * L, L) = x.data.row(c).segment(b * L, L);
  }
  return out;
}

template <typename Scalar>
SeqBatch<Scalar> unflatten(const RowMatrix<Scalar>& flat, Index channels, Index length) {
  SeqBatch<Scalar> x(channels, flat.rows(), length);
  for (Index b = 0; b < flat.rows(); ++b) {
    for (Index c = 0; c < channels; ++c) x.data.row(c).segment(b * length, length) = flat.row(b).segment(c * length, length);
  }
  return x;
}

}  // namespace wadapt::nn
