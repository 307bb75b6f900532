#include "wadapt/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "wadapt/error.hpp"

namespace wadapt {
namespace {

constexpr std::size_t kEvalChunk = 512;

int argmax_row(const RowMatrixXd& logits, Index row) {
  Index best = 0;
  for (Index j = 1; j < logits.cols(); ++j) {
    if (logits(row, j) > logits(row, best)) best = j;
  }
  return static_cast<int>(best);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || batch_size < 1 || max_epochs < 1 || patience < 1 || !(min_delta > 0.0)) {
    throw Error(Errc::InvalidArgument, "training config values must be positive");
  }
  if (patience >= max_epochs) throw Error(Errc::InvalidArgument, "patience must be below max_epochs");
}

double History::seconds_per_epoch() const {
  if (epochs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : epochs) total += e.seconds;
  return total / static_cast<double>(epochs.size());
}

void check_compatible(const nn::Architecture& arch, const WindowedDataset& ds) {
  if (arch.features != ds.n_features() || arch.window != ds.window_len || arch.classes != ds.bin_spec.n_bins) {
    throw Error(Errc::ArchMismatch,
                "architecture mismatch: model expects F=" + std::to_string(arch.features) + ", W=" +
                    std::to_string(arch.window) + ", N=" + std::to_string(arch.classes) + " but data '" +
                    ds.domain_tag + "' has F=" + std::to_string(ds.n_features()) + ", W=" +
                    std::to_string(ds.window_len) + ", N=" + std::to_string(ds.bin_spec.n_bins));
  }
}

std::vector<int> predict(const nn::ModelParams& model, const WindowedDataset& ds) {
  check_compatible(model.arch, ds);
  std::vector<int> out;
  out.reserve(ds.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += kEvalChunk) {
    idx.resize(std::min(kEvalChunk, ds.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const RowMatrixXd logits = nn::forward(model, nn::make_batch(ds, idx));
    for (Index r = 0; r < logits.rows(); ++r) out.push_back(argmax_row(logits, r));
  }
  return out;
}

EvalResult evaluate(const nn::ModelParams& model, const WindowedDataset& ds) {
  if (ds.empty()) throw Error(Errc::EmptyDataset, "cannot evaluate on an empty dataset");
  const auto predictions = predict(model, ds);
  EvalResult r;
  const int n = model.arch.classes;
  r.confusion = ConfusionMatrix::Zero(n, n);
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    r.confusion(ds.y(i), predictions[i]) += 1;
    if (ds.y(i) == predictions[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return r;
}

TrainResult fit(nn::ModelParams initial, const WindowedDataset& train, const WindowedDataset& eval,
                const nn::FreezeMask& mask, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || eval.empty()) throw Error(Errc::EmptyDataset, "training needs non-empty train and eval sets");
  check_compatible(initial.arch, train);
  check_compatible(initial.arch, eval);

  using Clock = std::chrono::steady_clock;
  const nn::NormMode bn_mode = mask.bn_stats_frozen ? nn::NormMode::Eval : nn::NormMode::Train;
  nn::AdamState adam;
  adam.lr = cfg.lr;
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 2));

  TrainResult result{initial, {}};
  result.history.initial_eval_accuracy = evaluate(initial, eval).accuracy;
  nn::ModelParams& model = initial;
  double best_accuracy = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> labels;
  nn::ForwardCache cache;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = Clock::now();
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      if (bn_mode == nn::NormMode::Train && count * static_cast<std::size_t>(train.window_len) < 2) continue;
      const std::span<const std::size_t> idx(order.data() + start, count);
      labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) labels[i] = train.y(idx[i]);

      const RowMatrixXd logits = nn::forward(model, nn::make_batch(train, idx), bn_mode, &cache);
      const auto loss = nn::softmax_cross_entropy<double>(logits, labels);
      if (!std::isfinite(loss.loss)) {
        throw Error(Errc::NumericalDivergence, "loss became non-finite in epoch " + std::to_string(epoch));
      }
      const nn::Gradients grads = nn::backward(model, cache, loss.grad, mask);
      nn::adam_step(model, grads, adam, mask);

      loss_sum += loss.loss * static_cast<double>(count);
      seen += count;
      for (std::size_t i = 0; i < count; ++i) {
        if (argmax_row(logits, static_cast<Index>(i)) == labels[i]) ++correct;
      }
    }
    if (seen == 0) throw Error(Errc::EmptyDataset, "no trainable batch in the training set");

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(seen);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    rec.eval_accuracy = evaluate(model, eval).accuracy;
    rec.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    result.history.epochs.push_back(rec);

    if (rec.eval_accuracy > best_accuracy) {
      best_accuracy = rec.eval_accuracy;
      result.model = model;
      result.history.best_epoch = epoch;
    }
    if (rec.loss < best_loss - cfg.min_delta) {
      best_loss = rec.loss;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

TrainResult train_source(const WindowedDataset& train, const WindowedDataset& eval, const nn::Architecture& arch,
                         const TrainConfig& cfg) {
  check_compatible(arch, train);
  return fit(nn::init_params(arch, derive_seed(cfg.seed, 1)), train, eval, nn::FreezeMask::all_trainable(), cfg);
}

int epochs_to_saturation(const History& h, double frac) {
  if (h.epochs.empty()) throw Error(Errc::InvalidArgument, "empty history");
  if (!(frac > 0.0 && frac <= 1.0)) throw Error(Errc::InvalidArgument, "frac must lie in (0, 1]");
  double best = h.epochs.front().eval_accuracy;
  for (const auto& e : h.epochs) best = std::max(best, e.eval_accuracy);
  for (const auto& e : h.epochs) {
    if (e.eval_accuracy >= frac * best) return e.epoch;
  }
  return h.epochs.back().epoch;
}

void write_history_csv(const std::filesystem::path& path, const History& h) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out.precision(17);
  out << "epoch,loss,train_acc,eval_acc,seconds\n";
  for (const auto& e : h.epochs) {
    out << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ',' << e.eval_accuracy << ',' << e.seconds << '\n';
  }
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& confusion) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out << "true\\pred";
  for (Index j = 0; j < confusion.cols(); ++j) out << ',' << j;
  out << '\n';
  for (Index i = 0; i < confusion.rows(); ++i) {
    out << i;
    for (Index j = 0; j < confusion.cols(); ++j) out << ',' << confusion(i, j);
    out << '\n';
  }
}

}  // namespace wadapt
