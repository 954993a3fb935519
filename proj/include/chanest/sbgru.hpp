#pragma once

// Sliding bidirectional GRU estimator. A length-W window slides one symbol at
// a time over the L-symbol sequence; the estimate at position t is the mean
// of the per-window outputs at t over every window that covers t. Only
// windows that fit entirely inside the sequence are scheduled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chanest/channel.hpp"
#include "chanest/dataset_io.hpp"
#include "chanest/framing.hpp"
#include "chanest/nn/adam.hpp"
#include "chanest/nn/model.hpp"
#include "chanest/nn/params.hpp"

namespace chanest {

struct SlidingConfig {
  std::size_t window_length = 40;
  std::size_t stride = 1;
  std::size_t sequence_length = 160;

  void validate() const {
    if (stride != 1) throw ArgumentError("sliding: only stride 1 is supported");
    if (window_length < 1) throw ArgumentError("sliding: window length must be at least 1");
    if (window_length > sequence_length)
      throw ArgumentError("sliding: window length " + std::to_string(window_length) + " exceeds sequence length " +
                          std::to_string(sequence_length));
  }

  std::size_t window_count() const noexcept { return sequence_length - window_length + 1; }
};

/// {j : max(0, t-W+1) <= j <= min(t, L-W)}, ascending.
inline std::vector<std::size_t> window_starts(std::size_t t, const SlidingConfig& cfg) {
  cfg.validate();
  if (t >= cfg.sequence_length)
    throw ArgumentError("window_starts: position " + std::to_string(t) + " outside sequence of length " +
                        std::to_string(cfg.sequence_length));
  const std::size_t first = t + 1 >= cfg.window_length ? t + 1 - cfg.window_length : 0;
  const std::size_t last = std::min(t, cfg.sequence_length - cfg.window_length);
  std::vector<std::size_t> out;
  for (std::size_t j = first; j <= last; ++j) out.push_back(j);
  return out;
}

/// Windows of x starting at `starts`, each `length` long, as one batch.
template <typename T>
nn::SeqBatch<T> window_batch(const FeatureMatrix& x, std::span<const std::size_t> starts, std::size_t length) {
  nn::SeqBatch<T> out(length, FeatureMatrix::rows, starts.size());
  for (std::size_t b = 0; b < starts.size(); ++b) {
    if (starts[b] + length > x.length()) throw ArgumentError("window_batch: window runs past the sequence end");
    for (std::size_t f = 0; f < FeatureMatrix::rows; ++f) {
      const auto row = x.row(f);
      for (std::size_t t = 0; t < length; ++t) out(t, f, b) = static_cast<T>(row[starts[b] + t]);
    }
  }
  return out;
}

/// Largest number of windows pushed through the network at once.
inline constexpr std::size_t inference_batch = 128;

template <typename T>
ComplexSeq sliding_estimate(const FeatureMatrix& x, const nn::ModelParams<T>& model, std::size_t window_length) {
  const SlidingConfig cfg{window_length, 1, x.length()};
  cfg.validate();
  const std::size_t count = cfg.window_count();
  std::vector<double> sum_re(x.length(), 0.0), sum_im(x.length(), 0.0);
  std::vector<std::size_t> starts;
  for (std::size_t begin = 0; begin < count; begin += inference_batch) {
    const std::size_t end = std::min(count, begin + inference_batch);
    starts.resize(end - begin);
    for (std::size_t j = begin; j < end; ++j) starts[j - begin] = j;
    const auto pass = nn::model_forward(model, window_batch<T>(x, starts, window_length));
    // Windows are added in ascending start order, independent of chunking.
    for (std::size_t b = 0; b < starts.size(); ++b)
      for (std::size_t t = 0; t < window_length; ++t) {
        sum_re[starts[b] + t] += static_cast<double>(pass.prediction(t, 0, b));
        sum_im[starts[b] + t] += static_cast<double>(pass.prediction(t, 1, b));
      }
  }
  ComplexSeq out(x.length());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const std::size_t first = t + 1 >= window_length ? t + 1 - window_length : 0;
    const std::size_t last = std::min(t, count - 1);
    const auto covering = static_cast<double>(last - first + 1);
    out[t] = {sum_re[t] / covering, sum_im[t] / covering};
  }
  return out;
}

template <typename T>
ComplexSeq sliding_estimate(const FeatureMatrix& x, const nn::ModelParams<T>& model, const SlidingConfig& cfg) {
  if (cfg.sequence_length != x.length()) throw ArgumentError("sliding_estimate: feature length != configured L");
  return sliding_estimate(x, model, cfg.window_length);
}

/// Disjoint length-`block` segments, each run through the network on its own.
template <typename T>
ComplexSeq block_estimate(const FeatureMatrix& x, const nn::ModelParams<T>& model, std::size_t block) {
  if (block == 0 || x.length() % block != 0)
    throw ArgumentError("block_estimate: block length " + std::to_string(block) + " does not divide " +
                        std::to_string(x.length()));
  const std::size_t count = x.length() / block;
  ComplexSeq out(x.length());
  std::vector<std::size_t> starts;
  for (std::size_t begin = 0; begin < count; begin += inference_batch) {
    const std::size_t end = std::min(count, begin + inference_batch);
    starts.resize(end - begin);
    for (std::size_t k = begin; k < end; ++k) starts[k - begin] = k * block;
    const auto pass = nn::model_forward(model, window_batch<T>(x, starts, block));
    for (std::size_t b = 0; b < starts.size(); ++b)
      for (std::size_t t = 0; t < block; ++t)
        out[starts[b] + t] = {static_cast<double>(pass.prediction(t, 0, b)),
                              static_cast<double>(pass.prediction(t, 1, b))};
  }
  return out;
}

/// Sequences from a dataset file paired with the channel pool they index.
struct SequenceSet {
  DatasetFile data;
  std::vector<ComplexSeq> channels;

  std::size_t size() const noexcept { return data.sequences.size(); }
  std::size_t length() const noexcept { return data.layout.total_length(); }

  const ComplexSeq& truth(std::size_t i) const { return channels.at(data.sequences.at(i).channel_index); }

  void validate() const {
    const std::size_t length = data.layout.total_length();
    for (const auto& c : channels)
      if (c.size() != length) throw DataError("sequence set: channel length differs from frame length");
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
      const auto& s = data.sequences[i];
      if (s.channel_index >= channels.size())
        throw DataError("sequence set: record " + std::to_string(i) + " references channel " +
                        std::to_string(s.channel_index) + " of " + std::to_string(channels.size()));
      if (s.symbols.size() != length || s.pilot_ref.size() != length)
        throw DataError("sequence set: record " + std::to_string(i) + " has the wrong length");
    }
  }
};

/// Features of y = h x + w for sequence i of `set`, noise drawn from `rng`.
inline void noisy_window(const SequenceSet& set, std::size_t i, std::size_t start, std::size_t length, double sigma,
                         Rng& rng, nn::SeqBatch<float>& input, nn::SeqBatch<float>& truth, std::size_t b) {
  const auto& rec = set.data.sequences[i];
  const auto& h = set.truth(i);
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t n = start + t;
    const double re = rng.normal();
    const double im = rng.normal();
    const cplx y = h[n] * rec.symbols[n] + cplx{sigma * re, sigma * im};
    input(t, 0, b) = static_cast<float>(y.real());
    input(t, 1, b) = static_cast<float>(rec.pilot_ref[n].real());
    input(t, 2, b) = static_cast<float>(y.imag());
    input(t, 3, b) = static_cast<float>(rec.pilot_ref[n].imag());
    truth(t, 0, b) = static_cast<float>(h[n].real());
    truth(t, 1, b) = static_cast<float>(h[n].imag());
  }
}

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  double train_snr_db = 20.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  /// Random windows drawn from each training sequence per epoch.
  std::size_t windows_per_sequence = 1;
  std::size_t hidden_size = 40;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("train: learning rate must be > 0");
    if (batch_size == 0) throw ArgumentError("train: batch size must be >= 1");
    if (windows_per_sequence == 0) throw ArgumentError("train: windows per sequence must be >= 1");
    if (hidden_size == 0) throw ArgumentError("train: hidden size must be >= 1");
    if (std::isnan(train_snr_db)) throw ArgumentError("train: SNR is NaN");
  }
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  nn::ModelParams<float> model;  // parameters with the lowest validation loss
  std::vector<TrainLogRow> log;  // row 0 is the initial model
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

namespace detail {

// Mean window loss of `model` over fixed windows (one per sequence) with
// fixed noise; forward only.
inline double fixed_window_loss(const nn::ModelParams<float>& model, const SequenceSet& set,
                                std::size_t window_length, double sigma, std::uint64_t seed, Stream start_tag,
                                Stream noise_tag, std::size_t batch_size) {
  const std::size_t starts_available = set.length() - window_length + 1;
  double total = 0.0;
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    const std::size_t end = std::min(set.size(), begin + batch_size);
    nn::SeqBatch<float> input(window_length, FeatureMatrix::rows, end - begin);
    nn::SeqBatch<float> truth(window_length, 2, end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t start = Rng::stream(seed, start_tag, i).below(starts_available);
      Rng noise = Rng::stream(seed, noise_tag, i);
      noisy_window(set, i, start, window_length, sigma, noise, input, truth, i - begin);
    }
    const auto pass = nn::model_forward(model, std::move(input));
    total += nn::mse_loss_and_grad(pass.prediction, truth).loss * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(set.size());
}

}  // namespace detail

/// Mini-batch Adam on single random windows with fresh noise every epoch.
/// Deterministic in (data, configs). `on_epoch` (optional) sees each log row
/// as soon as it is complete.
inline TrainResult train(const SequenceSet& train_set, const SequenceSet& val_set, const TrainConfig& cfg,
                         std::size_t window_length,
                         const std::function<void(const TrainLogRow&)>& on_epoch = {}) {
  cfg.validate();
  train_set.validate();
  val_set.validate();
  if (train_set.size() == 0) throw ArgumentError("train: empty training set");
  if (val_set.size() == 0) throw ArgumentError("train: empty validation set");
  if (!(train_set.data.layout == val_set.data.layout)) throw ArgumentError("train: train/val layouts differ");
  SlidingConfig{window_length, 1, train_set.length()}.validate();

  const nn::ModelShape shape{FeatureMatrix::rows, cfg.hidden_size, 2, 2};
  const double sigma = std::sqrt(NoiseSpec::from_snr_db(cfg.train_snr_db).noise_variance / 2.0);
  const std::size_t starts_available = train_set.length() - window_length + 1;

  nn::ModelParams<float> model = nn::init_params<float>(shape, cfg.seed);
  nn::AdamState<float> adam(shape, {cfg.learning_rate, 0.9, 0.999, 1e-8});
  nn::ModelParams<float> grads(shape);

  auto validation = [&] {
    return detail::fixed_window_loss(model, val_set, window_length, sigma, cfg.seed, Stream::val_start,
                                     Stream::val_noise, cfg.batch_size);
  };

  TrainResult result;
  {
    TrainLogRow row{0,
                    detail::fixed_window_loss(model, train_set, window_length, sigma, cfg.seed, Stream::window_start,
                                              Stream::train_noise, cfg.batch_size),
                    validation()};
    result.log.push_back(row);
    result.model = model;
    result.best_val_loss = row.val_loss;
    if (on_epoch) on_epoch(row);
  }

  const std::size_t items = train_set.size() * cfg.windows_per_sequence;
  std::vector<std::uint32_t> order(items);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t k = 0; k < items; ++k) order[k] = static_cast<std::uint32_t>(k);
    Rng::stream(cfg.seed, Stream::shuffle, epoch).shuffle(order);
    Rng starts = Rng::stream(cfg.seed, Stream::window_start, epoch);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < items; begin += cfg.batch_size) {
      const std::size_t end = std::min(items, begin + cfg.batch_size);
      const std::size_t batch = end - begin;
      nn::SeqBatch<float> input(window_length, FeatureMatrix::rows, batch);
      nn::SeqBatch<float> truth(window_length, 2, batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t item = order[begin + b];
        const std::size_t seq = item % train_set.size();
        const std::size_t start = starts.below(starts_available);
        Rng noise = Rng::stream(cfg.seed, Stream::train_noise, epoch, item);
        noisy_window(train_set, seq, start, window_length, sigma, noise, input, truth, b);
      }
      const auto pass = nn::model_forward(model, std::move(input));
      const auto lg = nn::mse_loss_and_grad(pass.prediction, truth);
      if (!std::isfinite(lg.loss))
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at item " +
                             std::to_string(begin));
      grads.fill(0.0f);
      nn::model_backward(model, pass, lg.grad, grads);
      nn::adam_step(model, grads, adam);
      epoch_loss += lg.loss * static_cast<double>(batch);
    }

    TrainLogRow row{epoch, epoch_loss / static_cast<double>(items), validation()};
    if (!std::isfinite(row.val_loss))
      throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    result.log.push_back(row);
    if (row.val_loss < result.best_val_loss) {
      result.best_val_loss = row.val_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (on_epoch) on_epoch(row);
  }
  return result;
}

}  // namespace chanest
