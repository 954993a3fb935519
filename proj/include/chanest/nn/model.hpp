#pragma once

// Stacked bidirectional GRU followed by a per-step linear head. Layer l
// consumes the concatenated [forward, backward] states of layer l-1; the
// head maps the last layer's 2H-wide state to (re h, im h).

#include <cmath>
#include <complex>
#include <span>
#include <type_traits>
#include <vector>

#include "chanest/nn/gru.hpp"
#include "chanest/nn/params.hpp"
#include "chanest/nn/tensor.hpp"

namespace chanest::nn {

template <typename T>
struct LayerCache {
  GruDirectionCache<T> fwd, bwd;
};

template <typename T>
struct ForwardPass {
  /// activations[0] is the input; activations[l + 1] is layer l's output
  /// (steps x 2H x B).
  std::vector<SeqBatch<T>> activations;
  std::vector<LayerCache<T>> layers;
  SeqBatch<T> prediction;  // steps x output x B

  const SeqBatch<T>& top() const { return activations.back(); }
};

/// out[t][k][b] = b_k + sum_c W[k][c] states[t][c][b]
template <typename T>
SeqBatch<T> linear_head(const SeqBatch<T>& states, HeadView<const std::type_identity_t<T>> head) {
  if (states.features() != head.input_size) throw ArgumentError("linear_head: state width != head input");
  SeqBatch<T> out(states.steps(), head.output_size, states.batch());
  for (std::size_t t = 0; t < states.steps(); ++t) {
    kernel::broadcast_bias(head.b.data(), head.output_size, out.step(t), states.batch());
    kernel::matmul_acc(head.w.data(), head.input_size, head.output_size, head.input_size, states.step(t),
                       out.step(t), states.batch());
  }
  return out;
}

/// Runs all BGRU layers (no head). Each direction starts from a zero state.
template <typename T>
ForwardPass<T> bgru_forward(const ModelParams<T>& params, SeqBatch<T> input) {
  const ModelShape& shape = params.shape();
  if (input.features() != shape.input_size) throw ArgumentError("bgru_forward: input width mismatch");
  if (input.steps() == 0 || input.batch() == 0) throw ArgumentError("bgru_forward: empty input");
  const std::size_t steps = input.steps();
  const std::size_t batch = input.batch();
  const std::size_t hidden = shape.hidden_size;

  ForwardPass<T> pass;
  pass.activations.reserve(shape.layers + 1);
  pass.activations.push_back(std::move(input));
  pass.layers.resize(shape.layers);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    auto& cache = pass.layers[l];
    const SeqBatch<T>& in = pass.activations[l];
    gru_direction_forward(params.gru(l, Direction::forward), in, Direction::forward, cache.fwd);
    gru_direction_forward(params.gru(l, Direction::backward), in, Direction::backward, cache.bwd);
    SeqBatch<T> out(steps, 2 * hidden, batch);
    const std::size_t block = hidden * batch;
    for (std::size_t t = 0; t < steps; ++t) {
      std::copy_n(cache.fwd.h.step(t), block, out.step(t));
      std::copy_n(cache.bwd.h.step(t), block, out.step(t) + block);
    }
    pass.activations.push_back(std::move(out));
  }
  return pass;
}

/// BGRU layers followed by the linear head.
template <typename T>
ForwardPass<T> model_forward(const ModelParams<T>& params, SeqBatch<T> input) {
  ForwardPass<T> pass = bgru_forward(params, std::move(input));
  pass.prediction = linear_head(pass.top(), params.head());
  return pass;
}

/// Accumulates dLoss/dtheta into `grads` given dLoss/dprediction. Returns
/// dLoss/dinput.
template <typename T>
SeqBatch<T> model_backward(const ModelParams<T>& params, const ForwardPass<T>& pass, const SeqBatch<T>& d_pred,
                           ModelParams<T>& grads) {
  const ModelShape& shape = params.shape();
  if (!(grads.shape() == shape)) throw ArgumentError("model_backward: gradient buffer shape mismatch");
  const SeqBatch<T>& top = pass.top();
  const std::size_t steps = top.steps();
  const std::size_t batch = top.batch();
  if (d_pred.steps() != steps || d_pred.batch() != batch || d_pred.features() != shape.output_size)
    throw ArgumentError("model_backward: prediction gradient shape mismatch");

  auto head = params.head();
  auto g_head = grads.head();
  SeqBatch<T> d_state(steps, top.features(), batch);
  for (std::size_t t = 0; t < steps; ++t) {
    kernel::outer_acc(g_head.w.data(), head.input_size, head.output_size, head.input_size, d_pred.step(t),
                      top.step(t), batch);
    kernel::bias_acc(g_head.b.data(), head.output_size, d_pred.step(t), batch);
    kernel::matmul_t_acc(head.w.data(), head.input_size, head.output_size, head.input_size, d_pred.step(t),
                         d_state.step(t), batch);
  }

  for (std::size_t l = shape.layers; l-- > 0;) {
    const SeqBatch<T>& in = pass.activations[l];
    SeqBatch<T> d_in(steps, in.features(), batch);
    gru_direction_backward(params.gru(l, Direction::forward), in, Direction::forward, pass.layers[l].fwd, d_state, 0,
                           &d_in, grads.gru(l, Direction::forward));
    gru_direction_backward(params.gru(l, Direction::backward), in, Direction::backward, pass.layers[l].bwd, d_state,
                           shape.hidden_size, &d_in, grads.gru(l, Direction::backward));
    d_state = std::move(d_in);
  }
  return d_state;
}

/// Truth laid out like a prediction: steps x 2 x B with rows (re, im).
template <typename T>
SeqBatch<T> truth_batch(std::span<const std::complex<double>> truth) {
  SeqBatch<T> out(truth.size(), 2, 1);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    out(t, 0, 0) = static_cast<T>(truth[t].real());
    out(t, 1, 0) = static_cast<T>(truth[t].imag());
  }
  return out;
}

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  SeqBatch<T> grad;
};

/// loss = 1/(B*T) sum_b sum_t |pred - truth|^2 (each window weighted
/// equally), grad = 2/(B*T) (pred - truth).
template <typename T>
LossAndGrad<T> mse_loss_and_grad(const SeqBatch<T>& pred, const SeqBatch<T>& truth) {
  if (pred.steps() != truth.steps() || pred.features() != truth.features() || pred.batch() != truth.batch())
    throw ArgumentError("mse_loss_and_grad: prediction and truth shapes differ");
  if (pred.features() != 2) throw ArgumentError("mse_loss_and_grad: expected (re, im) rows");
  const double scale = 1.0 / static_cast<double>(pred.steps() * pred.batch());
  LossAndGrad<T> out{0.0, SeqBatch<T>(pred.steps(), pred.features(), pred.batch())};
  auto p = pred.values();
  auto y = truth.values();
  auto g = out.grad.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T diff = p[i] - y[i];
    acc += static_cast<double>(diff) * static_cast<double>(diff);
    g[i] = static_cast<T>(2.0 * scale) * diff;
  }
  out.loss = acc * scale;
  return out;
}

/// Complex estimate from a single-sequence prediction (steps x 2 x 1).
template <typename T>
std::vector<std::complex<double>> to_complex(const SeqBatch<T>& pred, std::size_t b = 0) {
  std::vector<std::complex<double>> out(pred.steps());
  for (std::size_t t = 0; t < pred.steps(); ++t)
    out[t] = {static_cast<double>(pred(t, 0, b)), static_cast<double>(pred(t, 1, b))};
  return out;
}

}  // namespace chanest::nn
