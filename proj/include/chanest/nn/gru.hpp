#pragma once

// Gated recurrent unit, one direction:
//
//   z_t  = sigmoid(Wz [h_{t-1}, x_t] + bz)
//   r_t  = sigmoid(Wr [h_{t-1}, x_t] + br)
//   c_t  = tanh(Wc [r_t * h_{t-1}, x_t] + bc)
//   h_t  = (1 - z_t) * h_{t-1} + z_t * c_t
//
// Step kernels operate on a batch of B independent sequences; every vector
// argument is a hidden-or-input x B block with the batch index fastest.

#include <cmath>
#include <span>
#include <vector>

#include "chanest/nn/params.hpp"
#include "chanest/nn/tensor.hpp"

namespace chanest::nn {

template <typename T>
T sigmoid(T a) {
  return T(1) / (T(1) + std::exp(-a));
}

/// Forward step. Writes z, r, c, rh (= r * h_prev) and h; all H x B.
template <typename T>
void gru_step_forward(GruView<const T> p, std::size_t batch, const T* x, const T* h_prev, T* z, T* r, T* c,
                      T* rh, T* h) {
  const std::size_t hidden = p.hidden_size;
  const std::size_t input = p.input_size;
  const std::size_t ld = p.cols();
  const std::size_t n = hidden * batch;

  kernel::broadcast_bias(p.bz.data(), hidden, z, batch);
  kernel::broadcast_bias(p.br.data(), hidden, r, batch);
  kernel::matmul_acc(p.wz.data(), ld, hidden, hidden, h_prev, z, batch);
  kernel::matmul_acc(p.wz.data() + hidden, ld, hidden, input, x, z, batch);
  kernel::matmul_acc(p.wr.data(), ld, hidden, hidden, h_prev, r, batch);
  kernel::matmul_acc(p.wr.data() + hidden, ld, hidden, input, x, r, batch);
  for (std::size_t k = 0; k < n; ++k) {
    z[k] = sigmoid(z[k]);
    r[k] = sigmoid(r[k]);
    rh[k] = r[k] * h_prev[k];
  }
  kernel::broadcast_bias(p.bc.data(), hidden, c, batch);
  kernel::matmul_acc(p.wc.data(), ld, hidden, hidden, rh, c, batch);
  kernel::matmul_acc(p.wc.data() + hidden, ld, hidden, input, x, c, batch);
  for (std::size_t k = 0; k < n; ++k) {
    c[k] = std::tanh(c[k]);
    h[k] = (T(1) - z[k]) * h_prev[k] + z[k] * c[k];
  }
}

/// Scratch buffers for gru_step_backward, each H x B.
template <typename T>
struct GruBackwardScratch {
  std::vector<T> a_c, a_z, a_r, d_rh;

  void resize(std::size_t n) {
    a_c.resize(n);
    a_z.resize(n);
    a_r.resize(n);
    d_rh.resize(n);
  }
};

/// Reverse-mode step. `dh` is dLoss/dh_t; writes dLoss/dh_{t-1} into
/// `dh_prev`, accumulates dLoss/dx_t into `dx` (may be null) and parameter
/// gradients into `g`.
template <typename T>
void gru_step_backward(GruView<const T> p, std::size_t batch, const T* x, const T* h_prev, const T* z,
                       const T* r, const T* c, const T* rh, const T* dh, T* dx, T* dh_prev, GruView<T> g,
                       GruBackwardScratch<T>& s) {
  const std::size_t hidden = p.hidden_size;
  const std::size_t input = p.input_size;
  const std::size_t ld = p.cols();
  const std::size_t n = hidden * batch;
  s.resize(n);
  T* a_c = s.a_c.data();
  T* a_z = s.a_z.data();
  T* a_r = s.a_r.data();
  T* d_rh = s.d_rh.data();

  for (std::size_t k = 0; k < n; ++k) {
    const T dc = dh[k] * z[k];
    const T dz = dh[k] * (c[k] - h_prev[k]);
    dh_prev[k] = dh[k] * (T(1) - z[k]);
    a_c[k] = dc * (T(1) - c[k] * c[k]);
    a_z[k] = dz * z[k] * (T(1) - z[k]);
    d_rh[k] = T(0);
  }

  // Candidate path: a_c -> [r*h_prev, x].
  kernel::outer_acc(g.wc.data(), ld, hidden, hidden, a_c, rh, batch);
  kernel::outer_acc(g.wc.data() + hidden, ld, hidden, input, a_c, x, batch);
  kernel::bias_acc(g.bc.data(), hidden, a_c, batch);
  kernel::matmul_t_acc(p.wc.data(), ld, hidden, hidden, a_c, d_rh, batch);
  if (dx) kernel::matmul_t_acc(p.wc.data() + hidden, ld, hidden, input, a_c, dx, batch);

  for (std::size_t k = 0; k < n; ++k) {
    const T dr = d_rh[k] * h_prev[k];
    dh_prev[k] += d_rh[k] * r[k];
    a_r[k] = dr * r[k] * (T(1) - r[k]);
  }

  // Gate paths: a_z, a_r -> [h_prev, x].
  kernel::outer_acc(g.wz.data(), ld, hidden, hidden, a_z, h_prev, batch);
  kernel::outer_acc(g.wz.data() + hidden, ld, hidden, input, a_z, x, batch);
  kernel::bias_acc(g.bz.data(), hidden, a_z, batch);
  kernel::outer_acc(g.wr.data(), ld, hidden, hidden, a_r, h_prev, batch);
  kernel::outer_acc(g.wr.data() + hidden, ld, hidden, input, a_r, x, batch);
  kernel::bias_acc(g.br.data(), hidden, a_r, batch);

  kernel::matmul_t_acc(p.wz.data(), ld, hidden, hidden, a_z, dh_prev, batch);
  kernel::matmul_t_acc(p.wr.data(), ld, hidden, hidden, a_r, dh_prev, batch);
  if (dx) {
    kernel::matmul_t_acc(p.wz.data() + hidden, ld, hidden, input, a_z, dx, batch);
    kernel::matmul_t_acc(p.wr.data() + hidden, ld, hidden, input, a_r, dx, batch);
  }
}

/// Everything one cell evaluation produces, batch size B.
template <typename T>
struct GruCellCache {
  std::size_t batch = 1;
  std::vector<T> x, h_prev, z, r, c, rh, h;
};

template <typename T>
GruCellCache<T> gru_cell_forward(GruView<const T> p, std::span<const T> x, std::span<const T> h_prev,
                                 std::size_t batch = 1) {
  if (x.size() != p.input_size * batch || h_prev.size() != p.hidden_size * batch)
    throw ArgumentError("gru_cell_forward: input or state shape does not match parameters");
  const std::size_t n = p.hidden_size * batch;
  GruCellCache<T> cache{batch, {x.begin(), x.end()}, {h_prev.begin(), h_prev.end()},
                        std::vector<T>(n), std::vector<T>(n), std::vector<T>(n), std::vector<T>(n),
                        std::vector<T>(n)};
  gru_step_forward(p, batch, cache.x.data(), cache.h_prev.data(), cache.z.data(), cache.r.data(),
                   cache.c.data(), cache.rh.data(), cache.h.data());
  return cache;
}

template <typename T>
struct GruCellGradients {
  std::vector<T> dx;
  std::vector<T> dh_prev;
};

/// Parameter gradients are accumulated into `grads`.
template <typename T>
GruCellGradients<T> gru_cell_backward(GruView<const T> p, const GruCellCache<T>& cache, std::span<const T> dh,
                                      GruView<T> grads) {
  const std::size_t n = p.hidden_size * cache.batch;
  if (dh.size() != n || cache.h.size() != n || cache.x.size() != p.input_size * cache.batch)
    throw ArgumentError("gru_cell_backward: gradient or cache shape does not match parameters");
  if (grads.hidden_size != p.hidden_size || grads.input_size != p.input_size)
    throw ArgumentError("gru_cell_backward: gradient buffer shape mismatch");
  GruCellGradients<T> out{std::vector<T>(p.input_size * cache.batch, T(0)), std::vector<T>(n)};
  GruBackwardScratch<T> scratch;
  gru_step_backward(p, cache.batch, cache.x.data(), cache.h_prev.data(), cache.z.data(), cache.r.data(),
                    cache.c.data(), cache.rh.data(), dh.data(), out.dx.data(), out.dh_prev.data(), grads,
                    scratch);
  return out;
}

/// Per-step intermediates of one direction over a window; all steps x H x B.
/// h(t) is the state produced at time index t regardless of direction.
template <typename T>
struct GruDirectionCache {
  SeqBatch<T> z, r, c, rh, h;
};

/// Runs one direction over `input` (steps x I x B) from a zero state. The
/// backward direction visits t = T-1 .. 0.
template <typename T>
void gru_direction_forward(GruView<const T> p, const SeqBatch<T>& input, Direction dir, GruDirectionCache<T>& cache) {
  const std::size_t steps = input.steps();
  const std::size_t batch = input.batch();
  const std::size_t hidden = p.hidden_size;
  if (input.features() != p.input_size) throw ArgumentError("gru direction: input width mismatch");
  for (SeqBatch<T>* m : {&cache.z, &cache.r, &cache.c, &cache.rh, &cache.h}) *m = SeqBatch<T>(steps, hidden, batch);
  const std::vector<T> zeros(hidden * batch, T(0));
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = dir == Direction::forward ? k : steps - 1 - k;
    const T* h_prev = k == 0 ? zeros.data() : cache.h.step(dir == Direction::forward ? t - 1 : t + 1);
    gru_step_forward(p, batch, input.step(t), h_prev, cache.z.step(t), cache.r.step(t), cache.c.step(t),
                     cache.rh.step(t), cache.h.step(t));
  }
}

/// Backpropagation through time for one direction. `d_out` holds dLoss/dh(t)
/// in rows [row_offset, row_offset + H) of each step; input gradients are
/// accumulated into `d_input` when non-null.
template <typename T>
void gru_direction_backward(GruView<const T> p, const SeqBatch<T>& input, Direction dir,
                            const GruDirectionCache<T>& cache, const SeqBatch<T>& d_out, std::size_t row_offset,
                            SeqBatch<T>* d_input, GruView<T> grads) {
  const std::size_t steps = input.steps();
  const std::size_t batch = input.batch();
  const std::size_t n = p.hidden_size * batch;
  const std::vector<T> zeros(n, T(0));
  std::vector<T> carry(n, T(0));  // dLoss/dh from the step processed after this one
  std::vector<T> dh(n);
  std::vector<T> dh_prev(n);
  GruBackwardScratch<T> scratch;
  for (std::size_t k = steps; k-- > 0;) {
    const std::size_t t = dir == Direction::forward ? k : steps - 1 - k;
    const T* upstream = d_out.step(t) + row_offset * batch;
    for (std::size_t i = 0; i < n; ++i) dh[i] = upstream[i] + carry[i];
    const T* h_prev = k == 0 ? zeros.data() : cache.h.step(dir == Direction::forward ? t - 1 : t + 1);
    gru_step_backward(p, batch, input.step(t), h_prev, cache.z.step(t), cache.r.step(t), cache.c.step(t),
                      cache.rh.step(t), dh.data(), d_input ? d_input->step(t) : nullptr, dh_prev.data(), grads,
                      scratch);
    carry.swap(dh_prev);
  }
}

}  // namespace chanest::nn
