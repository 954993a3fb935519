#pragma once

// Dense storage and the handful of kernels the recurrent network needs.
//
// A SeqBatch holds `steps` x `features` x `batch` values with the batch index
// fastest, so every per-step operation is a set of contiguous multiply-adds
// over the batch. All reductions run in a fixed order; results are bitwise
// reproducible for identical inputs.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "chanest/errors.hpp"

namespace chanest::nn {

template <typename T>
class SeqBatch {
 public:
  SeqBatch() = default;
  SeqBatch(std::size_t steps, std::size_t features, std::size_t batch)
      : steps_(steps), features_(features), batch_(batch), values_(steps * features * batch, T(0)) {}

  std::size_t steps() const noexcept { return steps_; }
  std::size_t features() const noexcept { return features_; }
  std::size_t batch() const noexcept { return batch_; }
  std::size_t step_size() const noexcept { return features_ * batch_; }

  T* step(std::size_t t) noexcept { return values_.data() + t * step_size(); }
  const T* step(std::size_t t) const noexcept { return values_.data() + t * step_size(); }

  T& operator()(std::size_t t, std::size_t f, std::size_t b) noexcept {
    return values_[(t * features_ + f) * batch_ + b];
  }
  T operator()(std::size_t t, std::size_t f, std::size_t b) const noexcept {
    return values_[(t * features_ + f) * batch_ + b];
  }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  friend bool operator==(const SeqBatch&, const SeqBatch&) = default;

 private:
  std::size_t steps_ = 0;
  std::size_t features_ = 0;
  std::size_t batch_ = 0;
  std::vector<T> values_;
};

namespace kernel {

namespace detail {

// Four output rows by `Tile` batch columns held in local accumulators for
// the whole sweep over c.
template <std::size_t Tile, typename T>
void matmul_tile4(const T* w0, std::size_t ld, std::size_t cols, const T* in, T* out, std::size_t batch,
                  std::size_t b0) {
  T o[4][Tile];
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < Tile; ++k) o[r][k] = out[r * batch + b0 + k];
  for (std::size_t c = 0; c < cols; ++c) {
    const T a0 = w0[c], a1 = w0[ld + c], a2 = w0[2 * ld + c], a3 = w0[3 * ld + c];
    const T* x = in + c * batch + b0;
    for (std::size_t k = 0; k < Tile; ++k) {
      o[0][k] += a0 * x[k];
      o[1][k] += a1 * x[k];
      o[2][k] += a2 * x[k];
      o[3][k] += a3 * x[k];
    }
  }
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < Tile; ++k) out[r * batch + b0 + k] = o[r][k];
}

inline constexpr std::size_t lanes = 16;

template <typename T>
T reduce_lanes(const T* acc) {
  T s[8];
  for (std::size_t k = 0; k < 8; ++k) s[k] = acc[k] + acc[k + 8];
  return ((s[0] + s[4]) + (s[1] + s[5])) + ((s[2] + s[6]) + (s[3] + s[7]));
}

}  // namespace detail

/// out[i][b] += sum_c w[i*ld + c] * in[c][b]   (i < rows, c < cols)
///
/// Every output element accumulates its terms in ascending c whatever the
/// batch size or tiling, so results do not depend on how windows are batched.
template <typename T>
void matmul_acc(const T* w, std::size_t ld, std::size_t rows, std::size_t cols, const T* in, T* out,
                std::size_t batch) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const T* w0 = w + i * ld;
    T* o = out + i * batch;
    std::size_t b0 = 0;
    for (; b0 + 32 <= batch; b0 += 32) detail::matmul_tile4<32>(w0, ld, cols, in, o, batch, b0);
    for (; b0 + 8 <= batch; b0 += 8) detail::matmul_tile4<8>(w0, ld, cols, in, o, batch, b0);
    for (; b0 < batch; ++b0) detail::matmul_tile4<1>(w0, ld, cols, in, o, batch, b0);
  }
  for (; i < rows; ++i) {
    T* o = out + i * batch;
    const T* wi = w + i * ld;
    for (std::size_t c = 0; c < cols; ++c) {
      const T a = wi[c];
      const T* x = in + c * batch;
      for (std::size_t b = 0; b < batch; ++b) o[b] += a * x[b];
    }
  }
}

/// out[c][b] += sum_i w[i*ld + c] * in[i][b]
template <typename T>
void matmul_t_acc(const T* w, std::size_t ld, std::size_t rows, std::size_t cols, const T* in, T* out,
                  std::size_t batch) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const T* x0 = in + i * batch;
    const T* x1 = x0 + batch;
    const T* x2 = x1 + batch;
    const T* x3 = x2 + batch;
    const T* w0 = w + i * ld;
    for (std::size_t c = 0; c < cols; ++c) {
      const T a0 = w0[c], a1 = w0[ld + c], a2 = w0[2 * ld + c], a3 = w0[3 * ld + c];
      T* o = out + c * batch;
      for (std::size_t b = 0; b < batch; ++b) o[b] += (a0 * x0[b] + a1 * x1[b]) + (a2 * x2[b] + a3 * x3[b]);
    }
  }
  for (; i < rows; ++i) {
    const T* x = in + i * batch;
    const T* wi = w + i * ld;
    for (std::size_t c = 0; c < cols; ++c) {
      const T a = wi[c];
      T* o = out + c * batch;
      for (std::size_t b = 0; b < batch; ++b) o[b] += a * x[b];
    }
  }
}

template <typename T>
T sum(const T* a, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t k = 0; k < 8; ++k) acc[k] += a[i + k];
  T tail = T(0);
  for (; i < n; ++i) tail += a[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

/// dw[i*ld + c] += sum_b a[i][b] * v[c][b], reduced over the batch with
/// sixteen lane accumulators in a fixed order.
template <typename T>
void outer_acc(T* dw, std::size_t ld, std::size_t rows, std::size_t cols, const T* a, const T* v,
               std::size_t batch) {
  constexpr std::size_t lanes = detail::lanes;
  const std::size_t full = batch - batch % lanes;
  for (std::size_t i = 0; i < rows; ++i) {
    const T* ai = a + i * batch;
    T* row = dw + i * ld;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const T* v0 = v + c * batch;
      const T* v1 = v0 + batch;
      const T* v2 = v1 + batch;
      const T* v3 = v2 + batch;
      T acc0[lanes] = {}, acc1[lanes] = {}, acc2[lanes] = {}, acc3[lanes] = {};
      for (std::size_t b = 0; b < full; b += lanes)
        for (std::size_t k = 0; k < lanes; ++k) {
          const T x = ai[b + k];
          acc0[k] += x * v0[b + k];
          acc1[k] += x * v1[b + k];
          acc2[k] += x * v2[b + k];
          acc3[k] += x * v3[b + k];
        }
      T t0 = T(0), t1 = T(0), t2 = T(0), t3 = T(0);
      for (std::size_t b = full; b < batch; ++b) {
        t0 += ai[b] * v0[b];
        t1 += ai[b] * v1[b];
        t2 += ai[b] * v2[b];
        t3 += ai[b] * v3[b];
      }
      row[c] += detail::reduce_lanes(acc0) + t0;
      row[c + 1] += detail::reduce_lanes(acc1) + t1;
      row[c + 2] += detail::reduce_lanes(acc2) + t2;
      row[c + 3] += detail::reduce_lanes(acc3) + t3;
    }
    for (; c < cols; ++c) {
      const T* vc = v + c * batch;
      T acc[lanes] = {};
      for (std::size_t b = 0; b < full; b += lanes)
        for (std::size_t k = 0; k < lanes; ++k) acc[k] += ai[b + k] * vc[b + k];
      T t = T(0);
      for (std::size_t b = full; b < batch; ++b) t += ai[b] * vc[b];
      row[c] += detail::reduce_lanes(acc) + t;
    }
  }
}

/// db[i] += sum_b a[i][b]
template <typename T>
void bias_acc(T* db, std::size_t rows, const T* a, std::size_t batch) {
  for (std::size_t i = 0; i < rows; ++i) db[i] += sum(a + i * batch, batch);
}

/// out[i][b] = bias[i]
template <typename T>
void broadcast_bias(const T* bias, std::size_t rows, T* out, std::size_t batch) {
  for (std::size_t i = 0; i < rows; ++i) std::fill(out + i * batch, out + (i + 1) * batch, bias[i]);
}

}  // namespace kernel
}  // namespace chanest::nn
