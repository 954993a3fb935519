#pragma once

// Parameter storage for the stacked bidirectional GRU + linear head.
//
// All tensors live in one flat buffer so the optimizer, gradient buffers and
// checkpoints can treat the model as a single vector. Tensor order (also the
// checkpoint order): for each layer, for forward then backward direction:
// Wz, Wr, Wc, bz, br, bc; then head W, head b.
//
// Gate matrices are hidden x (hidden + input), row-major, with columns laid
// out as [h_{t-1}, x_t].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chanest/errors.hpp"
#include "chanest/rng.hpp"

namespace chanest::nn {

enum class Direction : std::size_t { forward = 0, backward = 1 };

struct ModelShape {
  std::size_t input_size = 4;
  std::size_t hidden_size = 40;
  std::size_t layers = 2;
  std::size_t output_size = 2;

  std::size_t layer_input(std::size_t layer) const noexcept {
    return layer == 0 ? input_size : 2 * hidden_size;
  }

  /// Per direction: 3 H (H + I) weights + 3 H biases; head: O * 2H + O.
  std::size_t parameter_count() const noexcept {
    std::size_t total = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t i = layer_input(l);
      total += 2 * (3 * hidden_size * (hidden_size + i) + 3 * hidden_size);
    }
    return total + output_size * 2 * hidden_size + output_size;
  }

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// One direction of one GRU layer.
template <typename T>
struct GruView {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::span<T> wz, wr, wc;
  std::span<T> bz, br, bc;

  std::size_t cols() const noexcept { return hidden_size + input_size; }

  operator GruView<const T>() const { return {input_size, hidden_size, wz, wr, wc, bz, br, bc}; }
};

template <typename T>
struct HeadView {
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  std::span<T> w;  // output x input
  std::span<T> b;

  operator HeadView<const T>() const { return {input_size, output_size, w, b}; }
};

/// Owning single-direction GRU weights, for standalone cell use.
template <typename T>
struct GruWeights {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<T> wz, wr, wc, bz, br, bc;

  GruWeights() = default;
  GruWeights(std::size_t input, std::size_t hidden)
      : input_size(input), hidden_size(hidden),
        wz(hidden * (hidden + input)), wr(wz.size()), wc(wz.size()),
        bz(hidden), br(hidden), bc(hidden) {}

  GruView<T> view() { return {input_size, hidden_size, wz, wr, wc, bz, br, bc}; }
  GruView<const T> view() const { return {input_size, hidden_size, wz, wr, wc, bz, br, bc}; }
};

struct TensorInfo {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::size_t offset = 0;
  std::size_t size = 0;
};

template <typename T>
class ModelParams {
 public:
  ModelParams() = default;

  explicit ModelParams(ModelShape shape) : shape_(shape) {
    if (shape.input_size == 0 || shape.hidden_size == 0 || shape.layers == 0 || shape.output_size == 0)
      throw ArgumentError("model shape: all sizes must be positive");
    std::size_t offset = 0;
    auto add = [&](std::string name, std::vector<std::uint32_t> dims) {
      std::size_t size = 1;
      for (auto d : dims) size *= d;
      tensors_.push_back({std::move(name), std::move(dims), offset, size});
      offset += size;
    };
    const auto h = static_cast<std::uint32_t>(shape.hidden_size);
    for (std::size_t l = 0; l < shape.layers; ++l) {
      const auto cols = static_cast<std::uint32_t>(shape.hidden_size + shape.layer_input(l));
      for (const char* dir : {"fwd", "bwd"}) {
        const std::string prefix = "gru" + std::to_string(l) + "." + dir + ".";
        add(prefix + "wz", {h, cols});
        add(prefix + "wr", {h, cols});
        add(prefix + "wc", {h, cols});
        add(prefix + "bz", {h});
        add(prefix + "br", {h});
        add(prefix + "bc", {h});
      }
    }
    add("head.w", {static_cast<std::uint32_t>(shape.output_size), 2 * h});
    add("head.b", {static_cast<std::uint32_t>(shape.output_size)});
    values_.assign(offset, T(0));
  }

  const ModelShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  std::size_t tensor_count() const noexcept { return tensors_.size(); }
  const TensorInfo& tensor(std::size_t i) const { return tensors_.at(i); }
  std::span<T> tensor_values(std::size_t i) {
    const auto& t = tensors_.at(i);
    return {values_.data() + t.offset, t.size};
  }
  std::span<const T> tensor_values(std::size_t i) const {
    const auto& t = tensors_.at(i);
    return {values_.data() + t.offset, t.size};
  }

  GruView<T> gru(std::size_t layer, Direction dir) { return gru_view<T>(*this, layer, dir); }
  GruView<const T> gru(std::size_t layer, Direction dir) const { return gru_view<const T>(*this, layer, dir); }

  HeadView<T> head() { return head_view<T>(*this); }
  HeadView<const T> head() const { return head_view<const T>(*this); }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out(shape_);
    auto dst = out.values();
    for (std::size_t i = 0; i < values_.size(); ++i) dst[i] = static_cast<U>(values_[i]);
    return out;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  template <typename V, typename Self>
  static GruView<V> gru_view(Self& self, std::size_t layer, Direction dir) {
    if (layer >= self.shape_.layers) throw ArgumentError("model: layer index out of range");
    const std::size_t base = (layer * 2 + static_cast<std::size_t>(dir)) * 6;
    auto span_of = [&](std::size_t k) {
      const auto& t = self.tensors_[base + k];
      return std::span<V>(self.values_.data() + t.offset, t.size);
    };
    return {self.shape_.layer_input(layer), self.shape_.hidden_size, span_of(0), span_of(1), span_of(2),
            span_of(3), span_of(4), span_of(5)};
  }

  template <typename V, typename Self>
  static HeadView<V> head_view(Self& self) {
    const auto& w = self.tensors_[self.tensors_.size() - 2];
    const auto& b = self.tensors_[self.tensors_.size() - 1];
    return {2 * self.shape_.hidden_size, self.shape_.output_size,
            std::span<V>(self.values_.data() + w.offset, w.size),
            std::span<V>(self.values_.data() + b.offset, b.size)};
  }

  ModelShape shape_;
  std::vector<TensorInfo> tensors_;
  std::vector<T> values_;
};

/// Uniform(-1/sqrt(H), 1/sqrt(H)) for every weight and bias.
template <typename T>
ModelParams<T> init_params(const ModelShape& shape, std::uint64_t seed) {
  ModelParams<T> p(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden_size));
  Rng rng = Rng::stream(seed, Stream::init);
  for (auto& v : p.values()) v = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
  return p;
}

}  // namespace chanest::nn
