#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "chanest/nn/params.hpp"

namespace chanest::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ModelShape& shape, AdamConfig cfg)
      : config(cfg), first_moment(shape.parameter_count(), T(0)), second_moment(shape.parameter_count(), T(0)) {}
};

/// One bias-corrected Adam update.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state) {
  auto theta = params.values();
  auto g = grads.values();
  if (g.size() != theta.size() || state.first_moment.size() != theta.size() ||
      state.second_moment.size() != theta.size())
    throw ArgumentError("adam_step: parameter, gradient and moment sizes differ");
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(c.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(c.beta2, t));
  const T lr = static_cast<T>(c.learning_rate);
  const T eps = static_cast<T>(c.epsilon);
  T* m = state.first_moment.data();
  T* v = state.second_moment.data();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    const T m_hat = m[i] / correction1;
    const T v_hat = v[i] / correction2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace chanest::nn
