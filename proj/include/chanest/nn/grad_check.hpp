#pragma once

// End-to-end finite-difference check of model_backward on a single window.

#include <cmath>
#include <complex>
#include <span>
#include <string>

#include "chanest/framing.hpp"
#include "chanest/nn/model.hpp"

namespace chanest::nn {

/// Single-window input (steps x 4 x 1) from a feature matrix.
template <typename T>
SeqBatch<T> features_batch(const FeatureMatrix& x) {
  SeqBatch<T> out(x.length(), FeatureMatrix::rows, 1);
  for (std::size_t t = 0; t < x.length(); ++t)
    for (std::size_t f = 0; f < FeatureMatrix::rows; ++f) out(t, f, 0) = static_cast<T>(x.at(f, t));
  return out;
}

template <typename T>
T window_loss(const ModelParams<T>& model, const SeqBatch<T>& input, const SeqBatch<T>& truth) {
  const auto pass = model_forward(model, input);
  const auto p = pass.prediction.values();
  const auto y = truth.values();
  if (p.size() != y.size()) throw ArgumentError("window_loss: prediction and truth shapes differ");
  T acc = T(0);
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - y[i]) * (p[i] - y[i]);
  return acc / static_cast<T>(pass.prediction.steps() * pass.prediction.batch());
}

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps gradients
/// that are zero up to rounding from dominating the report.
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline constexpr double grad_check_floor = 1e-7;

/// Compares analytic gradients of the window MSE (double precision) against
/// central differences with the given step, over every parameter. The
/// perturbed losses are evaluated in extended precision so that rounding in
/// the difference quotient stays far below the tolerance.
inline GradCheckReport grad_check(const ModelParams<double>& model, const FeatureMatrix& x,
                                  std::span<const std::complex<double>> truth, double step = 1e-5) {
  if (truth.size() != x.length()) throw ArgumentError("grad_check: truth length != input length");
  const SeqBatch<double> input = features_batch<double>(x);
  const SeqBatch<double> target = truth_batch<double>(truth);

  ModelParams<double> grads(model.shape());
  {
    const auto pass = model_forward(model, input);
    const auto lg = mse_loss_and_grad(pass.prediction, target);
    model_backward(model, pass, lg.grad, grads);
  }

  using wide = long double;
  const SeqBatch<wide> wide_input = features_batch<wide>(x);
  const SeqBatch<wide> wide_target = truth_batch<wide>(truth);
  GradCheckReport report;
  ModelParams<wide> probe = model.cast<wide>();
  for (std::size_t k = 0; k < model.tensor_count(); ++k) {
    auto values = probe.tensor_values(k);
    const auto analytic = grads.tensor_values(k);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const wide saved = values[i];
      values[i] = saved + static_cast<wide>(step);
      const wide up = window_loss(probe, wide_input, wide_target);
      values[i] = saved - static_cast<wide>(step);
      const wide down = window_loss(probe, wide_input, wide_target);
      values[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2 * static_cast<wide>(step)));
      const double err = relative_error(analytic[i], numeric, grad_check_floor);
      ++report.checked;
      if (err > report.max_relative_error || report.checked == 1) {
        report.max_relative_error = err;
        report.worst_tensor = model.tensor(k).name;
        report.worst_index = i;
        report.analytic = analytic[i];
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace chanest::nn
