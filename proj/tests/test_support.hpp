#pragma once

// Reference implementations used only as test oracles. They are written
// independently of the library code paths they check.

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using big = boost::multiprecision::cpp_dec_float_100;

/// J0(x) = sum_k (-x^2/4)^k / (k!)^2 in 100-digit arithmetic.
inline double bessel_j0(double xd) {
  const big x = xd;
  const big q = -(x * x) / 4;
  big term = 1;
  big sum = 1;
  for (int k = 1; k < 400; ++k) {
    term *= q / (big(k) * big(k));
    sum += term;
    if (abs(term) < big("1e-40")) break;
  }
  return static_cast<double>(sum);
}

/// Bisection for a sign change of the series oracle in [lo, hi].
inline double bessel_j0_root(double lo, double hi) {
  double flo = bessel_j0(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = bessel_j0(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// Scalar-loop GRU cell straight from the defining equations. Weight
/// matrices are row-major hidden x (hidden + input), columns [h, x].
struct Cell {
  int input = 0, hidden = 0;
  std::vector<double> wz, wr, wc, bz, br, bc;

  std::vector<double> step(const std::vector<double>& x, const std::vector<double>& h) const {
    const int cols = hidden + input;
    std::vector<double> z(hidden), r(hidden), out(hidden);
    for (int i = 0; i < hidden; ++i) {
      double az = bz[i], ar = br[i];
      for (int j = 0; j < hidden; ++j) {
        az += wz[i * cols + j] * h[j];
        ar += wr[i * cols + j] * h[j];
      }
      for (int j = 0; j < input; ++j) {
        az += wz[i * cols + hidden + j] * x[j];
        ar += wr[i * cols + hidden + j] * x[j];
      }
      z[i] = sigmoid(az);
      r[i] = sigmoid(ar);
    }
    for (int i = 0; i < hidden; ++i) {
      double ac = bc[i];
      for (int j = 0; j < hidden; ++j) ac += wc[i * cols + j] * (r[j] * h[j]);
      for (int j = 0; j < input; ++j) ac += wc[i * cols + hidden + j] * x[j];
      const double cand = std::tanh(ac);
      out[i] = (1.0 - z[i]) * h[i] + z[i] * cand;
    }
    return out;
  }
};

/// Runs stacked bidirectional cells over xs (T vectors) with zero initial
/// states; returns the last layer's [forward, backward] states per step.
inline std::vector<std::vector<double>> bgru(const std::vector<std::pair<Cell, Cell>>& layers,
                                             std::vector<std::vector<double>> xs) {
  for (const auto& [fwd, bwd] : layers) {
    const std::size_t steps = xs.size();
    std::vector<std::vector<double>> hf(steps), hb(steps);
    std::vector<double> h(fwd.hidden, 0.0);
    for (std::size_t t = 0; t < steps; ++t) hf[t] = h = fwd.step(xs[t], h);
    h.assign(bwd.hidden, 0.0);
    for (std::size_t t = steps; t-- > 0;) hb[t] = h = bwd.step(xs[t], h);
    for (std::size_t t = 0; t < steps; ++t) {
      xs[t] = hf[t];
      xs[t].insert(xs[t].end(), hb[t].begin(), hb[t].end());
    }
  }
  return xs;
}

}  // namespace oracle
