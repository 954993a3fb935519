#pragma once

// Classical pilot-aided estimators: LS at pilots with linear interpolation,
// and the MMSE smoother R (R + sigma^2 I)^-1 h_LS with either the analytic
// Jakes correlation ("theory") or one estimated from h_LS itself ("sim").

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chanest/channel.hpp"
#include "chanest/csv.hpp"
#include "chanest/framing.hpp"
#include "chanest/linalg.hpp"

namespace chanest {

/// Added to the diagonal of R_hh before any factorization.
inline constexpr double mmse_diagonal_loading = 1e-10;

struct PilotEstimates {
  std::size_t length = 0;
  std::vector<std::size_t> positions;  // ascending
  ComplexSeq values;
};

inline PilotEstimates ls_pilot_estimate(std::span<const cplx> y, const Frame& frame) {
  if (y.size() != frame.symbols.size()) throw ArgumentError("ls_pilot_estimate: length mismatch");
  PilotEstimates est;
  est.length = y.size();
  est.positions = frame.layout.pilot_indices();
  est.values.reserve(est.positions.size());
  for (std::size_t n : est.positions) {
    const cplx x = frame.symbols[n];
    if (x == cplx{0.0, 0.0}) throw DomainError("ls_pilot_estimate: zero pilot symbol at " + std::to_string(n));
    est.values.push_back(y[n] / x);
  }
  return est;
}

/// Linear interpolation between flanking pilots; positions outside the
/// first/last pilot hold the nearest pilot value.
inline ComplexSeq linear_interpolate(const PilotEstimates& est) {
  if (est.positions.empty()) throw ArgumentError("linear_interpolate: no pilot estimates");
  if (est.positions.size() != est.values.size()) throw ArgumentError("linear_interpolate: ragged estimates");
  for (std::size_t i = 1; i < est.positions.size(); ++i)
    if (est.positions[i] <= est.positions[i - 1]) throw ArgumentError("linear_interpolate: positions not ascending");
  if (est.positions.back() >= est.length) throw ArgumentError("linear_interpolate: position beyond length");

  ComplexSeq out(est.length);
  const std::size_t first = est.positions.front();
  const std::size_t last = est.positions.back();
  for (std::size_t n = 0; n <= first; ++n) out[n] = est.values.front();
  for (std::size_t n = last; n < est.length; ++n) out[n] = est.values.back();
  for (std::size_t p = 0; p + 1 < est.positions.size(); ++p) {
    const std::size_t j = est.positions[p];
    const std::size_t k = est.positions[p + 1];
    const double span_len = static_cast<double>(k - j);
    for (std::size_t i = j; i <= k; ++i) {
      const double wk = static_cast<double>(i - j) / span_len;
      const double wj = static_cast<double>(k - i) / span_len;
      out[i] = wj * est.values[p] + wk * est.values[p + 1];
    }
  }
  return out;
}

inline ComplexSeq ls_estimate(std::span<const cplx> y, const Frame& frame) {
  return linear_interpolate(ls_pilot_estimate(y, frame));
}

/// R[d] = J0(2 pi phi_d d), d = 0..length-1.
inline std::vector<double> jakes_column(std::size_t length, double normalized_doppler) {
  std::vector<double> col(length);
  for (std::size_t d = 0; d < length; ++d) col[d] = jakes_autocorr(static_cast<long long>(d), normalized_doppler);
  return col;
}

/// R[d] = (1/L) sum_{n>=d} Re(h[n] conj(h[n-d])), divided by R[0]. The
/// 1/L (biased) form keeps the Toeplitz matrix positive semidefinite.
/// With `normalize` false the raw values are returned.
inline std::vector<double> empirical_column(std::span<const cplx> h, bool normalize = true) {
  const std::size_t length = h.size();
  if (length == 0) throw ArgumentError("empirical autocorrelation: empty sequence");
  std::vector<double> col(length, 0.0);
  for (std::size_t d = 0; d < length; ++d) {
    double acc = 0.0;
    for (std::size_t n = d; n < length; ++n)
      acc += h[n].real() * h[n - d].real() + h[n].imag() * h[n - d].imag();
    col[d] = acc / static_cast<double>(length);
  }
  if (normalize) {
    if (!(col[0] > 0.0)) throw NumericalError("empirical autocorrelation: zero-power sequence");
    const double r0 = col[0];
    for (auto& c : col) c /= r0;
  }
  return col;
}

inline HermitianMatrix build_rhh_theory(std::size_t length, const DopplerSpec& spec) {
  if (length == 0) throw ArgumentError("build_rhh_theory: length must be >= 1");
  return HermitianMatrix::toeplitz(jakes_column(length, spec.normalized_doppler()));
}

inline HermitianMatrix build_rhh_empirical(std::span<const cplx> h_ls) {
  return HermitianMatrix::toeplitz(empirical_column(h_ls));
}

/// Pre-factored MMSE smoother for a fixed correlation matrix and noise
/// level. Evaluated as h_LS - sigma^2 (R + sigma^2 I)^-1 h_LS, which equals
/// R (R + sigma^2 I)^-1 h_LS; the loaded R + eps*I is used on both sides.
class MmseFilter {
 public:
  MmseFilter(const HermitianMatrix& r, const NoiseSpec& noise) : order_(r.order()), variance_(noise.noise_variance) {
    if (variance_ > 0.0) factor_.emplace(r, variance_ + mmse_diagonal_loading);
  }

  ComplexSeq apply(std::span<const cplx> h_ls) const {
    if (h_ls.size() != order_) throw ArgumentError("mmse: h_ls length != R order");
    ComplexSeq out(h_ls.begin(), h_ls.end());
    if (!factor_) return out;
    const ComplexSeq z = factor_->solve(h_ls);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] -= variance_ * z[n];
    return out;
  }

 private:
  std::size_t order_;
  double variance_;
  std::optional<CholeskyFactor> factor_;
};

inline ComplexSeq mmse_estimate(std::span<const cplx> h_ls, const HermitianMatrix& r, const NoiseSpec& noise) {
  if (h_ls.size() != r.order()) throw ArgumentError("mmse_estimate: h_ls length != R order");
  return MmseFilter(r, noise).apply(h_ls);
}

/// Same smoother for a symmetric Toeplitz R given by its first column,
/// solved by Levinson recursion (no dense matrix).
inline ComplexSeq mmse_estimate_toeplitz(std::span<const cplx> h_ls, std::span<const double> column,
                                         const NoiseSpec& noise) {
  if (h_ls.size() != column.size()) throw ArgumentError("mmse_estimate: h_ls length != R order");
  ComplexSeq out(h_ls.begin(), h_ls.end());
  if (noise.noise_variance == 0.0) return out;
  std::vector<double> loaded(column.begin(), column.end());
  loaded[0] += noise.noise_variance + mmse_diagonal_loading;
  const ComplexSeq z = solve_symmetric_toeplitz(loaded, h_ls);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] -= noise.noise_variance * z[n];
  return out;
}

/// (1/L) sum |estimate - truth|^2.
inline double mse(std::span<const cplx> estimate, std::span<const cplx> truth) {
  if (estimate.size() != truth.size()) throw ArgumentError("mse: length mismatch");
  if (estimate.empty()) throw ArgumentError("mse: empty sequences");
  double acc = 0.0;
  for (std::size_t n = 0; n < estimate.size(); ++n) acc += std::norm(estimate[n] - truth[n]);
  return acc / static_cast<double>(estimate.size());
}

struct EstimateReport {
  std::string estimator_name;
  double snr_db = 0.0;
  double mse = 0.0;
  std::size_t sample_count = 0;
};

/// Columns: estimator,snr_db,mse,sample_count
inline csv::Table reports_table(std::span<const EstimateReport> reports) {
  csv::Table t({"estimator", "snr_db", "mse", "sample_count"});
  for (const auto& r : reports)
    t.add_row({r.estimator_name, csv::number(r.snr_db), csv::number(r.mse), csv::number(r.sample_count)});
  return t;
}

}  // namespace chanest
