#pragma once

// Time-selective flat Rayleigh fading: Doppler parameters, the Jakes
// autocorrelation J0(2*pi*phi_d*|d|), sum-of-sinusoids synthesis and the
// y = h*x + w observation model.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "chanest/errors.hpp"
#include "chanest/rng.hpp"

namespace chanest {

using cplx = std::complex<double>;
using ComplexSeq = std::vector<cplx>;

inline constexpr double speed_of_light = 3.0e8;  // m/s

/// Number of equal-power scatterers in the sum-of-sinusoids generator.
inline constexpr std::size_t scatterer_count = 64;

class DopplerSpec {
 public:
  /// fd = v * fc / c, phi_d = fd / rs. Requires 0 < phi_d < 0.5.
  static DopplerSpec from_physical(double carrier_frequency, double receiver_speed,
                                   double sampling_rate) {
    if (!(carrier_frequency > 0.0) || !(receiver_speed > 0.0) || !(sampling_rate > 0.0) ||
        !std::isfinite(carrier_frequency) || !std::isfinite(receiver_speed) ||
        !std::isfinite(sampling_rate))
      throw ArgumentError("doppler: carrier frequency, speed and sampling rate must be positive");
    const double max_doppler = receiver_speed * carrier_frequency / speed_of_light;
    const double normalized = max_doppler / sampling_rate;
    if (!(normalized < 0.5))
      throw ArgumentError("doppler: normalized Doppler " + std::to_string(normalized) +
                          " must be below 0.5");
    return DopplerSpec(carrier_frequency, receiver_speed, sampling_rate, normalized);
  }

  double carrier_frequency() const noexcept { return carrier_frequency_; }
  double receiver_speed() const noexcept { return receiver_speed_; }
  double sampling_rate() const noexcept { return sampling_rate_; }
  double max_doppler() const noexcept { return normalized_doppler_ * sampling_rate_; }
  double normalized_doppler() const noexcept { return normalized_doppler_; }

  friend bool operator==(const DopplerSpec&, const DopplerSpec&) = default;

 private:
  DopplerSpec(double fc, double v, double rs, double phi)
      : carrier_frequency_(fc), receiver_speed_(v), sampling_rate_(rs), normalized_doppler_(phi) {}

  double carrier_frequency_;
  double receiver_speed_;
  double sampling_rate_;
  double normalized_doppler_;
};

/// AWGN level for unit-power symbols: sigma_n^2 = 10^(-snr_db/10).
struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();
  double noise_variance = 0.0;

  static NoiseSpec from_snr_db(double snr_db) {
    if (std::isnan(snr_db)) throw ArgumentError("noise: SNR is NaN");
    return {snr_db, std::pow(10.0, -snr_db / 10.0)};
  }

  static NoiseSpec noiseless() { return {}; }
};

struct ChannelRealization {
  ComplexSeq gains;
  DopplerSpec spec;
  std::uint64_t seed = 0;
};

namespace detail {

inline double bessel_j0_series(double x) {
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

// Hankel expansion, truncated at the smallest term.
inline double bessel_j0_asymptotic(double x) {
  double p = 1.0;
  double q = 0.0;
  double coeff = 1.0;  // b_k / x^k with b_k = prod (2i-1)^2 / (k! 8^k)
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = coeff * odd * odd / (8.0 * k * x);
    if (next >= previous || next < 1e-18) break;
    previous = next;
    coeff = next;
    // a_k = (-1)^k b_k; P takes even k with sign (-1)^(k/2), Q odd k with -(-1)^((k-1)/2).
    if (k % 2 == 0) {
      p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * coeff;
    } else {
      q -= (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * coeff;
    }
  }
  const double chi = x - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Bessel function of the first kind, order zero. Power series below 12,
/// Hankel asymptotic expansion above; absolute error well under 1e-8.
inline double bessel_j0(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j0: non-finite argument");
  x = std::abs(x);
  return x < 12.0 ? detail::bessel_j0_series(x) : detail::bessel_j0_asymptotic(x);
}

inline double jakes_autocorr(long long lag, double normalized_doppler) {
  const double d = static_cast<double>(lag < 0 ? -lag : lag);
  return bessel_j0(2.0 * std::numbers::pi * normalized_doppler * d);
}

inline double jakes_autocorr(long long lag, const DopplerSpec& spec) {
  return jakes_autocorr(lag, spec.normalized_doppler());
}

/// h[n] = M^-1/2 sum_m exp(j(2 pi phi_d n cos(theta_m) + psi_m)) with theta_m,
/// psi_m uniform on [0, 2 pi). Deterministic in (length, spec, seed).
inline ChannelRealization generate_channel(std::size_t length, const DopplerSpec& spec,
                                           std::uint64_t seed) {
  if (length == 0) throw ArgumentError("generate_channel: length must be at least 1");
  constexpr std::size_t anchor_every = 256;
  const double two_pi = 2.0 * std::numbers::pi;

  Rng rng = Rng::stream(seed, Stream::channel);
  ComplexSeq gains(length, cplx{0.0, 0.0});
  for (std::size_t m = 0; m < scatterer_count; ++m) {
    const double angle = two_pi * rng.uniform();
    const double phase = two_pi * rng.uniform();
    const double omega = two_pi * spec.normalized_doppler() * std::cos(angle);
    const cplx step = std::polar(1.0, omega);
    cplx z;
    for (std::size_t n = 0; n < length; ++n) {
      if (n % anchor_every == 0) {
        z = std::polar(1.0, omega * static_cast<double>(n) + phase);
      }
      gains[n] += z;
      z *= step;
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(scatterer_count));
  for (auto& g : gains) g *= scale;
  return {std::move(gains), spec, seed};
}

/// Running sums for the ensemble-and-time averaged autocorrelation
/// R[d] = mean_r mean_n Re(h_r[n+d] conj(h_r[n])).
class AutocorrAccumulator {
 public:
  explicit AutocorrAccumulator(std::size_t max_lag) : sums_(max_lag + 1, 0.0) {}

  void add(std::span<const cplx> h) {
    const std::size_t lags = sums_.size();
    if (h.size() < lags) throw ArgumentError("empirical_autocorr: realization shorter than max_lag + 1");
    const std::size_t n_total = h.size();
    scratch_.assign(lags, 0.0);
    re_.resize(n_total);
    im_.resize(n_total);
    for (std::size_t n = 0; n < n_total; ++n) {
      re_[n] = h[n].real();
      im_[n] = h[n].imag();
    }
    // Loop over n outermost so the lag loop is a contiguous multiply-add.
    for (std::size_t n = 0; n < n_total; ++n) {
      const std::size_t span_len = std::min(lags, n_total - n);
      const double a = re_[n];
      const double b = im_[n];
      const double* re_shift = re_.data() + n;
      const double* im_shift = im_.data() + n;
      for (std::size_t d = 0; d < span_len; ++d) scratch_[d] += re_shift[d] * a + im_shift[d] * b;
    }
    for (std::size_t d = 0; d < lags; ++d) sums_[d] += scratch_[d] / static_cast<double>(n_total - d);
    ++count_;
  }

  /// Adds another accumulator's sums (used to combine fixed chunks in order).
  void merge(const AutocorrAccumulator& other) {
    if (other.sums_.size() != sums_.size()) throw ArgumentError("autocorr merge: lag mismatch");
    for (std::size_t d = 0; d < sums_.size(); ++d) sums_[d] += other.sums_[d];
    count_ += other.count_;
  }

  std::size_t count() const noexcept { return count_; }

  /// R[d] itself (no normalization by the lag-0 power).
  std::vector<double> mean() const {
    if (count_ == 0) throw ArgumentError("empirical_autocorr: no realizations");
    std::vector<double> out(sums_.size());
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = sums_[d] / static_cast<double>(count_);
    return out;
  }

  /// R[d] / R[0].
  std::vector<double> normalized() const {
    if (count_ == 0) throw ArgumentError("empirical_autocorr: no realizations");
    std::vector<double> out(sums_.size());
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = sums_[d] / sums_[0];
    return out;
  }

 private:
  std::vector<double> sums_;
  std::vector<double> scratch_, re_, im_;
  std::size_t count_ = 0;
};

inline std::vector<double> empirical_autocorr(std::span<const ChannelRealization> realizations,
                                              std::size_t max_lag) {
  if (realizations.empty()) throw ArgumentError("empirical_autocorr: empty realization set");
  const std::size_t length = realizations.front().gains.size();
  if (length <= max_lag) throw ArgumentError("empirical_autocorr: length must exceed max_lag");
  AutocorrAccumulator acc(max_lag);
  for (const auto& r : realizations) {
    if (r.gains.size() != length) throw ArgumentError("empirical_autocorr: realizations differ in length");
    acc.add(r.gains);
  }
  return acc.normalized();
}

/// y[n] = h[n] x[n] + w[n], w circular complex Gaussian with total variance
/// sigma_n^2 (half per real dimension).
inline ComplexSeq apply_channel(std::span<const cplx> x, std::span<const cplx> h,
                                const NoiseSpec& noise, std::uint64_t seed) {
  if (x.size() != h.size()) throw ArgumentError("apply_channel: symbol and channel lengths differ");
  ComplexSeq y(x.size());
  const double sigma = std::sqrt(noise.noise_variance / 2.0);
  if (sigma == 0.0) {
    for (std::size_t n = 0; n < x.size(); ++n) y[n] = h[n] * x[n];
    return y;
  }
  Rng rng = Rng::stream(seed, Stream::noise);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double re = rng.normal();
    const double im = rng.normal();
    y[n] = h[n] * x[n] + cplx{sigma * re, sigma * im};
  }
  return y;
}

inline ComplexSeq apply_channel(std::span<const cplx> x, const ChannelRealization& h,
                                const NoiseSpec& noise, std::uint64_t seed) {
  return apply_channel(x, std::span<const cplx>(h.gains), noise, seed);
}

}  // namespace chanest
