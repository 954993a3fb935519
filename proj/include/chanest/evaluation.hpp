#pragma once

// Paired evaluation: every estimator sees the same regenerated noisy
// observations of the held-out sequences at each test SNR.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "chanest/baselines.hpp"
#include "chanest/csv.hpp"
#include "chanest/parallel.hpp"
#include "chanest/sbgru.hpp"

namespace chanest {

struct Observation {
  const ComplexSeq* truth = nullptr;
  Frame frame;
  ComplexSeq y;
  FeatureMatrix features;
  ComplexSeq ls;  // LS with linear interpolation, shared by the MMSE variants
  NoiseSpec noise;
};

struct NamedEstimator {
  std::string name;
  std::function<ComplexSeq(const Observation&)> run;  // must be safe to call concurrently
};

/// Noise stream for test sequence i at a given SNR; keyed by the SNR value
/// (in millidecibels) so results do not depend on the order of the SNR list.
inline std::uint64_t test_noise_seed(std::uint64_t seed, double snr_db, std::size_t i) {
  const auto key = static_cast<std::uint64_t>(std::llround(snr_db * 1000.0));
  return derive_seed(seed, {static_cast<std::uint64_t>(Stream::test_noise), key, static_cast<std::uint64_t>(i)});
}

inline Observation observe(const SequenceSet& set, std::size_t i, const NoiseSpec& noise, std::uint64_t noise_seed) {
  const auto& rec = set.data.sequences.at(i);
  Observation obs;
  obs.truth = &set.truth(i);
  obs.frame = frame_from_sequences(set.data.layout, rec.symbols, rec.pilot_ref);
  obs.y = apply_channel(obs.frame.symbols, *obs.truth, noise, noise_seed);
  obs.features = to_features(obs.y, obs.frame.pilot_ref);
  obs.ls = ls_estimate(obs.y, obs.frame);
  obs.noise = noise;
  return obs;
}

/// Mean per-sequence MSE of each estimator at one SNR. Sequences are
/// processed on up to `threads` workers; the reduction order is fixed.
inline std::vector<EstimateReport> evaluate_snr(const SequenceSet& set, double snr_db,
                                                const std::vector<NamedEstimator>& estimators, std::uint64_t seed,
                                                std::size_t threads = 1) {
  set.validate();
  if (set.size() == 0) throw ArgumentError("evaluate: empty test set");
  const NoiseSpec noise = NoiseSpec::from_snr_db(snr_db);
  std::vector<std::vector<double>> errors(set.size(), std::vector<double>(estimators.size()));
  parallel_for(set.size(), threads, [&](std::size_t i) {
    const Observation obs = observe(set, i, noise, test_noise_seed(seed, snr_db, i));
    for (std::size_t e = 0; e < estimators.size(); ++e) errors[i][e] = mse(estimators[e].run(obs), *obs.truth);
  });
  std::vector<EstimateReport> out;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    double total = 0.0;
    for (const auto& row : errors) total += row[e];
    const double value = total / static_cast<double>(set.size());
    if (!std::isfinite(value)) throw NumericalError("evaluate: non-finite MSE for " + estimators[e].name);
    out.push_back({estimators[e].name, snr_db, value, set.size() * set.length()});
  }
  return out;
}

inline NamedEstimator ls_estimator() {
  return {"LS", [](const Observation& obs) { return obs.ls; }};
}

/// Analytic Jakes correlation; the filter is factored once per call site.
inline NamedEstimator mmse_theory_estimator(const DopplerSpec& spec, std::size_t length, const NoiseSpec& noise) {
  auto filter = std::make_shared<const MmseFilter>(build_rhh_theory(length, spec), noise);
  return {"MMSE-theory", [filter](const Observation& obs) { return filter->apply(obs.ls); }};
}

/// Correlation estimated from each sequence's own LS output.
inline NamedEstimator mmse_sim_estimator() {
  return {"MMSE-sim", [](const Observation& obs) {
            return mmse_estimate_toeplitz(obs.ls, empirical_column(obs.ls), obs.noise);
          }};
}

inline NamedEstimator sbgru_estimator(const nn::ModelParams<float>& model, std::size_t window_length) {
  return {"SBGRU",
          [&model, window_length](const Observation& obs) { return sliding_estimate(obs.features, model, window_length); }};
}

inline NamedEstimator bgru_block_estimator(const nn::ModelParams<float>& model, std::size_t block) {
  return {"BGRU-block",
          [&model, block](const Observation& obs) { return block_estimate(obs.features, model, block); }};
}

/// Channel-tracking export over one long sequence. Columns:
/// n,re_h,im_h,abs_h,re_sbgru,im_sbgru,abs_sbgru,abs_ls,abs_mmse_sim
struct TraceResult {
  csv::Table table{{"n", "re_h", "im_h", "abs_h", "re_sbgru", "im_sbgru", "abs_sbgru", "abs_ls", "abs_mmse_sim"}};
  double sbgru_mse = 0.0;
  double ls_mse = 0.0;
  double mmse_sim_mse = 0.0;
};

/// `frame` must be as long as the channel. The MMSE-sim column uses the
/// Toeplitz solver, so long traces stay cheap.
inline TraceResult trace_export(const std::function<ComplexSeq(const FeatureMatrix&)>& estimator,
                                const ChannelRealization& channel, const Frame& frame, double snr_db,
                                std::uint64_t noise_seed) {
  if (frame.symbols.size() != channel.gains.size())
    throw ArgumentError("trace_export: frame length differs from channel length");
  const NoiseSpec noise = NoiseSpec::from_snr_db(snr_db);
  const ComplexSeq y = apply_channel(frame.symbols, channel, noise, noise_seed);
  const ComplexSeq ls = ls_estimate(y, frame);
  const ComplexSeq mmse_sim = mmse_estimate_toeplitz(ls, empirical_column(ls), noise);
  const ComplexSeq est = estimator(to_features(y, frame.pilot_ref));
  if (est.size() != y.size()) throw ArgumentError("trace_export: estimator returned the wrong length");

  TraceResult out;
  const auto& h = channel.gains;
  for (std::size_t n = 0; n < h.size(); ++n) {
    out.table.add_row({csv::number(n), csv::number(h[n].real()), csv::number(h[n].imag()), csv::number(std::abs(h[n])),
                       csv::number(est[n].real()), csv::number(est[n].imag()), csv::number(std::abs(est[n])),
                       csv::number(std::abs(ls[n])), csv::number(std::abs(mmse_sim[n]))});
  }
  out.sbgru_mse = mse(est, h);
  out.ls_mse = mse(ls, h);
  out.mmse_sim_mse = mse(mmse_sim, h);
  return out;
}

}  // namespace chanest
