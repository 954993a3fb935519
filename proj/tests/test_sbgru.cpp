#include <gtest/gtest.h>

#include <complex>
#include <numeric>

#include "chanest/nn/grad_check.hpp"
#include "chanest/nn/model.hpp"
#include "chanest/sbgru.hpp"
#include "model_fixtures.hpp"

using namespace chanest;
using namespace fixtures;

namespace {

// Materializes every window that fits, runs the scalar oracle on it and
// averages the per-position outputs over the windows that cover each position.
std::vector<std::complex<double>> brute_force_sliding(const nn::ModelParams<double>& m, const FeatureMatrix& x,
                                                      std::size_t w) {
  const std::size_t length = x.length();
  std::vector<std::complex<double>> sum(length);
  std::vector<int> hits(length, 0);
  for (std::size_t j = 0; j + w <= length; ++j) {
    const auto out = predict(m, columns(x, j, w));
    for (std::size_t t = 0; t < w; ++t) {
      sum[j + t] += out[t];
      ++hits[j + t];
    }
  }
  for (std::size_t t = 0; t < length; ++t) sum[t] /= static_cast<double>(hits[t]);
  return sum;
}

FeatureMatrix slice(const FeatureMatrix& x, std::size_t first, std::size_t count) {
  FeatureMatrix out(count);
  for (std::size_t r = 0; r < FeatureMatrix::rows; ++r)
    for (std::size_t t = 0; t < count; ++t) out.at(r, t) = x.at(r, first + t);
  return out;
}

}  // namespace

TEST(WindowStarts, Examples) {
  EXPECT_EQ(window_starts(0, {4, 1, 160}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(window_starts(5, {4, 1, 160}), (std::vector<std::size_t>{2, 3, 4, 5}));
  EXPECT_EQ(window_starts(159, {40, 1, 160}), (std::vector<std::size_t>{120}));
}

TEST(WindowStarts, CoverageCountIdentity) {
  for (std::size_t length : {1u, 2u, 7u, 12u, 160u})
    for (std::size_t w = 1; w <= length; ++w) {
      const SlidingConfig cfg{w, 1, length};
      std::size_t total = 0;
      for (std::size_t t = 0; t < length; ++t) {
        const auto starts = window_starts(t, cfg);
        ASSERT_FALSE(starts.empty());
        for (std::size_t j : starts) {
          ASSERT_LE(j, t);
          ASSERT_LT(t, j + w);
          ASSERT_LE(j + w, length);
        }
        total += starts.size();
      }
      EXPECT_EQ(total, w * (length - w + 1)) << "L=" << length << " W=" << w;
    }
}

TEST(WindowStarts, RejectsBadArguments) {
  EXPECT_THROW(window_starts(160, {40, 1, 160}), ArgumentError);
  EXPECT_THROW(window_starts(0, {41, 1, 40}), ArgumentError);
  EXPECT_THROW(window_starts(0, {0, 1, 40}), ArgumentError);
  EXPECT_THROW(window_starts(0, {4, 2, 40}), ArgumentError);
}

TEST(Sliding, MatchesBruteForceOracle) {
  const nn::ModelShape shape{4, 3, 2, 2};
  std::uint64_t seed = 100;
  for (std::size_t length = 1; length <= 12; ++length)
    for (std::size_t w = 1; w <= std::min<std::size_t>(4, length); ++w) {
      const auto m = nn::init_params<double>(shape, ++seed);
      const auto x = random_features(length, seed + 7);
      const auto got = sliding_estimate(x, m, w);
      const auto expected = brute_force_sliding(m, x, w);
      ASSERT_EQ(got.size(), length);
      for (std::size_t t = 0; t < length; ++t) {
        EXPECT_NEAR(got[t].real(), expected[t].real(), 1e-10) << "L=" << length << " W=" << w << " t=" << t;
        EXPECT_NEAR(got[t].imag(), expected[t].imag(), 1e-10) << "L=" << length << " W=" << w << " t=" << t;
      }
    }
}

TEST(Sliding, MatchesOracleAcrossInferenceChunks) {
  // 281 windows: more than one inference batch.
  const auto m = nn::init_params<double>({4, 3, 2, 2}, 9);
  const auto x = random_features(300, 10);
  ASSERT_GT(300u - 20u + 1u, inference_batch);
  const auto got = sliding_estimate(x, m, 20);
  const auto expected = brute_force_sliding(m, x, 20);
  for (std::size_t t = 0; t < x.length(); ++t) {
    EXPECT_NEAR(got[t].real(), expected[t].real(), 1e-10);
    EXPECT_NEAR(got[t].imag(), expected[t].imag(), 1e-10);
  }
}

TEST(Sliding, FullWindowEqualsSinglePassBitwise) {
  for (std::size_t length : {1u, 5u, 12u, 40u}) {
    const auto m = nn::init_params<float>({4, 8, 2, 2}, length);
    const auto x = random_features(length, length + 1);
    const auto sliding = sliding_estimate(x, m, length);
    const auto block = block_estimate(x, m, length);
    const auto pass = nn::model_forward(m, nn::features_batch<float>(x));
    for (std::size_t t = 0; t < length; ++t) {
      EXPECT_EQ(sliding[t], block[t]);
      EXPECT_EQ(sliding[t].real(), static_cast<double>(pass.prediction(t, 0, 0)));
      EXPECT_EQ(sliding[t].imag(), static_cast<double>(pass.prediction(t, 1, 0)));
    }
  }
}

TEST(Sliding, ConstantBiasModelGivesConstantOutput) {
  nn::ModelParams<double> m({4, 5, 2, 2});
  m.head().b[0] = 0.625;
  m.head().b[1] = -0.375;
  const auto x = random_features(30, 3);
  for (std::size_t w : {1u, 7u, 30u}) {
    for (const auto& v : sliding_estimate(x, m, w)) EXPECT_EQ(v, std::complex<double>(0.625, -0.375));
  }
  for (const auto& v : block_estimate(x, m, 10)) EXPECT_EQ(v, std::complex<double>(0.625, -0.375));
}

TEST(Sliding, RejectsWindowLongerThanSequence) {
  const auto m = nn::init_params<double>({4, 3, 2, 2}, 1);
  EXPECT_THROW(sliding_estimate(random_features(8, 1), m, 9), ArgumentError);
  EXPECT_THROW(sliding_estimate(random_features(8, 1), m, 0), ArgumentError);
  EXPECT_THROW(sliding_estimate(random_features(8, 1), m, SlidingConfig{4, 1, 9}), ArgumentError);
}

TEST(Block, EqualsSeparateSegmentCalls) {
  const auto m = nn::init_params<double>({4, 4, 2, 2}, 12);
  const auto x = random_features(8, 13);
  const auto whole = block_estimate(x, m, 4);
  const auto first = block_estimate(slice(x, 0, 4), m, 4);
  const auto second = block_estimate(slice(x, 4, 4), m, 4);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(whole[t], first[t]);
    EXPECT_EQ(whole[t + 4], second[t]);
  }
  const auto oracle_first = predict(m, columns(x, 0, 4));
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_NEAR(whole[t].real(), oracle_first[t].real(), 1e-12);
    EXPECT_NEAR(whole[t].imag(), oracle_first[t].imag(), 1e-12);
  }
}

TEST(Block, RejectsNonDivisor) {
  const auto m = nn::init_params<double>({4, 3, 2, 2}, 1);
  EXPECT_THROW(block_estimate(random_features(10, 1), m, 4), ArgumentError);
  EXPECT_THROW(block_estimate(random_features(10, 1), m, 0), ArgumentError);
}
