#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chanest/baselines.hpp"
#include "chanest/linalg.hpp"

using namespace chanest;

namespace {

DopplerSpec table_doppler() { return DopplerSpec::from_physical(5.2e9, 10.0, 0.25e6); }

Frame table_frame(std::uint64_t seed, std::size_t np = 8) {
  const auto layout = build_layout(16, np, 10);
  return assemble_frame(layout, random_bits(2 * np, seed), random_bits(2 * 10 * (16 - np), seed + 1));
}

HermitianMatrix random_pd(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> b(n * n);
  for (auto& v : b) v = {rng.normal(), rng.normal()};
  // A = B B^H / n + 0.1 I
  std::vector<cplx> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      cplx acc{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) acc += b[i * n + k] * std::conj(b[j * n + k]);
      acc /= static_cast<double>(n);
      if (i == j) acc = {acc.real() + 0.1, 0.0};
      a[i * n + j] = acc;
      a[j * n + i] = std::conj(acc);
    }
  return HermitianMatrix::from_entries(n, std::move(a));
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

}  // namespace

TEST(Linalg, TrivialSolves) {
  const ComplexSeq b{{1.0, 2.0}, {-3.0, 0.5}, {0.0, 1.0}};
  EXPECT_EQ(solve_hermitian(HermitianMatrix::identity(3), b), b);
  const std::vector<double> two{2.0, 0.0, 0.0};
  const auto x = solve_hermitian(HermitianMatrix::toeplitz(two), ComplexSeq(3, cplx{1.0, 0.0}));
  for (const auto& v : x) EXPECT_NEAR(std::abs(v - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(Linalg, RandomPositiveDefiniteResidual) {
  for (std::size_t n : {8u, 64u, 512u}) {
    const auto a = random_pd(n, n);
    Rng rng(n + 1);
    ComplexSeq b(n);
    for (auto& v : b) v = {rng.normal(), rng.normal()};
    const auto x = solve_hermitian(a, b);
    auto ax = a.multiply(x);
    for (std::size_t i = 0; i < n; ++i) ax[i] -= b[i];
    EXPECT_LT(norm2(ax) / norm2(b), 1e-8) << n;
  }
}

TEST(Linalg, RejectsIndefiniteAndNonHermitian) {
  const std::vector<double> col{1.0, 2.0};
  EXPECT_THROW(solve_hermitian(HermitianMatrix::toeplitz(col), ComplexSeq(2)), NumericalError);
  EXPECT_THROW(HermitianMatrix::from_entries(2, {1.0, cplx(0, 1), cplx(0, 1), 1.0}), ArgumentError);
  EXPECT_THROW(HermitianMatrix::from_entries(2, {1.0, 0.0, 0.0}), ArgumentError);
}

TEST(Linalg, LevinsonMatchesCholesky) {
  const auto col = jakes_column(200, 0.01);
  std::vector<double> loaded = col;
  loaded[0] += 0.05;
  Rng rng(3);
  ComplexSeq b(200);
  for (auto& v : b) v = {rng.normal(), rng.normal()};
  const auto x1 = solve_symmetric_toeplitz(loaded, b);
  const auto x2 = solve_hermitian(HermitianMatrix::toeplitz(loaded), b);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(std::abs(x1[i] - x2[i]), 0.0, 1e-9 * norm2(x2));
}

TEST(Ls, PilotEstimates) {
  const Frame f = table_frame(1);
  ComplexSeq y(f.symbols.size());
  for (std::size_t n = 0; n < y.size(); ++n) y[n] = 2.0 * f.symbols[n];
  const auto est = ls_pilot_estimate(y, f);
  ASSERT_EQ(est.values.size(), 80u);
  for (const auto& v : est.values) EXPECT_NEAR(std::abs(v - cplx(2.0, 0.0)), 0.0, 1e-15);

  const auto h = generate_channel(160, table_doppler(), 4);
  const auto y2 = apply_channel(f.symbols, h, NoiseSpec::noiseless(), 0);
  const auto est2 = ls_pilot_estimate(y2, f);
  for (std::size_t i = 0; i < est2.positions.size(); ++i)
    EXPECT_NEAR(std::abs(est2.values[i] - h.gains[est2.positions[i]]), 0.0, 1e-14);
}

TEST(Ls, Interpolation) {
  const auto mid = linear_interpolate({3, {0, 2}, {cplx(0, 0), cplx(1, 0)}});
  EXPECT_EQ(mid[1], cplx(0.5, 0.0));
  EXPECT_EQ(mid[2], cplx(1.0, 0.0));  // tail hold
  const auto flat = linear_interpolate({3, {0, 2}, {cplx(1, 1), cplx(1, 1)}});
  EXPECT_EQ(flat[1], cplx(1.0, 1.0));
  const auto single = linear_interpolate({5, {2}, {cplx(3, -1)}});
  for (const auto& v : single) EXPECT_EQ(v, cplx(3.0, -1.0));
  EXPECT_THROW(linear_interpolate({5, {}, {}}), ArgumentError);
}

TEST(Ls, ConstantChannelNoiseless) {
  const Frame f = table_frame(2);
  const ComplexSeq h(160, cplx{0.3, -0.8});
  const auto est = ls_estimate(apply_channel(f.symbols, h, NoiseSpec::noiseless(), 0), f);
  for (const auto& v : est) EXPECT_NEAR(std::abs(v - h[0]), 0.0, 1e-15);
}

TEST(Ls, PilotMseMatchesInverseSnr) {
  const auto spec = table_doppler();
  const auto noise = NoiseSpec::from_snr_db(10.0);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const Frame f = table_frame(s);
    const auto h = generate_channel(160, spec, s);
    const auto est = ls_pilot_estimate(apply_channel(f.symbols, h, noise, s), f);
    for (std::size_t i = 0; i < est.positions.size(); ++i, ++count)
      acc += std::norm(est.values[i] - h.gains[est.positions[i]]);
  }
  EXPECT_NEAR(acc / count, 0.1, 0.01);
}

TEST(Ls, FullSequenceMseAtHalfDensity) {
  // With pilots on even indices, each midpoint averages two independent
  // pilot errors (variance sigma^2/2) and the final sample is held from the
  // last pilot (variance sigma^2): E = (80 + 79/2 + 1) sigma^2 / 160 =
  // 0.753125 sigma^2 for a channel that is locally linear.
  const auto spec = table_doppler();
  for (double snr : {10.0, 20.0}) {
    const auto noise = NoiseSpec::from_snr_db(snr);
    double acc = 0.0;
    const int frames = 3000;
    for (int s = 0; s < frames; ++s) {
      const Frame f = table_frame(s);
      const auto h = generate_channel(160, spec, 50000 + s);
      acc += mse(ls_estimate(apply_channel(f.symbols, h, noise, s), f), h.gains);
    }
    const double expected = 0.753125 * noise.noise_variance;
    EXPECT_NEAR(acc / frames, expected, 0.05 * expected) << snr;
  }
}

TEST(Rhh, Theory) {
  const auto spec = table_doppler();
  const auto r1 = build_rhh_theory(1, spec);
  EXPECT_EQ(r1(0, 0), cplx(1.0, 0.0));
  const auto r2 = build_rhh_theory(2, spec);
  EXPECT_NEAR(r2(0, 1).real(), 0.999995, 1e-6);
  const auto r = build_rhh_theory(40, spec);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) EXPECT_EQ(r(i, j), r(j, i));
  EXPECT_THROW(build_rhh_theory(0, spec), ArgumentError);
}

TEST(Rhh, Empirical) {
  const auto c = build_rhh_empirical(ComplexSeq(6, cplx{0.5, 0.5}));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const double d = static_cast<double>(i > j ? i - j : j - i);
      EXPECT_DOUBLE_EQ(c(i, j).real(), (6.0 - d) / 6.0);
    }
  const ComplexSeq h{{1.0, 0.0}, {0.0, 2.0}, {1.0, 1.0}};
  EXPECT_DOUBLE_EQ(empirical_column(h, false)[0], (1.0 + 4.0 + 2.0) / 3.0);
  EXPECT_DOUBLE_EQ(empirical_column(h, false)[1], (0.0 + 2.0) / 3.0);

  const auto spec = table_doppler();
  const auto long_h = generate_channel(20000, spec, 17);
  const auto col = empirical_column(long_h.gains);
  for (std::size_t d = 0; d <= 200; d += 20) EXPECT_NEAR(col[d], jakes_autocorr(d, spec), 0.05) << d;
}

TEST(Mmse, ScalarAndNoiseless) {
  const std::vector<double> one{1.0};
  const ComplexSeq h{{2.0, -4.0}};
  const auto out = mmse_estimate(h, HermitianMatrix::toeplitz(one), NoiseSpec::from_snr_db(0.0));
  EXPECT_NEAR(std::abs(out[0] - cplx(1.0, -2.0)), 0.0, 1e-9);

  const auto spec = table_doppler();
  const Frame f = table_frame(8);
  const auto ch = generate_channel(160, spec, 8);
  const auto ls = ls_estimate(apply_channel(f.symbols, ch, NoiseSpec::noiseless(), 0), f);
  for (const auto& r : {build_rhh_theory(160, spec), build_rhh_empirical(ls)}) {
    const auto m = mmse_estimate(ls, r, NoiseSpec::noiseless());
    ComplexSeq diff(ls.size());
    for (std::size_t n = 0; n < ls.size(); ++n) diff[n] = m[n] - ls[n];
    EXPECT_LT(norm2(diff) / norm2(ls), 1e-6);
  }
}

TEST(Mmse, ToeplitzPathMatchesDense) {
  const auto spec = table_doppler();
  const Frame f = table_frame(9);
  const auto ch = generate_channel(160, spec, 9);
  const auto noise = NoiseSpec::from_snr_db(15.0);
  const auto ls = ls_estimate(apply_channel(f.symbols, ch, noise, 9), f);
  const auto col = empirical_column(ls);
  const auto dense = mmse_estimate(ls, HermitianMatrix::toeplitz(col), noise);
  const auto fast = mmse_estimate_toeplitz(ls, col, noise);
  for (std::size_t n = 0; n < ls.size(); ++n) EXPECT_NEAR(std::abs(dense[n] - fast[n]), 0.0, 1e-9);
}

TEST(Mmse, TheoryBeatsLs) {
  const auto spec = table_doppler();
  const auto noise = NoiseSpec::from_snr_db(10.0);
  const MmseFilter filter(build_rhh_theory(160, spec), noise);
  double ls_acc = 0.0, mmse_acc = 0.0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const Frame f = table_frame(s);
    const auto h = generate_channel(160, spec, 7000 + s);
    const auto ls = ls_estimate(apply_channel(f.symbols, h, noise, s), f);
    ls_acc += mse(ls, h.gains);
    mmse_acc += mse(filter.apply(ls), h.gains);
  }
  EXPECT_LT(mmse_acc, ls_acc);
}

TEST(Mse, Definition) {
  const ComplexSeq t{{1.0, 0.0}, {0.0, -1.0}, {0.5, 0.5}};
  EXPECT_EQ(mse(t, t), 0.0);
  ComplexSeq plus1 = t, plus_j = t, rot_t = t, rot_e = t;
  for (auto& v : plus1) v += 1.0;
  for (auto& v : plus_j) v += cplx(0.0, 0.1);
  EXPECT_DOUBLE_EQ(mse(plus1, t), 1.0);
  EXPECT_NEAR(mse(plus_j, t), 0.01, 1e-15);
  const cplx phase = std::polar(1.0, 0.7);
  for (std::size_t i = 0; i < t.size(); ++i) {
    rot_t[i] *= phase;
    rot_e[i] = plus_j[i] * phase;
  }
  EXPECT_NEAR(mse(rot_e, rot_t), 0.01, 1e-15);
  EXPECT_THROW(mse(t, ComplexSeq(2)), ArgumentError);
}

TEST(Reports, CsvLayout) {
  const std::vector<EstimateReport> rs{{"LS", 20.0, 0.0075, 160000}};
  EXPECT_EQ(reports_table(rs).str(), "estimator,snr_db,mse,sample_count\nLS,20,0.0075,160000\n");
}
