#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "chanest/nn/adam.hpp"
#include "chanest/nn/checkpoint.hpp"
#include "chanest/nn/grad_check.hpp"
#include "chanest/nn/model.hpp"
#include "model_fixtures.hpp"

using namespace chanest;
using namespace chanest::nn;
using namespace fixtures;

TEST(Params, DefaultCount) {
  const ModelShape shape;
  // layer 0: 2 * (3*40*(40+4) + 3*40) = 10800; layer 1: 2 * (3*40*(40+80) + 120) = 29040;
  // head: 2*80 + 2 = 162.
  EXPECT_EQ(shape.parameter_count(), 40002u);
  EXPECT_EQ(ModelParams<float>(shape).size(), 40002u);
  EXPECT_EQ(ModelParams<float>(shape).tensor_count(), 2u * 2 * 6 + 2);
}

TEST(Params, InitBoundsAndDeterminism) {
  const ModelShape shape;
  const auto a = init_params<float>(shape, 3);
  EXPECT_EQ(a, init_params<float>(shape, 3));
  EXPECT_FALSE(a == init_params<float>(shape, 4));
  const float bound = 1.0f / std::sqrt(40.0f);
  for (float v : a.values()) EXPECT_LE(std::abs(v), bound);
}

TEST(Bgru, MatchesScalarOracle) {
  for (std::size_t hidden : {3u, 40u}) {
    const ModelShape shape{4, hidden, 2, 2};
    const auto m = init_params<double>(shape, 17);
    const auto x = random_features(8, 5);
    const auto pass = model_forward(m, features_batch<double>(x));
    const auto expected = oracle::bgru(oracle_layers(m), columns(x));
    auto head = m.head();
    for (std::size_t t = 0; t < 8; ++t)
      for (std::size_t k = 0; k < 2 * hidden; ++k) {
        ASSERT_NEAR(pass.top()(t, k, 0), expected[t][k], 1e-12);
      }
    for (std::size_t t = 0; t < 8; ++t)
      for (std::size_t o = 0; o < 2; ++o) {
        double acc = head.b[o];
        for (std::size_t k = 0; k < 2 * hidden; ++k) acc += head.w[o * 2 * hidden + k] * expected[t][k];
        EXPECT_NEAR(pass.prediction(t, o, 0), acc, 1e-12);
      }
  }
}

TEST(Bgru, SingleStepIsTwoIndependentCells) {
  const ModelShape shape{4, 5, 1, 2};
  const auto m = init_params<double>(shape, 2);
  const auto x = random_features(1, 3);
  const auto pass = bgru_forward(m, features_batch<double>(x));
  const std::vector<double> zero(5, 0.0);
  const auto xs = columns(x)[0];
  const auto f = to_oracle(m.gru(0, Direction::forward)).step(xs, zero);
  const auto b = to_oracle(m.gru(0, Direction::backward)).step(xs, zero);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(pass.top()(0, k, 0), f[k], 1e-14);
    EXPECT_NEAR(pass.top()(0, 5 + k, 0), b[k], 1e-14);
  }
}

TEST(Bgru, ReversalSymmetry) {
  const ModelShape shape{4, 6, 2, 2};
  const auto m = init_params<double>(shape, 8);
  ModelParams<double> swapped(shape);
  for (std::size_t l = 0; l < 2; ++l) {
    auto f = m.gru(l, Direction::forward);
    auto b = m.gru(l, Direction::backward);
    auto sf = swapped.gru(l, Direction::forward);
    auto sb = swapped.gru(l, Direction::backward);
    auto copy = [](std::span<const double> from, std::span<double> to) { std::copy(from.begin(), from.end(), to.begin()); };
    copy(b.wz, sf.wz); copy(b.wr, sf.wr); copy(b.wc, sf.wc); copy(b.bz, sf.bz); copy(b.br, sf.br); copy(b.bc, sf.bc);
    copy(f.wz, sb.wz); copy(f.wr, sb.wr); copy(f.wc, sb.wc); copy(f.bz, sb.bz); copy(f.br, sb.br); copy(f.bc, sb.bc);
  }
  // Layer 1 sees [fwd, bwd] columns; with swapped directions these halves
  // swap too, so permute its input columns to keep the symmetry exact.
  for (std::size_t d = 0; d < 2; ++d) {
    auto g = swapped.gru(1, static_cast<Direction>(d));
    for (auto w : {g.wz, g.wr, g.wc})
      for (std::size_t i = 0; i < 6; ++i) {
        double* row = w.data() + i * g.cols() + 6;
        std::swap_ranges(row, row + 6, row + 6);
      }
  }
  const auto x = random_features(7, 4);
  FeatureMatrix rev(7);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t t = 0; t < 7; ++t) rev.at(r, t) = x.at(r, 6 - t);
  const auto a = bgru_forward(m, features_batch<double>(x));
  const auto b = bgru_forward(swapped, features_batch<double>(rev));
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_NEAR(a.top()(t, k, 0), b.top()(6 - t, 6 + k, 0), 1e-14);
      EXPECT_NEAR(a.top()(t, 6 + k, 0), b.top()(6 - t, k, 0), 1e-14);
    }
}

TEST(Bgru, BatchedEqualsPerWindowBitwise) {
  const ModelShape shape{4, 7, 2, 2};
  const auto m = init_params<float>(shape, 1);
  const std::size_t batch = 45, steps = 9;
  SeqBatch<float> in(steps, 4, batch);
  Rng rng(2);
  for (auto& v : in.values()) v = static_cast<float>(rng.normal());
  const auto all = model_forward(m, in);
  for (std::size_t b = 0; b < batch; ++b) {
    SeqBatch<float> one(steps, 4, 1);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t f = 0; f < 4; ++f) one(t, f, 0) = in(t, f, b);
    const auto single = model_forward(m, one);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t o = 0; o < 2; ++o) EXPECT_EQ(all.prediction(t, o, b), single.prediction(t, o, 0));
  }
}

TEST(Head, ConstantBias) {
  const ModelShape shape{4, 3, 1, 2};
  ModelParams<double> m(shape);
  m.head().b[0] = 0.3;
  m.head().b[1] = -0.1;
  SeqBatch<double> states(5, 6, 1);
  states.fill(0.7);
  const auto out = linear_head(states, m.head());
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(out(t, 0, 0), 0.3);
    EXPECT_EQ(out(t, 1, 0), -0.1);
  }
  m.head().w[0 * 6 + 2] = 1.0;  // copies state row 2 into the real output
  m.head().b[0] = 0.0;
  states(3, 2, 0) = -0.25;
  EXPECT_EQ(linear_head(states, m.head())(3, 0, 0), -0.25);
  EXPECT_THROW(linear_head(SeqBatch<double>(5, 5, 1), m.head()), ArgumentError);
}

TEST(Loss, Definition) {
  const auto h = random_truth(6, 1);
  const auto truth = truth_batch<double>(h);
  const auto zero = mse_loss_and_grad(truth, truth);
  EXPECT_EQ(zero.loss, 0.0);
  for (double g : zero.grad.values()) EXPECT_EQ(g, 0.0);
  auto shifted = truth;
  for (std::size_t t = 0; t < 6; ++t) shifted(t, 0, 0) += 1.0;
  const auto lg = mse_loss_and_grad(shifted, truth);
  EXPECT_NEAR(lg.loss, 1.0, 1e-15);
  for (std::size_t t = 0; t < 6; ++t) {
    EXPECT_NEAR(lg.grad(t, 0, 0), 2.0 / 6.0, 1e-15);
    EXPECT_EQ(lg.grad(t, 1, 0), 0.0);
  }
  EXPECT_THROW(mse_loss_and_grad(SeqBatch<double>(5, 2, 1), truth), ArgumentError);
}

TEST(Loss, GradientStepDescends) {
  const ModelShape shape{4, 6, 2, 2};
  auto m = init_params<double>(shape, 5);
  const auto x = features_batch<double>(random_features(10, 6));
  const auto y = truth_batch<double>(random_truth(10, 7));
  const auto pass = model_forward(m, x);
  const auto lg = mse_loss_and_grad(pass.prediction, y);
  ModelParams<double> g(shape);
  model_backward(m, pass, lg.grad, g);
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] -= 1e-3 * g.values()[i];
  EXPECT_LT(window_loss(m, x, y), lg.loss);
}

TEST(Adam, ZeroGradient) {
  const ModelShape shape{4, 3, 1, 2};
  auto m = init_params<double>(shape, 1);
  const auto before = m;
  AdamState<double> state(shape, {});
  adam_step(m, ModelParams<double>(shape), state);
  EXPECT_EQ(m, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepIsSignTimesLearningRate) {
  const ModelShape shape{4, 3, 1, 2};
  auto m = init_params<double>(shape, 1);
  const auto before = m;
  ModelParams<double> g(shape);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = (i % 3 == 0 ? -1.0 : 1.0) * (0.01 + 0.1 * (i % 7));
  AdamState<double> state(shape, {});
  adam_step(m, g, state);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double expected = -0.001 * (g.values()[i] > 0 ? 1.0 : -1.0);
    EXPECT_NEAR(m.values()[i] - before.values()[i], expected, 1e-8);
  }
}

TEST(Adam, ConvexQuadraticDescends) {
  // f(theta) = 0.5 sum a_i (theta_i - c_i)^2
  const ModelShape shape{4, 2, 1, 2};
  auto m = init_params<double>(shape, 2);
  std::vector<double> a(m.size()), c(m.size());
  Rng rng(3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    a[i] = 0.5 + rng.uniform();
    c[i] = 2.0 + rng.uniform();
  }
  auto loss = [&] {
    double f = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) f += 0.5 * a[i] * std::pow(m.values()[i] - c[i], 2);
    return f;
  };
  AdamState<double> state(shape, {0.01, 0.9, 0.999, 1e-8});
  std::vector<double> history{loss()};
  ModelParams<double> g(shape);
  for (int step = 0; step < 100; ++step) {
    for (std::size_t i = 0; i < m.size(); ++i) g.values()[i] = a[i] * (m.values()[i] - c[i]);
    adam_step(m, g, state);
    history.push_back(loss());
  }
  for (std::size_t s = 10; s < history.size(); ++s) EXPECT_LT(history[s], history[s - 10]) << s;
}

TEST(GradCheck, RandomizedSmallModels) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t hidden = 2 + seed % 4;
    const std::size_t steps = 3 + seed % 6;
    const ModelShape shape{4, hidden, 2, 2};
    const auto m = init_params<double>(shape, seed);
    const auto report = grad_check(m, random_features(steps, 100 + seed), random_truth(steps, 200 + seed));
    EXPECT_LT(report.max_relative_error, 1e-5)
        << "seed " << seed << " " << report.worst_tensor << "[" << report.worst_index << "] " << report.analytic
        << " vs " << report.numeric;
    EXPECT_EQ(report.checked, shape.parameter_count());
  }
}

TEST(GradCheck, ZeroInputAndDoubledHidden) {
  const ModelShape shape{4, 3, 2, 2};
  const auto m = init_params<double>(shape, 4);
  FeatureMatrix zero(5);
  const auto report = grad_check(m, zero, ComplexSeq(5));
  EXPECT_TRUE(std::isfinite(report.max_relative_error));
  EXPECT_LT(report.max_relative_error, 1e-5);
  const ModelShape wide{4, 6, 2, 2};
  EXPECT_LT(grad_check(init_params<double>(wide, 4), random_features(5, 1), random_truth(5, 2)).max_relative_error,
            1e-5);
}

TEST(GradCheck, BatchGradientIsSumOfWindowGradients) {
  const ModelShape shape{4, 5, 2, 2};
  const auto m = init_params<float>(shape, 6);
  const std::size_t batch = 4, steps = 6;
  SeqBatch<float> in(steps, 4, batch), truth(steps, 2, batch);
  Rng rng(9);
  for (auto& v : in.values()) v = static_cast<float>(rng.normal());
  for (auto& v : truth.values()) v = static_cast<float>(rng.normal());
  ModelParams<float> g_all(shape);
  {
    const auto pass = model_forward(m, in);
    model_backward(m, pass, mse_loss_and_grad(pass.prediction, truth).grad, g_all);
  }
  ModelParams<double> g_sum(shape);
  for (std::size_t b = 0; b < batch; ++b) {
    SeqBatch<float> one(steps, 4, 1), y(steps, 2, 1);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t f = 0; f < 4; ++f) one(t, f, 0) = in(t, f, b);
      for (std::size_t f = 0; f < 2; ++f) y(t, f, 0) = truth(t, f, b);
    }
    ModelParams<float> g(shape);
    const auto pass = model_forward(m, one);
    model_backward(m, pass, mse_loss_and_grad(pass.prediction, y).grad, g);
    for (std::size_t i = 0; i < g.size(); ++i) g_sum.values()[i] += g.values()[i] / batch;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g_all.size(); ++i) {
    num += std::pow(g_all.values()[i] - g_sum.values()[i], 2);
    den += std::pow(g_sum.values()[i], 2);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-6);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const auto m = init_params<float>(ModelShape{}, 12);
  const std::string bytes = encode_checkpoint(m);
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  const auto path = std::filesystem::temp_directory_path() / "chanest_ckpt_test.fnn";
  save_checkpoint(path, m);
  EXPECT_EQ(load_checkpoint(path), m);
  std::filesystem::remove(path);
}

TEST(Checkpoint, NonDefaultShapeIsInferred) {
  const ModelShape shape{4, 9, 3, 2};
  const auto m = init_params<float>(shape, 1);
  const auto back = decode_checkpoint(encode_checkpoint(m));
  EXPECT_EQ(back.shape(), shape);
  EXPECT_EQ(back, m);
}

TEST(Checkpoint, DetectsCorruption) {
  std::string bytes = encode_checkpoint(init_params<float>(ModelShape{4, 3, 1, 2}, 1));
  std::string flipped = bytes;
  flipped[40] ^= 0x01;
  EXPECT_THROW(decode_checkpoint(flipped), DataError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 9)), DataError);
  EXPECT_THROW(decode_checkpoint("FNN1"), DataError);
}
