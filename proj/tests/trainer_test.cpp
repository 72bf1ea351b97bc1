/*
 * Copyright 2026 The NNTC Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nntc/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "nntc/error.hpp"
#include "oracles.hpp"

namespace nntc {
namespace {

using testing::random_tensor;

ModelConfig tiny(Variant v, std::size_t iterations = 4) {
  ModelConfig c = ModelConfig::defaults(v);
  c.max_iterations = iterations;
  c.hidden_units = 16;
  c.bits_per_iteration = 8;
  c.channels = 1;
  c.conv_filters = {4, 6, 8};
  if (c.is_conv()) {
    c.patch_size = 16;
    c.bits_per_iteration = 32;
  }
  return c;
}

Tensor random_patches(const ModelConfig &c, std::size_t batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({batch, c.channels, c.patch_size, c.patch_size}, rng, -0.9, 0.9);
}

std::vector<Image> smooth_images(std::size_t n, std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Image> out;
  for (std::size_t i = 0; i < n; ++i) {
    Image img(side, side, 1);
    const double a = u(rng) * 6.0, b = u(rng) * 6.0, p = u(rng) * 6.28;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const double v = std::sin(a * x / side + b * y / side + p);
        img.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(127.5 + 100.0 * v));
      }
    }
    out.push_back(img);
  }
  return out;
}

double sum_sq(const Tensor &t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return s;
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterSet params;
  std::mt19937_64 rng(1);
  params.add("w", random_tensor({3, 4}, rng));
  const Tensor before = params[0].value;
  AdamState adam = AdamState::for_params(params);
  for (int i = 0; i < 10; ++i) adam_update(adam, params, {Tensor({3, 4}, 0.0)}, 0.1);
  EXPECT_EQ(params[0].value, before);
  EXPECT_EQ(adam.step, 10u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  // With bias correction, m_hat = g and v_hat = g^2 after one step.
  ParameterSet params;
  params.add("w", Tensor({4}, 0.0));
  AdamState adam = AdamState::for_params(params);
  Tensor g({4});
  g[0] = 3.0;
  g[1] = -0.02;
  g[2] = 1e3;
  g[3] = -7.5;
  adam_update(adam, params, {g}, 0.01);
  for (std::size_t i = 0; i < 4; ++i) {
    const double expected = -0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(params[0].value[i], expected, 1e-15);
  }
}

TEST(Adam, MatchesHandRolledRecurrence) {
  ParameterSet params;
  params.add("w", Tensor({1}, 0.5));
  AdamState adam = AdamState::for_params(params);
  double w = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 20; ++t) {
    const double g = std::sin(0.7 * t) + 0.1 * w;
    Tensor gt({1}, g);
    adam_update(adam, params, {gt}, 0.05);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    w -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    ASSERT_NEAR(params[0].value[0], w, 1e-12) << "t=" << t;
  }
}

TEST(Adam, MinimizesQuadratic) {
  ParameterSet params;
  params.add("w", Tensor({1}, 0.0));
  AdamState adam = AdamState::for_params(params);
  for (int i = 0; i < 5000; ++i) {
    const double w = params[0].value[0];
    adam_update(adam, params, {Tensor({1}, 2.0 * (w - 3.0))}, 0.1);
  }
  EXPECT_NEAR(params[0].value[0], 3.0, 1e-3);
}

TEST(Adam, RejectsMismatchedGradients) {
  ParameterSet params;
  params.add("w", Tensor({2}, 0.0));
  AdamState adam = AdamState::for_params(params);
  try {
    adam_update(adam, params, {Tensor({3}, 0.0)}, 0.1);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

// Loss oracle: mean over stages and values of the squared stage residuals.
TEST(Loss, EqualsMeanSquaredStageResiduals) {
  for (Variant v : {Variant::kFcResidual, Variant::kFcLstm, Variant::kConvResidual,
                    Variant::kConvLstm}) {
    const ModelConfig c = tiny(v);
    const Model m = Model::build(c, 11);
    const Tensor x = random_patches(c, 3, 5);
    for (std::size_t n : {1u, 2u, 4u}) {
      const auto out = run_chain(m, x, n, BinarizeMode::kInference);
      double expected = 0.0;
      for (const auto &o : out) expected += sum_sq(o.residual);
      expected /= static_cast<double>(x.size() * n);
      Graph g;
      const NodeId l = chain_loss(g, m, g.constant(x), n, BinarizeMode::kInference, {});
      EXPECT_NEAR(g.value(l)[0], expected, 1e-12 * std::max(1.0, expected))
          << variant_name(v) << " n=" << n;
    }
  }
}

TEST(Loss, IndependentOfBatchDuplication) {
  const ModelConfig c = tiny(Variant::kFcResidual);
  const Model m = Model::build(c, 2);
  const Tensor x = random_patches(c, 2, 9);
  Tensor xx({4, c.channels, c.patch_size, c.patch_size});
  std::copy(x.data().begin(), x.data().end(), xx.data().begin());
  std::copy(x.data().begin(), x.data().end(), xx.data().begin() + x.size());
  Graph g1, g2;
  const double a = g1.value(chain_loss(g1, m, g1.constant(x), 3, BinarizeMode::kInference, {}))[0];
  const double b =
      g2.value(chain_loss(g2, m, g2.constant(xx), 3, BinarizeMode::kInference, {}))[0];
  EXPECT_NEAR(a, b, 1e-14);
}

TEST(Loss, ZeroWhenTheDecoderReproducesTheInput) {
  // Zero all parameters: every prediction is tanh(0) = 0, so a zero input is
  // reconstructed exactly and its loss vanishes.
  const ModelConfig c = tiny(Variant::kFcResidual);
  Model m = Model::build(c, 4);
  for (auto &p : m.params()) std::fill(p.value.data().begin(), p.value.data().end(), 0.0);
  const Tensor x({2, c.channels, c.patch_size, c.patch_size}, 0.0);
  Graph g;
  EXPECT_EQ(g.value(chain_loss(g, m, g.constant(x), 4, BinarizeMode::kInference, {}))[0], 0.0);
}

TEST(Loss, DecoderGradientMatchesFiniteDifferences) {
  // With one stage the bits do not depend on decoder weights, so the
  // decoder gradient is an ordinary derivative. Recurrent columns see a zero
  // state and have an exactly zero gradient, so h is kept large enough that
  // roundoff in the numeric estimate stays below the relative floor.
  for (Variant v : {Variant::kFcResidual, Variant::kFcLstm, Variant::kConvResidual}) {
    const ModelConfig c = tiny(v);
    Model m = Model::build(c, 21);
    const Tensor x = random_patches(c, 2, 8);
    auto build = [&](Graph &g) {
      return chain_loss(g, m, g.constant(x), 1, BinarizeMode::kStochastic, {3, 0, 0, 0});
    };
    for (std::size_t p = 0; p < m.params().size(); ++p) {
      if (m.params()[p].name.rfind("dec", 0) != 0) continue;
      EXPECT_LE(finite_diff_check(build, m.params(), p, 1e-4), 1e-4)
          << variant_name(v) << " " << m.params()[p].name;
    }
  }
}

TEST(TrainStep, ReturnsPreUpdateLossAndChangesWeights) {
  const ModelConfig c = tiny(Variant::kFcResidual);
  Model m = Model::build(c, 3);
  const Tensor x = random_patches(c, 4, 2);
  TrainConfig tc;
  tc.n_iterations = 4;
  const NoiseSource noise{7, 0, 0, 0};
  Graph g;
  const double expected =
      g.value(chain_loss(g, m, g.constant(x), 4, BinarizeMode::kStochastic, noise))[0];
  const Tensor before = m.params()[0].value;
  AdamState adam;
  EXPECT_EQ(train_step(m, x, tc, adam, noise), expected);
  EXPECT_EQ(adam.step, 1u);
  EXPECT_FALSE(m.params()[0].value == before);
}

TEST(TrainStep, NonFiniteLossAbortsWithStepAndRate) {
  const ModelConfig c = tiny(Variant::kFcResidual);
  Model m = Model::build(c, 3);
  const std::size_t dec = *m.params().find("dec2/w");
  m.params()[dec].value[0] = std::numeric_limits<double>::infinity();
  const Model snapshot = m;
  TrainConfig tc;
  tc.n_iterations = 2;
  tc.learning_rate = 0.25;
  AdamState adam;
  try {
    train_step(m, random_patches(c, 2, 1), tc, adam, {});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0.25"), std::string::npos) << msg;
  }
  EXPECT_EQ(adam.step, 0u);
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    const auto a = m.params()[i].value.data();
    const auto b = snapshot.params()[i].value.data();
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin(), [](double p, double q) {
      return p == q || (std::isnan(p) && std::isnan(q));
    }));
  }
}

TEST(Batches, EachEpochIsAPermutation) {
  const std::size_t images = 10, batch = 4;
  std::vector<std::size_t> stream;
  for (std::size_t s = 0; s < 10; ++s) {
    const auto b = batch_indices(images, batch, s, 42);
    ASSERT_EQ(b.size(), batch);
    stream.insert(stream.end(), b.begin(), b.end());
  }
  for (std::size_t e = 0; e < 4; ++e) {
    std::set<std::size_t> seen(stream.begin() + e * images, stream.begin() + (e + 1) * images);
    EXPECT_EQ(seen.size(), images) << "epoch " << e;
  }
  EXPECT_EQ(batch_indices(images, batch, 3, 42), batch_indices(images, batch, 3, 42));
  EXPECT_NE(batch_indices(images, batch, 0, 42), batch_indices(images, batch, 0, 43));
}

TEST(Batches, BatchLargerThanDatasetWraps) {
  const auto b = batch_indices(3, 7, 0, 1);
  EXPECT_EQ(b.size(), 7u);
  for (std::size_t i : b) EXPECT_LT(i, 3u);
}

TEST(PatchSetTest, GroupsPatchesPerImage) {
  const ModelConfig c = tiny(Variant::kFcResidual);
  const auto imgs = smooth_images(3, 16, 1);
  const PatchSet ps(imgs, c);
  EXPECT_EQ(ps.images(), 3u);
  EXPECT_EQ(ps.patches_per_image(), 4u);
  const Tensor one = ps.gather({2});
  EXPECT_EQ(one, extract_patches(scale_to_network(imgs[2]), 8));
  EXPECT_EQ(ps.gather({0, 2}).dim(0), 8u);
  EXPECT_THROW(ps.gather({3}), Error);
  Image rgb(16, 16, 3);
  EXPECT_THROW(PatchSet({rgb}, c), Error);
}

TEST(Train, DeterministicAndResumable) {
  const ModelConfig c = tiny(Variant::kFcLstm);
  const PatchSet data(smooth_images(6, 16, 3), c);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.steps = 4;
  tc.n_iterations = 3;
  tc.learning_rate = 0.01;
  tc.seed = 9;

  Model a = Model::build(c, 5), b = Model::build(c, 5), r = Model::build(c, 5);
  AdamState sa, sb, sr;
  const auto la = train(a, sa, data, tc).losses;
  const auto lb = train(b, sb, data, tc).losses;
  EXPECT_EQ(la, lb);

  TrainConfig half = tc;
  half.steps = 2;
  auto lr = train(r, sr, data, half).losses;
  const auto rest = train(r, sr, data, half).losses;
  lr.insert(lr.end(), rest.begin(), rest.end());
  EXPECT_EQ(lr, la);
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params()[i].value, r.params()[i].value);
    EXPECT_EQ(a.params()[i].value, b.params()[i].value);
  }
}

TEST(Train, LossDecreasesOnSmoothImages) {
  const ModelConfig c = tiny(Variant::kFcResidual);
  const PatchSet data(smooth_images(8, 16, 4), c);
  TrainConfig tc;
  tc.batch_size = 4;
  tc.steps = 150;
  tc.n_iterations = 4;
  tc.learning_rate = 0.01;
  Model m = Model::build(c, 6);
  AdamState adam;
  std::vector<TrainLogRecord> logs;
  tc.log_every = 50;
  const auto s = train(m, adam, data, tc, [&](const TrainLogRecord &r) { logs.push_back(r); });
  ASSERT_EQ(s.losses.size(), 150u);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    head += s.losses[i];
    tail += s.losses[140 + i];
  }
  EXPECT_LT(tail, 0.7 * head);
  ASSERT_EQ(logs.size(), 3u);
  EXPECT_EQ(logs[0].step, 50u);
  EXPECT_EQ(logs[2].step, 150u);
  EXPECT_EQ(format_log({3, 0.5, 0.001}), "step=3 loss=0.5 lr=0.001");
}

TEST(Train, TimeBudgetStopsEarly) {
  const ModelConfig c = tiny(Variant::kFcResidual);
  const PatchSet data(smooth_images(2, 16, 4), c);
  TrainConfig tc;
  tc.steps = 1000000;
  tc.n_iterations = 2;
  tc.time_budget_seconds = 0.2;
  Model m = Model::build(c, 6);
  AdamState adam;
  const auto s = train(m, adam, data, tc);
  EXPECT_TRUE(s.stopped_by_time);
  EXPECT_LT(s.steps_run, tc.steps);
  EXPECT_GE(s.seconds, 0.2);
}

TEST(TrainConfigTest, Validation) {
  const ModelConfig c = tiny(Variant::kFcResidual, 4);
  TrainConfig t;
  t.n_iterations = 4;
  EXPECT_NO_THROW(t.validate(c));
  t.n_iterations = 5;
  EXPECT_THROW(t.validate(c), Error);
  t.n_iterations = 4;
  t.learning_rate = 0.0;
  EXPECT_THROW(t.validate(c), Error);
  t.learning_rate = std::nan("");
  EXPECT_THROW(t.validate(c), Error);
  t.learning_rate = 1e-3;
  t.batch_size = 0;
  EXPECT_THROW(t.validate(c), Error);
}

}  // namespace
}  // namespace nntc
