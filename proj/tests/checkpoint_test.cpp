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

#include "nntc/checkpoint.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "nntc/error.hpp"
#include "oracles.hpp"

namespace nntc {
namespace {

ModelConfig small(Variant v) {
  ModelConfig c = ModelConfig::defaults(v);
  c.max_iterations = 4;
  c.hidden_units = 12;
  c.conv_filters = {4, 6, 8};
  if (c.is_conv()) {
    c.patch_size = 16;
    c.bits_per_iteration = 32;
  }
  return c;
}

ErrorCode code_of(const std::vector<std::uint8_t> &bytes) {
  try {
    deserialize_checkpoint(bytes);
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode{};
}

std::string temp_path(const char *name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(CheckpointTest, RoundTripIsBitExactForEveryVariant) {
  for (Variant v : {Variant::kFcResidual, Variant::kFcLstm, Variant::kConvResidual,
                    Variant::kConvLstm}) {
    const Model m = Model::build(small(v), 77);
    const Checkpoint ck = deserialize_checkpoint(serialize_checkpoint(m));
    EXPECT_EQ(ck.model.config(), m.config());
    EXPECT_EQ(ck.model.seed(), 77u);
    EXPECT_FALSE(ck.adam.has_value());
    ASSERT_EQ(ck.model.params().size(), m.params().size());
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      EXPECT_EQ(ck.model.params()[i].name, m.params()[i].name);
      EXPECT_EQ(ck.model.params()[i].value, m.params()[i].value);
    }
    EXPECT_EQ(model_fingerprint(ck.model), model_fingerprint(m));
  }
}

TEST(CheckpointTest, RestoredModelEncodesIdentically) {
  const ModelConfig c = small(Variant::kConvLstm);
  Model m = Model::build(c, 5);
  // Perturb away from the seeded init so the test depends on stored values.
  for (auto &p : m.params()) p.value[0] += 0.125;
  const Checkpoint ck = deserialize_checkpoint(serialize_checkpoint(m));
  std::mt19937_64 rng(3);
  const Tensor x = testing::random_tensor({2, 3, 16, 16}, rng, -0.9, 0.9);
  const auto a = run_chain(m, x, 4, BinarizeMode::kInference);
  const auto b = run_chain(ck.model, x, 4, BinarizeMode::kInference);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(a[t].bits, b[t].bits);
    EXPECT_EQ(a[t].prediction, b[t].prediction);
  }
}

TEST(CheckpointTest, OptimizerStateRoundTrips) {
  const Model m = Model::build(small(Variant::kFcResidual), 1);
  AdamState adam = AdamState::for_params(m.params());
  adam.step = 321;
  adam.m[0][1] = -0.5;
  adam.v.back()[0] = 2.25;
  const Checkpoint ck = deserialize_checkpoint(serialize_checkpoint(m, &adam));
  ASSERT_TRUE(ck.adam.has_value());
  EXPECT_EQ(ck.adam->step, 321u);
  EXPECT_EQ(ck.adam->beta2, 0.999);
  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    EXPECT_EQ(ck.adam->m[i], adam.m[i]);
    EXPECT_EQ(ck.adam->v[i], adam.v[i]);
  }
  // Optimizer state does not change the model identity.
  EXPECT_EQ(model_fingerprint(ck.model), model_fingerprint(m));
}

TEST(CheckpointTest, FingerprintTracksWeights) {
  Model m = Model::build(small(Variant::kFcLstm), 1);
  const std::uint64_t before = model_fingerprint(m);
  m.params()[0].value[0] = std::nextafter(m.params()[0].value[0], 10.0);
  EXPECT_NE(model_fingerprint(m), before);
  EXPECT_NE(model_fingerprint(Model::build(small(Variant::kFcLstm), 2)), before);
}

TEST(CheckpointTest, EveryTruncationIsReported) {
  const Model m = Model::build(small(Variant::kFcResidual), 1);
  AdamState adam = AdamState::for_params(m.params());
  const auto bytes = serialize_checkpoint(m, &adam);
  for (std::size_t n = 0; n < bytes.size(); n += 1 + n / 16) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + n);
    ASSERT_EQ(code_of(cut), ErrorCode::kTruncated) << "length " << n;
  }
}

TEST(CheckpointTest, DistinctErrorsForDistinctDamage) {
  const Model m = Model::build(small(Variant::kFcResidual), 1);
  auto bytes = serialize_checkpoint(m);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of(bad_magic), ErrorCode::kBadMagic);
  EXPECT_EQ(code_of({'P', 'K'}), ErrorCode::kBadMagic);

  auto version = bytes;
  version[8] = 2;
  EXPECT_EQ(code_of(version), ErrorCode::kVersionMismatch);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(code_of(trailing), ErrorCode::kMalformed);

  // Shrink the stored hidden width: the stored tensors no longer fit.
  ModelConfig other = m.config();
  other.hidden_units = 11;
  const std::string a = "\"hidden_units\":12", b = "\"hidden_units\":11";
  std::string s(bytes.begin(), bytes.end());
  const auto at = s.find(a);
  ASSERT_NE(at, std::string::npos);
  s.replace(at, a.size(), b);
  EXPECT_EQ(code_of({s.begin(), s.end()}), ErrorCode::kShapeMismatch);
}

TEST(CheckpointTest, FileRoundTripAndConfigMismatch) {
  const std::string path = temp_path("nntc_checkpoint_test.ckpt");
  const Model m = Model::build(small(Variant::kConvResidual), 9);
  save_checkpoint(path, m);
  EXPECT_EQ(model_fingerprint(load_checkpoint(path).model), model_fingerprint(m));
  EXPECT_NO_THROW(load_checkpoint(path, m.config()));
  ModelConfig other = m.config();
  other.max_iterations = 8;
  try {
    load_checkpoint(path, other);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigMismatch);
  }
  std::remove(path.c_str());
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace nntc
