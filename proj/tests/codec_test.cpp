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

#include "nntc/codec.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "nntc/checkpoint.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

ModelConfig small(Variant v) {
  ModelConfig c = ModelConfig::defaults(v);
  c.max_iterations = 6;
  c.hidden_units = 16;
  c.bits_per_iteration = 6;
  c.conv_filters = {4, 6, 8};
  if (c.is_conv()) {
    c.patch_size = 16;
    c.bits_per_iteration = 16;  // 1 bit per bottleneck pixel on 4x4
  }
  return c;
}

Image random_image(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(w, h, c);
  for (auto &v : img.pixels) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

ErrorCode code_of(const std::function<void()> &f, std::string *msg = nullptr) {
  try {
    f();
  } catch (const Error &e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  return ErrorCode{};
}

const Variant kAll[] = {Variant::kFcResidual, Variant::kFcLstm, Variant::kConvResidual,
                        Variant::kConvLstm};

// Packing oracle: concatenate bit characters per patch, pad, then parse
// groups of eight as binary numbers.
std::vector<std::uint8_t> oracle_payload(const std::vector<StageOutput> &outputs,
                                         std::size_t patches) {
  std::vector<std::uint8_t> out;
  for (std::size_t p = 0; p < patches; ++p) {
    std::string bits;
    for (const auto &o : outputs) {
      const std::size_t w = o.bits.dim(1);
      for (std::size_t i = 0; i < w; ++i) bits += o.bits[p * w + i] > 0 ? '1' : '0';
    }
    while (bits.size() % 8) bits += '0';
    for (std::size_t i = 0; i < bits.size(); i += 8) {
      out.push_back(static_cast<std::uint8_t>(std::stoi(bits.substr(i, 8), nullptr, 2)));
    }
  }
  return out;
}

TEST(Rate, DefaultConvModelSixteenBytesPerIteration) {
  const Model m = Model::build(ModelConfig::defaults(Variant::kConvLstm), 1);
  const Image img = random_image(32, 32, 3, 1);
  for (std::size_t it = 1; it <= 4; ++it) {
    EXPECT_EQ(encode_image(m, img, it).stream.payload.size(), 16 * it);
  }
  const Encoded e = encode_with_budget(m, img, 64);
  EXPECT_EQ(e.stream.iterations[0], 4);
  EXPECT_EQ(e.stream.payload.size(), 64u);
}

TEST(Rate, FcFourBitsSixteenIterationsIs128Bytes) {
  ModelConfig c = ModelConfig::defaults(Variant::kFcResidual);
  c.bits_per_iteration = 4;
  const Model m = Model::build(c, 1);
  const Encoded e = encode_image(m, random_image(32, 32, 3, 2), 16);
  EXPECT_EQ(e.stream.patch_count(), 16u);
  EXPECT_EQ(e.stream.payload.size(), 128u);
}

TEST(Rate, BppLadder) {
  const ModelConfig c = ModelConfig::defaults(Variant::kConvLstm);
  const double expected[] = {0.625, 0.875, 1.125, 1.375};
  const std::size_t its[] = {5, 7, 9, 11};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(8.0 * uniform_payload_bytes(c, 32, 32, its[i]) / (32.0 * 32.0), expected[i]);
  }
}

TEST(Budget, FloorRuleAndMinimum) {
  const Model m = Model::build(ModelConfig::defaults(Variant::kConvResidual), 1);
  const Image img = random_image(32, 32, 3, 3);
  EXPECT_EQ(encode_with_budget(m, img, 70).stream.iterations[0], 4);
  EXPECT_EQ(encode_with_budget(m, img, 16).stream.iterations[0], 1);
  EXPECT_EQ(encode_with_budget(m, img, 100000).stream.iterations[0], 16);
  std::string msg;
  EXPECT_EQ(code_of([&] { encode_with_budget(m, img, 10); }, &msg), ErrorCode::kInvalidArgument);
  EXPECT_NE(msg.find("minimum of 16"), std::string::npos) << msg;
}

TEST(Encode, PayloadMatchesPackingOracle) {
  for (Variant v : kAll) {
    const Model m = Model::build(small(v), 4);
    const Image img = random_image(32, 48, 3, 5);
    const Encoded e = encode_image(m, img, 5);
    const Tensor patches = extract_patches(scale_to_network(img), m.config().patch_size);
    const auto outputs = run_chain(m, patches, 5, BinarizeMode::kInference);
    EXPECT_EQ(e.stream.payload, oracle_payload(outputs, patches.dim(0))) << variant_name(v);
    EXPECT_EQ(e.stream.payload.size(), patches.dim(0) * ((5 * m.config().bits_per_iteration + 7) / 8));
  }
}

TEST(Encode, DeterministicAndRejectsBadInput) {
  const Model m = Model::build(small(Variant::kFcLstm), 4);
  const Image img = random_image(16, 24, 3, 5);
  EXPECT_EQ(serialize(encode_image(m, img, 3).stream), serialize(encode_image(m, img, 3).stream));
  EXPECT_EQ(code_of([&] { encode_image(m, random_image(12, 16, 3, 1), 2); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { encode_image(m, img, 0); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { encode_image(m, img, 7); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { encode_image(m, random_image(16, 16, 1, 1), 2); }),
            ErrorCode::kShapeMismatch);
}

TEST(Decode, MatchesEncoderReconstructionExactly) {
  for (Variant v : kAll) {
    const Model m = Model::build(small(v), 6);
    const Image img = random_image(48, 32, 3, 7);
    for (std::size_t it : {1u, 2u, 6u}) {
      const Encoded e = encode_image(m, img, it);
      EXPECT_EQ(decode_image(m, deserialize(serialize(e.stream))), e.reconstruction)
          << variant_name(v) << " " << it;
    }
  }
}

TEST(Decode, ForeignModelIsRejected) {
  const Model a = Model::build(small(Variant::kFcResidual), 1);
  const Model b = Model::build(small(Variant::kFcResidual), 2);
  const Encoded e = encode_image(a, random_image(16, 16, 3, 1), 2);
  std::string msg;
  EXPECT_EQ(code_of([&] { decode_image(b, e.stream); }, &msg), ErrorCode::kModelMismatch);
  EXPECT_NE(msg.find("model mismatch"), std::string::npos);
  const Model c = Model::build(small(Variant::kFcLstm), 1);
  EXPECT_EQ(code_of([&] { decode_progressive(c, e.stream); }), ErrorCode::kModelMismatch);
}

TEST(Decode, TruncatedPayloadNamesThePatch) {
  const Model m = Model::build(small(Variant::kFcResidual), 1);
  // 6 bits x 3 iterations = 18 bits -> 3 bytes per patch, 4 patches.
  const Encoded e = encode_image(m, random_image(16, 16, 3, 1), 3);
  ASSERT_EQ(e.stream.payload.size(), 12u);
  auto bytes = serialize(e.stream);
  bytes.resize(bytes.size() - 4);  // patch 2 loses its last byte
  std::string msg;
  EXPECT_EQ(code_of([&] { deserialize(bytes); }, &msg), ErrorCode::kShortPayload);
  EXPECT_NE(msg.find("patch 2"), std::string::npos) << msg;
  Bitstream s = e.stream;
  s.payload.resize(1);
  EXPECT_EQ(code_of([&] { decode_image(m, s); }, &msg), ErrorCode::kShortPayload);
  EXPECT_NE(msg.find("patch 0"), std::string::npos) << msg;
}

TEST(Progressive, PrefixConsistencyUniformAndDynamic) {
  for (Variant v : kAll) {
    const Model m = Model::build(small(v), 8);
    const Image img = random_image(32, 32, 3, 9);
    const Encoded u = encode_image(m, img, 5);
    const auto frames = decode_progressive(m, u.stream);
    ASSERT_EQ(frames.size(), 5u);
    for (std::size_t t = 1; t <= 5; ++t) {
      EXPECT_EQ(frames[t - 1], decode_image(m, deserialize(serialize(truncate_stream(u.stream, t)))))
          << variant_name(v) << " t=" << t;
    }
    EXPECT_EQ(frames.back(), u.reconstruction);

    // A middling PSNR target spreads counts across patches.
    QualityTarget q{QualityMetric::kPsnr, 8.5, 2, 6};
    const Encoded d = encode_dynamic(m, img, q);
    const auto dframes = decode_progressive(m, d.stream);
    ASSERT_EQ(dframes.size(), d.stream.max_iterations());
    for (std::size_t t = 1; t <= dframes.size(); ++t) {
      EXPECT_EQ(dframes[t - 1], decode_image(m, truncate_stream(d.stream, t))) << variant_name(v);
    }
    EXPECT_EQ(decode_image(m, d.stream), d.reconstruction) << variant_name(v);
  }
}

TEST(Progressive, OneBitPerIterationGrayscale) {
  ModelConfig c = ModelConfig::defaults(Variant::kFcLstm);
  c.channels = 1;
  c.bits_per_iteration = 1;
  c.hidden_units = 16;
  const Model m = Model::build(c, 3);
  const Encoded e = encode_image(m, random_image(16, 8, 1, 4), 16);
  EXPECT_EQ(e.stream.payload.size(), 2u * 2u);
  const auto frames = decode_progressive(m, deserialize(serialize(e.stream)));
  ASSERT_EQ(frames.size(), 16u);
  EXPECT_EQ(frames.back(), e.reconstruction);
  EXPECT_EQ(frames[0].channels, 1u);
}

TEST(Dynamic, ExtremeThresholds) {
  const Model m = Model::build(small(Variant::kConvLstm), 2);
  const Image img = random_image(32, 32, 3, 6);
  for (QualityMetric metric : {QualityMetric::kPsnr, QualityMetric::kSsim}) {
    const auto lo = encode_dynamic(m, img, {metric, -std::numeric_limits<double>::infinity(), 2, 5});
    const auto hi = encode_dynamic(m, img, {metric, std::numeric_limits<double>::infinity(), 2, 5});
    for (auto n : lo.stream.iterations) EXPECT_EQ(n, 2);
    for (auto n : hi.stream.iterations) EXPECT_EQ(n, 5);
    EXPECT_EQ(hi.stream.payload.size(), encode_image(m, img, 5).stream.payload.size());
    EXPECT_EQ(hi.stream.mode, StreamMode::kDynamic);
    EXPECT_EQ(decode_image(m, hi.stream), encode_image(m, img, 5).reconstruction);
  }
  EXPECT_EQ(code_of([&] { encode_dynamic(m, img, {QualityMetric::kPsnr, 30, 3, 2}); }),
            ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { encode_dynamic(m, img, {QualityMetric::kPsnr, 30, 1, 7}); }),
            ErrorCode::kOutOfRange);
}

Bitstream random_stream(std::mt19937_64 &rng) {
  Bitstream s;
  s.fingerprint = rng();
  s.patch_size = static_cast<std::uint8_t>(8 * (1 + rng() % 4));
  s.width = static_cast<std::uint16_t>(s.patch_size * (1 + rng() % 4));
  s.height = static_cast<std::uint16_t>(s.patch_size * (1 + rng() % 4));
  s.bits_per_iteration = static_cast<std::uint16_t>(1 + rng() % 140);
  s.mode = rng() % 2 ? StreamMode::kDynamic : StreamMode::kUniform;
  const auto uniform = static_cast<std::uint8_t>(1 + rng() % kStreamMaxIterations);
  for (std::size_t p = 0; p < s.patch_count(); ++p) {
    s.iterations.push_back(s.mode == StreamMode::kUniform
                               ? uniform
                               : static_cast<std::uint8_t>(1 + rng() % kStreamMaxIterations));
    const std::size_t bits = s.iterations.back() * s.bits_per_iteration;
    for (std::size_t i = 0; i < (bits + 7) / 8; ++i) s.payload.push_back(rng() & 0xff);
    if (bits % 8) s.payload.back() &= static_cast<std::uint8_t>(0xff00u >> (bits % 8));
  }
  return s;
}

TEST(Wire, RandomRoundTripsAndMagic) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Bitstream s = random_stream(rng);
    const auto bytes = serialize(s);
    ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NNTC");
    ASSERT_EQ(deserialize(bytes), s);
    const std::size_t header = 4 + 1 + 8 + 2 + 2 + 1 + 2 + 1 +
                               (s.mode == StreamMode::kUniform ? 1 : s.patch_count());
    ASSERT_EQ(bytes.size(), header + s.expected_payload_bytes());
  }
}

TEST(Wire, HeaderFieldsAreLittleEndian) {
  Bitstream s;
  s.fingerprint = 0x0102030405060708ULL;
  s.width = 0x0110;
  s.height = 8;
  s.patch_size = 8;
  s.bits_per_iteration = 0x0203;
  s.iterations.assign(s.patch_count(), 1);
  s.payload.assign(s.patch_count() * 65, 0);
  const auto b = serialize(s);
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0x08);
  EXPECT_EQ(b[12], 0x01);
  EXPECT_EQ(b[13], 0x10);
  EXPECT_EQ(b[14], 0x01);
  EXPECT_EQ(b[15], 8);
  EXPECT_EQ(b[17], 8);
  EXPECT_EQ(b[18], 0x03);
  EXPECT_EQ(b[19], 0x02);
  EXPECT_EQ(b[20], 0);
  EXPECT_EQ(b[21], 1);
}

TEST(Wire, OneFlippedBitChangesOnePlane) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Bitstream s = random_stream(rng);
    const std::size_t p = rng() % s.patch_count();
    const std::size_t t = rng() % s.iterations[p];
    const std::size_t i = rng() % s.bits_per_iteration;
    std::size_t offset = 0;
    for (std::size_t q = 0; q < p; ++q) offset += s.patch_bytes(q);
    const std::size_t bit = t * s.bits_per_iteration + i;
    Bitstream f = s;
    f.payload[offset + bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    std::size_t changed = 0;
    for (std::size_t q = 0; q < s.patch_count(); ++q) {
      for (std::size_t k = 0; k < s.iterations[q]; ++k) {
        const Tensor a = unpack_plane(s, q, k), b = unpack_plane(f, q, k);
        if (!(a == b)) {
          ++changed;
          EXPECT_EQ(q, p);
          EXPECT_EQ(k, t);
          std::size_t diff = 0;
          for (std::size_t j = 0; j < a.size(); ++j) diff += a[j] != b[j];
          EXPECT_EQ(diff, 1u);
        }
      }
    }
    EXPECT_EQ(changed, 1u);
  }
}

TEST(Wire, DistinctErrors) {
  std::mt19937_64 rng(5);
  Bitstream s = random_stream(rng);
  s.mode = StreamMode::kUniform;
  s.iterations.assign(s.patch_count(), 2);
  s.payload.assign(s.expected_payload_bytes(), 0);
  const auto good = serialize(s);

  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize(bad); }), ErrorCode::kBadMagic);
  EXPECT_EQ(code_of([&] { deserialize({'P', 'N', 'G'}); }), ErrorCode::kBadMagic);
  EXPECT_EQ(code_of([&] { deserialize({'N', 'N'}); }), ErrorCode::kTruncated);
  EXPECT_EQ(code_of([&] { deserialize({good.begin(), good.begin() + 10}); }), ErrorCode::kTruncated);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(code_of([&] { deserialize(bad); }), ErrorCode::kVersionMismatch);
  bad = good;
  bad[20] = 7;
  EXPECT_EQ(code_of([&] { deserialize(bad); }), ErrorCode::kMalformed);
  bad = good;
  bad[21] = 0;  // zero iterations
  EXPECT_EQ(code_of([&] { deserialize(bad); }), ErrorCode::kMalformed);
  bad = good;
  bad.push_back(0);
  EXPECT_EQ(code_of([&] { deserialize(bad); }), ErrorCode::kMalformed);
  bad = good;
  bad[17] = 5;  // patch no longer divides the sides
  EXPECT_EQ(code_of([&] { deserialize(bad); }), ErrorCode::kMalformed);
}

TEST(Wire, NonzeroPaddingRejected) {
  Bitstream s;
  s.width = s.height = s.patch_size = 8;
  s.bits_per_iteration = 3;
  s.iterations = {1};
  s.payload = {0xe0};
  EXPECT_NO_THROW(serialize(s));
  s.payload = {0xe1};
  EXPECT_EQ(code_of([&] { serialize(s); }), ErrorCode::kMalformed);
}

TEST(Wire, HugeUniformHeaderDoesNotAllocate) {
  // 8-pixel patches over 65528 x 65528 would need ~67M counts.
  std::vector<std::uint8_t> b = {'N', 'N', 'T', 'C', 1, 0, 0, 0, 0, 0, 0, 0, 0,
                                 0xf8, 0xff, 0xf8, 0xff, 8, 1, 0, 0, 1};
  EXPECT_EQ(code_of([&] { deserialize(b); }), ErrorCode::kShortPayload);
}

}  // namespace
}  // namespace nntc
