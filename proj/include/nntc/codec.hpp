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

// Wire format, integers little-endian:
//   "NNTC" | u8 version | u64 model fingerprint | u16 width | u16 height |
//   u8 patch | u16 bits per iteration | u8 mode (0 uniform, 1 dynamic) |
//   uniform: u8 iterations, dynamic: u8 iterations per patch (row-major) |
//   payload.
// Payload: patches in row-major order, each holding its planes in order,
// MSB first, +1 -> 1 and -1 -> 0, zero-padded to a whole byte per patch.

#ifndef NNTC_CODEC_HPP
#define NNTC_CODEC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nntc/image.hpp"
#include "nntc/model.hpp"

namespace nntc {

inline constexpr std::uint8_t kStreamVersion = 1;
/// Largest iteration count the format accepts, independent of any model.
inline constexpr std::size_t kStreamMaxIterations = 64;

enum class StreamMode : std::uint8_t { kUniform = 0, kDynamic = 1 };

struct Bitstream {
  std::uint64_t fingerprint = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t patch_size = 0;
  std::uint16_t bits_per_iteration = 0;
  StreamMode mode = StreamMode::kUniform;
  /// One entry per patch in both modes; uniform streams repeat one value.
  std::vector<std::uint8_t> iterations;
  std::vector<std::uint8_t> payload;

  std::size_t patch_count() const;
  std::size_t max_iterations() const;
  /// ceil(iterations * bits / 8) for patch p.
  std::size_t patch_bytes(std::size_t p) const;
  std::size_t expected_payload_bytes() const;
  /// Payload bits per image pixel.
  double bpp() const;

  friend bool operator==(const Bitstream &, const Bitstream &) = default;
};

std::vector<std::uint8_t> serialize(const Bitstream &stream);
/// kBadMagic, kVersionMismatch, kTruncated (header), kMalformed (invariants,
/// trailing bytes), kShortPayload (names the first incomplete patch).
Bitstream deserialize(const std::vector<std::uint8_t> &bytes);

/// Bit plane t of patch p as +-1 values, shape (bits_per_iteration).
Tensor unpack_plane(const Bitstream &stream, std::size_t patch, std::size_t t);

struct Encoded {
  Bitstream stream;
  /// What any decoder holding the same model reconstructs.
  Image reconstruction;
};

/// Uniform mode with inference binarization.
Encoded encode_image(const Model &model, const Image &img, std::size_t iterations);
/// Largest uniform count whose payload fits byte_budget (header excluded).
Encoded encode_with_budget(const Model &model, const Image &img, std::size_t byte_budget);
/// Payload bytes of a uniform stream at the given count.
std::size_t uniform_payload_bytes(const ModelConfig &config, std::size_t width,
                                  std::size_t height, std::size_t iterations);

enum class QualityMetric { kPsnr, kSsim };

struct QualityTarget {
  QualityMetric metric = QualityMetric::kPsnr;
  /// dB for PSNR, mean clamped SSIM otherwise.
  double threshold = 30.0;
  std::size_t min_iterations = 1;
  std::size_t max_iterations = 16;
};

/// Per patch: the first count in [min, max] whose reconstruction meets
/// the threshold, or max.
Encoded encode_dynamic(const Model &model, const Image &img, const QualityTarget &target);

/// kModelMismatch on a foreign fingerprint, kShortPayload, kMalformed.
Image decode_image(const Model &model, const Bitstream &stream);
/// Output t-1 is the image with every patch truncated to min(t, its count).
std::vector<Image> decode_progressive(const Model &model, const Bitstream &stream);
/// The same stream cut to at most t planes per patch.
Bitstream truncate_stream(const Bitstream &stream, std::size_t t);

}  // namespace nntc

#endif  // NNTC_CODEC_HPP
