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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "nntc/checkpoint.hpp"
#include "nntc/error.hpp"
#include "nntc/eval.hpp"

namespace nntc {
namespace {

constexpr char kMagic[4] = {'N', 'N', 'T', 'C'};

std::size_t ceil_bytes(std::size_t bits) { return (bits + 7) / 8; }

// Byte offset of every patch plus the total at the end.
std::vector<std::size_t> patch_offsets(const Bitstream &s) {
  std::vector<std::size_t> off(s.patch_count() + 1, 0);
  for (std::size_t p = 0; p < s.patch_count(); ++p) off[p + 1] = off[p] + s.patch_bytes(p);
  return off;
}

// Structural checks shared by deserialize and the decoders. Payload length
// is checked separately so the short case can name its patch.
void check_header(const Bitstream &s) {
  if (s.patch_size == 0) fail(ErrorCode::kMalformed, "stream patch size is zero");
  if (s.width == 0 || s.height == 0 || s.width % s.patch_size || s.height % s.patch_size) {
    fail(ErrorCode::kMalformed, "stream dimensions " + std::to_string(s.width) + "x" +
                                    std::to_string(s.height) + " are not a multiple of patch " +
                                    std::to_string(s.patch_size));
  }
  if (s.bits_per_iteration == 0) fail(ErrorCode::kMalformed, "stream has zero bits per iteration");
  if (s.mode != StreamMode::kUniform && s.mode != StreamMode::kDynamic) {
    fail(ErrorCode::kMalformed, "unknown stream mode");
  }
  if (s.iterations.size() != s.patch_count()) {
    fail(ErrorCode::kMalformed, "stream lists " + std::to_string(s.iterations.size()) +
                                    " iteration counts for " + std::to_string(s.patch_count()) +
                                    " patches");
  }
  for (std::size_t p = 0; p < s.iterations.size(); ++p) {
    if (s.iterations[p] == 0 || s.iterations[p] > kStreamMaxIterations) {
      fail(ErrorCode::kMalformed, "patch " + std::to_string(p) + " has iteration count " +
                                      std::to_string(s.iterations[p]));
    }
    if (s.mode == StreamMode::kUniform && s.iterations[p] != s.iterations[0]) {
      fail(ErrorCode::kMalformed, "uniform stream with differing iteration counts");
    }
  }
}

void check_payload(const Bitstream &s) {
  const auto off = patch_offsets(s);
  if (s.payload.size() < off.back()) {
    const std::size_t p = std::upper_bound(off.begin(), off.end(), s.payload.size()) - off.begin() - 1;
    fail(ErrorCode::kShortPayload, "short payload: patch " + std::to_string(p) + " needs bytes up to " +
                                       std::to_string(off[p + 1]) + ", stream has " +
                                       std::to_string(s.payload.size()));
  }
  if (s.payload.size() > off.back()) {
    fail(ErrorCode::kMalformed, "payload has " + std::to_string(s.payload.size() - off.back()) +
                                    " trailing bytes");
  }
  // Padding bits must be zero so every valid stream has one encoding.
  for (std::size_t p = 0; p < s.patch_count(); ++p) {
    const std::size_t used = s.iterations[p] * s.bits_per_iteration % 8;
    if (used && (s.payload[off[p + 1] - 1] & (0xffu >> used))) {
      fail(ErrorCode::kMalformed, "nonzero padding bits in patch " + std::to_string(p));
    }
  }
}

void check_against_model(const Model &model, const Bitstream &s) {
  check_header(s);
  const ModelConfig &c = model.config();
  if (s.patch_size != c.patch_size || s.bits_per_iteration != c.bits_per_iteration ||
      s.fingerprint != model_fingerprint(model)) {
    fail(ErrorCode::kModelMismatch, "model mismatch: stream was produced by a different model");
  }
  for (std::size_t p = 0; p < s.patch_count(); ++p) {
    if (s.iterations[p] > c.max_iterations) {
      fail(ErrorCode::kMalformed, "patch " + std::to_string(p) + " uses " +
                                      std::to_string(s.iterations[p]) + " iterations, model allows " +
                                      std::to_string(c.max_iterations));
    }
  }
  check_payload(s);
}

Tensor image_patches(const Model &model, const Image &img) {
  const ModelConfig &c = model.config();
  if (img.channels != c.channels) {
    fail(ErrorCode::kShapeMismatch, "image has " + std::to_string(img.channels) +
                                        " channels, model expects " + std::to_string(c.channels));
  }
  if (img.width == 0 || img.height == 0 || img.width % c.patch_size || img.height % c.patch_size) {
    fail(ErrorCode::kInvalidArgument, "image " + std::to_string(img.width) + "x" +
                                          std::to_string(img.height) +
                                          " is not a multiple of the patch size " +
                                          std::to_string(c.patch_size));
  }
  if (img.width > 0xffff || img.height > 0xffff) {
    fail(ErrorCode::kInvalidArgument, "image sides are limited to 65535");
  }
  return extract_patches(scale_to_network(img), c.patch_size);
}

Bitstream empty_stream(const Model &model, const Image &img, StreamMode mode) {
  Bitstream s;
  s.fingerprint = model_fingerprint(model);
  s.width = static_cast<std::uint16_t>(img.width);
  s.height = static_cast<std::uint16_t>(img.height);
  s.patch_size = static_cast<std::uint8_t>(model.config().patch_size);
  s.bits_per_iteration = static_cast<std::uint16_t>(model.config().bits_per_iteration);
  s.mode = mode;
  return s;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t> &out) : out_(out) {}
  // Row `row` of a (B, bits) plane.
  void plane(const Tensor &bits, std::size_t row) {
    const std::size_t w = bits.dim(1);
    for (std::size_t i = 0; i < w; ++i) {
      if (fill_ == 0) out_.push_back(0);
      if (bits[row * w + i] > 0.0) out_.back() |= static_cast<std::uint8_t>(0x80u >> fill_);
      fill_ = (fill_ + 1) % 8;
    }
  }
  void align() { fill_ = 0; }

 private:
  std::vector<std::uint8_t> &out_;
  unsigned fill_ = 0;
};

// Plane t of patch p into row `row` of a (G, bits) tensor.
void read_plane(const Bitstream &s, std::size_t offset, std::size_t t, Tensor &dst,
                std::size_t row) {
  const std::size_t w = s.bits_per_iteration;
  const std::size_t first = t * w;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t bit = first + i;
    const bool one = (s.payload[offset + bit / 8] >> (7 - bit % 8)) & 1u;
    dst[row * w + i] = one ? 1.0 : -1.0;
  }
}

Tensor copy_row(const Tensor &batch, std::size_t row) {
  Shape shape(batch.shape().begin() + 1, batch.shape().end());
  Tensor out(shape);
  const std::size_t n = out.size();
  std::copy_n(batch.data().begin() + row * n, n, out.data().begin());
  return out;
}

void set_row(Tensor &batch, std::size_t row, const Tensor &src, std::size_t src_row) {
  const std::size_t n = batch.size() / batch.dim(0);
  std::copy_n(src.data().begin() + src_row * n, n, batch.data().begin() + row * n);
}

Image to_image(const Tensor &patches, const Bitstream &s) {
  return unscale(stitch_patches(patches, s.height, s.width));
}

}  // namespace

std::size_t Bitstream::patch_count() const {
  if (patch_size == 0) return 0;
  return static_cast<std::size_t>(width / patch_size) * (height / patch_size);
}

std::size_t Bitstream::max_iterations() const {
  return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
}

std::size_t Bitstream::patch_bytes(std::size_t p) const {
  return ceil_bytes(static_cast<std::size_t>(iterations.at(p)) * bits_per_iteration);
}

std::size_t Bitstream::expected_payload_bytes() const {
  std::size_t total = 0;
  for (std::size_t p = 0; p < iterations.size(); ++p) total += patch_bytes(p);
  return total;
}

double Bitstream::bpp() const {
  return 8.0 * static_cast<double>(payload.size()) / (static_cast<double>(width) * height);
}

std::vector<std::uint8_t> serialize(const Bitstream &s) {
  check_header(s);
  check_payload(s);
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kStreamVersion);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(s.fingerprint >> (8 * i)));
  auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  u16(s.width);
  u16(s.height);
  out.push_back(s.patch_size);
  u16(s.bits_per_iteration);
  out.push_back(static_cast<std::uint8_t>(s.mode));
  if (s.mode == StreamMode::kUniform) {
    out.push_back(s.iterations[0]);
  } else {
    out.insert(out.end(), s.iterations.begin(), s.iterations.end());
  }
  out.insert(out.end(), s.payload.begin(), s.payload.end());
  return out;
}

Bitstream deserialize(const std::vector<std::uint8_t> &bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char *what) {
    if (bytes.size() - pos < n) {
      fail(ErrorCode::kTruncated, std::string("stream truncated in header (") + what + ")");
    }
  };
  const std::size_t magic_len = std::min<std::size_t>(4, bytes.size());
  if (std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
    fail(ErrorCode::kBadMagic, "bad magic: not an NNTC stream");
  }
  need(4, "magic");
  pos = 4;
  need(1, "version");
  if (bytes[pos] != kStreamVersion) {
    fail(ErrorCode::kVersionMismatch, "unsupported stream version " + std::to_string(bytes[pos]));
  }
  ++pos;
  Bitstream s;
  need(8, "fingerprint");
  for (int i = 0; i < 8; ++i) s.fingerprint |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
  auto u16 = [&](const char *what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  };
  s.width = u16("width");
  s.height = u16("height");
  need(1, "patch size");
  s.patch_size = bytes[pos++];
  s.bits_per_iteration = u16("bits per iteration");
  need(1, "mode");
  const std::uint8_t mode = bytes[pos++];
  if (mode > 1) fail(ErrorCode::kMalformed, "unknown stream mode " + std::to_string(mode));
  s.mode = static_cast<StreamMode>(mode);
  if (s.patch_size == 0 || s.width % s.patch_size || s.height % s.patch_size) {
    fail(ErrorCode::kMalformed, "stream patch size does not tile the image");
  }
  const std::size_t patches = s.patch_count();
  if (s.mode == StreamMode::kUniform) {
    need(1, "iteration count");
    const std::uint8_t count = bytes[pos++];
    // Bound the count vector by the bytes actually present before allocating.
    const std::size_t per = ceil_bytes(std::size_t{count} * s.bits_per_iteration);
    if (per > 0 && patches > (bytes.size() - pos) / per) {
      const std::size_t p = (bytes.size() - pos) / per;
      fail(ErrorCode::kShortPayload, "short payload: patch " + std::to_string(p) + " of " +
                                         std::to_string(patches) + " is incomplete");
    }
    s.iterations.assign(patches, count);
  } else {
    need(patches, "iteration counts");
    s.iterations.assign(bytes.begin() + pos, bytes.begin() + pos + patches);
    pos += patches;
  }
  check_header(s);
  s.payload.assign(bytes.begin() + pos, bytes.end());
  check_payload(s);
  return s;
}

Tensor unpack_plane(const Bitstream &s, std::size_t patch, std::size_t t) {
  check_header(s);
  check_payload(s);
  if (patch >= s.patch_count() || t >= s.iterations[patch]) {
    fail(ErrorCode::kOutOfRange, "no plane " + std::to_string(t) + " in patch " + std::to_string(patch));
  }
  Tensor out({1, s.bits_per_iteration});
  read_plane(s, patch_offsets(s)[patch], t, out, 0);
  return out.reshaped({s.bits_per_iteration});
}

std::size_t uniform_payload_bytes(const ModelConfig &c, std::size_t width, std::size_t height,
                                  std::size_t iterations) {
  const std::size_t patches = (width / c.patch_size) * (height / c.patch_size);
  return patches * ceil_bytes(iterations * c.bits_per_iteration);
}

Encoded encode_image(const Model &model, const Image &img, std::size_t iterations) {
  const ModelConfig &c = model.config();
  if (iterations == 0 || iterations > c.max_iterations) {
    fail(ErrorCode::kOutOfRange, "iterations " + std::to_string(iterations) + " outside [1, " +
                                     std::to_string(c.max_iterations) + "]");
  }
  const Tensor patches = image_patches(model, img);
  const auto outputs = run_chain(model, patches, iterations, BinarizeMode::kInference);
  Bitstream s = empty_stream(model, img, StreamMode::kUniform);
  s.iterations.assign(patches.dim(0), static_cast<std::uint8_t>(iterations));
  BitWriter w(s.payload);
  for (std::size_t p = 0; p < patches.dim(0); ++p) {
    for (const auto &o : outputs) w.plane(o.bits, p);
    w.align();
  }
  Image recon = to_image(reconstruct(model, outputs), s);
  return {std::move(s), std::move(recon)};
}

Encoded encode_with_budget(const Model &model, const Image &img, std::size_t byte_budget) {
  const ModelConfig &c = model.config();
  image_patches(model, img);
  const std::size_t minimum = uniform_payload_bytes(c, img.width, img.height, 1);
  if (byte_budget < minimum) {
    fail(ErrorCode::kInvalidArgument, "byte budget " + std::to_string(byte_budget) +
                                          " is below the minimum of " + std::to_string(minimum) +
                                          " bytes (one iteration)");
  }
  std::size_t best = 1;
  for (std::size_t it = 2; it <= c.max_iterations; ++it) {
    if (uniform_payload_bytes(c, img.width, img.height, it) <= byte_budget) best = it;
  }
  return encode_image(model, img, best);
}

Encoded encode_dynamic(const Model &model, const Image &img, const QualityTarget &target) {
  const ModelConfig &c = model.config();
  if (target.min_iterations == 0 || target.min_iterations > target.max_iterations ||
      target.max_iterations > c.max_iterations) {
    fail(ErrorCode::kOutOfRange, "need 1 <= min <= max <= " + std::to_string(c.max_iterations));
  }
  if (std::isnan(target.threshold)) fail(ErrorCode::kInvalidArgument, "quality threshold is NaN");
  const Tensor patches = image_patches(model, img);
  const std::size_t n = patches.dim(0);

  EncoderSession session(model, patches);
  std::vector<Tensor> planes;
  std::vector<std::uint8_t> counts(n, 0);
  Tensor final_recon(patches.shape());
  std::size_t open = n;
  for (std::size_t t = 1; t <= target.max_iterations && open > 0; ++t) {
    planes.push_back(session.step());
    if (t < target.min_iterations) continue;
    const Tensor &recon = session.reconstruction();
    for (std::size_t p = 0; p < n; ++p) {
      if (counts[p]) continue;
      bool met = t == target.max_iterations;
      if (!met) {
        const Image original = unscale(copy_row(patches, p));
        const Image approx = unscale(copy_row(recon, p));
        const double q = target.metric == QualityMetric::kPsnr ? psnr(original, approx)
                                                               : ssim_image(original, approx).mean;
        met = q >= target.threshold;
      }
      if (met) {
        counts[p] = static_cast<std::uint8_t>(t);
        set_row(final_recon, p, recon, p);
        --open;
      }
    }
  }
  Bitstream s = empty_stream(model, img, StreamMode::kDynamic);
  s.iterations = counts;
  BitWriter w(s.payload);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t t = 0; t < counts[p]; ++t) w.plane(planes[t], p);
    w.align();
  }
  Image recon = to_image(final_recon, s);
  return {std::move(s), std::move(recon)};
}

Image decode_image(const Model &model, const Bitstream &s) {
  check_against_model(model, s);
  const ModelConfig &c = model.config();
  const auto off = patch_offsets(s);
  // Patches with equal counts decode as one batch; rows are independent of
  // batch composition, so grouping does not change any value.
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < s.patch_count(); ++p) groups[s.iterations[p]].push_back(p);
  Tensor out({s.patch_count(), c.channels, c.patch_size, c.patch_size});
  for (const auto &[count, members] : groups) {
    std::vector<Tensor> planes;
    for (std::size_t t = 0; t < count; ++t) {
      Tensor plane({members.size(), s.bits_per_iteration});
      for (std::size_t k = 0; k < members.size(); ++k) read_plane(s, off[members[k]], t, plane, k);
      planes.push_back(std::move(plane));
    }
    const Tensor recon = decode_only(model, planes);
    for (std::size_t k = 0; k < members.size(); ++k) set_row(out, members[k], recon, k);
  }
  return to_image(out, s);
}

std::vector<Image> decode_progressive(const Model &model, const Bitstream &s) {
  check_against_model(model, s);
  const ModelConfig &c = model.config();
  const std::size_t n = s.patch_count();
  const auto off = patch_offsets(s);
  DecoderSession session(model, n);
  Tensor frozen({n, c.channels, c.patch_size, c.patch_size});
  std::vector<Image> frames;
  for (std::size_t t = 0; t < s.max_iterations(); ++t) {
    // Exhausted patches are fed a constant plane; their rows are discarded.
    Tensor plane({n, s.bits_per_iteration}, 1.0);
    for (std::size_t p = 0; p < n; ++p) {
      if (t < s.iterations[p]) read_plane(s, off[p], t, plane, p);
    }
    session.step(plane);
    for (std::size_t p = 0; p < n; ++p) {
      if (t < s.iterations[p]) set_row(frozen, p, session.reconstruction(), p);
    }
    frames.push_back(to_image(frozen, s));
  }
  return frames;
}

Bitstream truncate_stream(const Bitstream &s, std::size_t t) {
  check_header(s);
  check_payload(s);
  if (t == 0) fail(ErrorCode::kOutOfRange, "cannot truncate a stream to zero iterations");
  Bitstream out = s;
  out.payload.clear();
  const auto off = patch_offsets(s);
  for (std::size_t p = 0; p < s.patch_count(); ++p) {
    out.iterations[p] = static_cast<std::uint8_t>(std::min<std::size_t>(s.iterations[p], t));
    const std::size_t bits = out.iterations[p] * s.bits_per_iteration;
    out.payload.insert(out.payload.end(), s.payload.begin() + off[p],
                       s.payload.begin() + off[p] + ceil_bytes(bits));
    if (bits % 8) out.payload.back() &= static_cast<std::uint8_t>(0xff00u >> (bits % 8));
  }
  return out;
}

}  // namespace nntc
