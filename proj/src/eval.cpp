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

#include "nntc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nntc/codec.hpp"
#include "nntc/error.hpp"

namespace nntc {

double ssim_patch(std::span<const double> a, std::span<const double> b, double dynamic_range) {
  if (a.size() != b.size() || a.empty()) {
    fail(ErrorCode::kShapeMismatch, "SSIM windows differ in size or are empty");
  }
  const double n = static_cast<double>(a.size());
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  double vaa = 0.0, vbb = 0.0, vab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    vaa += da * da;
    vbb += db * db;
    vab += da * db;
  }
  vaa /= n;
  vbb /= n;
  vab /= n;
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  // Every term is symmetric under a <-> b, so the score is too.
  return ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) /
         ((ma * ma + mb * mb + c1) * (vaa + vbb + c2));
}

SsimReport ssim_image(const Image &a, const Image &b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    fail(ErrorCode::kShapeMismatch, "SSIM images differ in size or channels");
  }
  if (a.width % kSsimTile || a.height % kSsimTile || a.width == 0 || a.height == 0) {
    fail(ErrorCode::kInvalidArgument, "SSIM image sides must be positive multiples of 8");
  }
  SsimReport r;
  r.tiles_x = a.width / kSsimTile;
  r.tiles_y = a.height / kSsimTile;
  r.channels = a.channels;
  std::vector<double> wa(kSsimTile * kSsimTile), wb(kSsimTile * kSsimTile);
  for (std::size_t ty = 0; ty < r.tiles_y; ++ty) {
    for (std::size_t tx = 0; tx < r.tiles_x; ++tx) {
      for (std::size_t c = 0; c < a.channels; ++c) {
        for (std::size_t y = 0; y < kSsimTile; ++y) {
          for (std::size_t x = 0; x < kSsimTile; ++x) {
            wa[y * kSsimTile + x] = a.at(tx * kSsimTile + x, ty * kSsimTile + y, c);
            wb[y * kSsimTile + x] = b.at(tx * kSsimTile + x, ty * kSsimTile + y, c);
          }
        }
        const double s = ssim_patch(wa, wb, 255.0);
        r.raw.push_back(s);
        r.clamped.push_back(std::clamp(s, 0.0, 1.0));
      }
    }
  }
  double sum = 0.0, raw_sum = 0.0;
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    sum += r.clamped[i];
    raw_sum += r.raw[i];
  }
  r.mean = sum / static_cast<double>(r.raw.size());
  r.raw_mean = raw_sum / static_cast<double>(r.raw.size());
  return r;
}

double psnr(const Image &a, const Image &b, double peak) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    fail(ErrorCode::kShapeMismatch, "PSNR images differ in size or channels");
  }
  if (a.pixels.empty()) fail(ErrorCode::kInvalidArgument, "PSNR of empty images");
  double se = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<RdPoint> rd_curve(const std::vector<Image> &images,
                              const std::vector<std::size_t> &iterations, const RdCodec &codec) {
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "rate-distortion set is empty");
  if (iterations.empty()) fail(ErrorCode::kInvalidArgument, "no iteration counts given");
  std::vector<RdPoint> points;
  for (std::size_t it : iterations) {
    double bits = 0.0, pixels = 0.0, ssim = 0.0;
    for (const Image &img : images) {
      const RdSample s = codec(img, it);
      bits += 8.0 * static_cast<double>(s.payload_bytes);
      pixels += static_cast<double>(img.width * img.height);
      ssim += ssim_image(img, s.reconstruction).mean;
    }
    points.push_back({it, bits / pixels, ssim / static_cast<double>(images.size())});
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const RdPoint &a, const RdPoint &b) { return a.bpp < b.bpp; });
  return points;
}

std::vector<RdPoint> rd_curve(const Model &model, const std::vector<Image> &images,
                              const std::vector<std::size_t> &iterations) {
  return rd_curve(images, iterations, [&](const Image &img, std::size_t it) {
    const Encoded e = encode_image(model, img, it);
    return RdSample{e.stream.payload.size(), decode_image(model, e.stream)};
  });
}

std::string rd_csv(const std::vector<RdPoint> &points) {
  std::string out = "iterations,bpp,mean_ssim\n";
  char buf[96];
  for (const RdPoint &p : points) {
    // %.17g is locale-independent for the "C" locale the CLI runs in.
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", p.iterations, p.bpp, p.mean_ssim);
    out += buf;
  }
  return out;
}

}  // namespace nntc
