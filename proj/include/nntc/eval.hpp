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

#ifndef NNTC_EVAL_HPP
#define NNTC_EVAL_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nntc/image.hpp"
#include "nntc/model.hpp"

namespace nntc {

inline constexpr std::size_t kSsimTile = 8;

/// SSIM over one whole window: uniform weights, no smoothing, biased
/// moments, C1 = (0.01 L)^2 and C2 = (0.03 L)^2. Symmetric in a and b.
double ssim_patch(std::span<const double> a, std::span<const double> b,
                  double dynamic_range = 255.0);

struct SsimReport {
  std::size_t tiles_x = 0;
  std::size_t tiles_y = 0;
  std::size_t channels = 0;
  /// Index ((ty * tiles_x + tx) * channels + c). Raw scores may be negative.
  std::vector<double> raw;
  /// raw clamped to [0, 1].
  std::vector<double> clamped;
  /// Mean of the clamped scores; the headline figure.
  double mean = 0.0;
  double raw_mean = 0.0;
};

/// 8x8 tiles, every channel independently, on 8-bit values (L = 255).
SsimReport ssim_image(const Image &a, const Image &b);

/// 10 log10(peak^2 / MSE) over all values; +infinity when a == b.
double psnr(const Image &a, const Image &b, double peak = 255.0);

struct RdPoint {
  std::size_t iterations = 0;
  /// Payload bits per pixel; headers are not counted.
  double bpp = 0.0;
  double mean_ssim = 0.0;
};

struct RdSample {
  std::size_t payload_bytes = 0;
  Image reconstruction;
};
/// Any codec usable for a curve: encode+decode one image at an iteration count.
using RdCodec = std::function<RdSample(const Image &, std::size_t iterations)>;

/// One point per iteration count, sorted by bpp. bpp is total payload bits
/// over total pixels; mean_ssim averages per-image SsimReport::mean.
std::vector<RdPoint> rd_curve(const std::vector<Image> &images,
                              const std::vector<std::size_t> &iterations, const RdCodec &codec);
/// Uses the uniform-mode codec of model.
std::vector<RdPoint> rd_curve(const Model &model, const std::vector<Image> &images,
                              const std::vector<std::size_t> &iterations);

/// "iterations,bpp,mean_ssim" header, one row per point, '.' decimals.
std::string rd_csv(const std::vector<RdPoint> &points);

}  // namespace nntc

#endif  // NNTC_EVAL_HPP
