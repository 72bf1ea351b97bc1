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

#ifndef NNTC_IMAGE_HPP
#define NNTC_IMAGE_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nntc/tensor.hpp"

namespace nntc {

/// 8-bit image with interleaved channels, row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  std::uint8_t &at(std::size_t x, std::size_t y, std::size_t ch) {
    return pixels[(y * width + x) * channels + ch];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t ch) const {
    return pixels[(y * width + x) * channels + ch];
  }

  friend bool operator==(const Image &, const Image &) = default;
};

/// Reads 8-bit gray or RGB; palette and 16-bit inputs are expanded or
/// reduced, alpha is dropped. Throws kIo on unreadable or undecodable files.
Image read_png(const std::string &path);
void write_png(const std::string &path, const Image &img);

/// Converts between gray and RGB (luma weights 0.299, 0.587, 0.114).
Image convert_channels(const Image &img, std::size_t channels);

/// v -> v / 255 * 1.8 - 0.9.
double scale_value(std::uint8_t v);
/// Inverse of scale_value, clamped to [0, 255], ties rounded to even.
std::uint8_t unscale_value(double x);

/// (C, H, W) tensor in network range.
Tensor scale_to_network(const Image &img);
/// (C, H, W) or (1, C, H, W) tensor back to 8 bits.
Image unscale(const Tensor &t);

/// Row-major non-overlapping tiles of a (C, H, W) image: (N, C, P, P).
Tensor extract_patches(const Tensor &img, std::size_t patch);
/// Inverse of extract_patches.
Tensor stitch_patches(const Tensor &patches, std::size_t height, std::size_t width);

/// Box filter with exact fractional pixel overlaps; ignores aspect ratio.
Image downsample_area(const Image &img, std::size_t width, std::size_t height);

}  // namespace nntc

#endif  // NNTC_IMAGE_HPP
