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

#include "nntc/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "nntc/error.hpp"

namespace nntc {
namespace {

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

// libpng's defaults print to stderr; errors surface as exceptions instead.
void png_error_silent(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_warning_silent(png_structp, png_const_charp) {}

std::uint8_t round_to_byte(double x) {
  // nearbyint honours the default round-to-nearest-even mode.
  return static_cast<std::uint8_t>(std::nearbyint(std::clamp(x, 0.0, 255.0)));
}

}  // namespace

Image read_png(const std::string &path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(ErrorCode::kIo, "cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorCode::kIo, path + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_silent,
                                           png_warning_silent);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, "corrupt PNG data in " + path);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, path + ": unsupported channel layout");
  }
  img.pixels.resize(img.width * img.height * img.channels);
  rows.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    rows[y] = img.pixels.data() + y * img.width * img.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string &path, const Image &img) {
  if (img.channels != 1 && img.channels != 3) {
    fail(ErrorCode::kInvalidArgument, "PNG output needs 1 or 3 channels");
  }
  if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height * img.channels) {
    fail(ErrorCode::kInvalidArgument, "image buffer does not match its dimensions");
  }
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(ErrorCode::kIo, "cannot create " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_silent,
                                             png_warning_silent);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }
  std::vector<png_const_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "failed writing " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < img.height; ++y) {
    rows[y] = img.pixels.data() + y * img.width * img.channels;
  }
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) fail(ErrorCode::kIo, "failed writing " + path);
}

Image convert_channels(const Image &img, std::size_t channels) {
  if (channels != 1 && channels != 3) fail(ErrorCode::kInvalidArgument, "channels must be 1 or 3");
  if (img.channels == channels) return img;
  Image out(img.width, img.height, channels);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    if (channels == 3) {
      for (std::size_t c = 0; c < 3; ++c) out.pixels[3 * i + c] = img.pixels[i];
    } else {
      const double y = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
                       0.114 * img.pixels[3 * i + 2];
      out.pixels[i] = round_to_byte(y);
    }
  }
  return out;
}

double scale_value(std::uint8_t v) { return v / 255.0 * 1.8 - 0.9; }

std::uint8_t unscale_value(double x) { return round_to_byte((x + 0.9) / 1.8 * 255.0); }

Tensor scale_to_network(const Image &img) {
  Tensor t({img.channels, img.height, img.width});
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) t.at(c, y, x) = scale_value(img.at(x, y, c));
    }
  }
  return t;
}

Image unscale(const Tensor &t) {
  Tensor v = t;
  if (v.rank() == 4 && v.dim(0) == 1) v = v.reshaped({v.dim(1), v.dim(2), v.dim(3)});
  if (v.rank() != 3) {
    fail(ErrorCode::kShapeMismatch, "unscale needs (C, H, W), got " + shape_string(t.shape()));
  }
  Image img(v.dim(2), v.dim(1), v.dim(0));
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) img.at(x, y, c) = unscale_value(v.at(c, y, x));
    }
  }
  return img;
}

Tensor extract_patches(const Tensor &img, std::size_t patch) {
  if (img.rank() != 3 || patch == 0) {
    fail(ErrorCode::kShapeMismatch, "extract_patches needs a (C, H, W) image");
  }
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  if (h % patch != 0 || w % patch != 0) {
    fail(ErrorCode::kShapeMismatch, "image " + std::to_string(w) + "x" + std::to_string(h) +
                                        " is not divisible into " + std::to_string(patch) +
                                        "-pixel patches");
  }
  const std::size_t rows = h / patch, cols = w / patch;
  Tensor out({rows * cols, c, patch, patch});
  for (std::size_t pr = 0; pr < rows; ++pr) {
    for (std::size_t pc = 0; pc < cols; ++pc) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < patch; ++y) {
          for (std::size_t x = 0; x < patch; ++x) {
            out.at(pr * cols + pc, ch, y, x) = img.at(ch, pr * patch + y, pc * patch + x);
          }
        }
      }
    }
  }
  return out;
}

Tensor stitch_patches(const Tensor &patches, std::size_t height, std::size_t width) {
  if (patches.rank() != 4 || patches.dim(2) != patches.dim(3)) {
    fail(ErrorCode::kShapeMismatch, "stitch_patches needs (N, C, P, P) patches");
  }
  const std::size_t p = patches.dim(2), c = patches.dim(1);
  if (height % p != 0 || width % p != 0 || (height / p) * (width / p) != patches.dim(0)) {
    fail(ErrorCode::kShapeMismatch, std::to_string(patches.dim(0)) + " patches of size " +
                                        std::to_string(p) + " do not tile " +
                                        std::to_string(width) + "x" + std::to_string(height));
  }
  const std::size_t cols = width / p;
  Tensor img({c, height, width});
  for (std::size_t n = 0; n < patches.dim(0); ++n) {
    const std::size_t pr = n / cols, pc = n % cols;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < p; ++y) {
        for (std::size_t x = 0; x < p; ++x) {
          img.at(ch, pr * p + y, pc * p + x) = patches.at(n, ch, y, x);
        }
      }
    }
  }
  return img;
}

Image downsample_area(const Image &img, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || img.width < width || img.height < height) {
    fail(ErrorCode::kInvalidArgument, "area downsampling cannot enlarge an image");
  }
  // On a lattice of src * dst cells per axis, source pixel j spans
  // [j * dst, (j + 1) * dst) and output pixel i spans [i * src, (i + 1) * src),
  // so every overlap is an integer and the average is an exact fraction.
  auto overlaps = [](std::size_t src, std::size_t dst) {
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> w(dst);
    for (std::size_t i = 0; i < dst; ++i) {
      const std::size_t lo = i * src, hi = (i + 1) * src;
      for (std::size_t j = lo / dst; j * dst < hi; ++j) {
        const std::size_t a = std::max(lo, j * dst), b = std::min(hi, (j + 1) * dst);
        if (b > a) w[i].push_back({j, b - a});
      }
    }
    return w;
  };
  const auto wx = overlaps(img.width, width), wy = overlaps(img.height, height);
  const std::uint64_t den = static_cast<std::uint64_t>(img.width) * img.height;
  Image out(width, height, img.channels);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        std::uint64_t acc = 0;
        for (const auto &[sy, ay] : wy[y]) {
          for (const auto &[sx, ax] : wx[x]) acc += ay * ax * img.at(sx, sy, c);
        }
        std::uint64_t q = acc / den;
        const std::uint64_t r = acc % den;
        if (2 * r > den || (2 * r == den && q % 2 == 1)) ++q;
        out.at(x, y, c) = static_cast<std::uint8_t>(q);
      }
    }
  }
  return out;
}

}  // namespace nntc
