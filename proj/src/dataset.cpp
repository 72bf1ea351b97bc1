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

#include "nntc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hash.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> png_files(const std::string &dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::kIo, "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string numbered(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", i);
  return buf;
}

}  // namespace

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const std::uint64_t stream = detail::mix64(seed ^ 0x3c6ef372fe94f82bULL);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t r = detail::absorb(stream, i);
    // Multiply-shift keeps the draw in [0, i) without a modulo.
    const std::size_t j = static_cast<std::size_t>((static_cast<unsigned __int128>(r) * i) >> 64);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Dataset ingest_images(const DatasetSpec &spec, const std::function<void(const std::string &)> &log) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1]");
  }
  if (spec.target_size == 0) fail(ErrorCode::kInvalidArgument, "target size must be positive");
  Dataset data;
  std::vector<Image> kept;
  for (const auto &path : png_files(spec.source_dir)) {
    Image img;
    try {
      img = read_png(path.string());
    } catch (const Error &e) {
      ++data.unreadable;
      if (log) log("skipped " + path.string() + ": " + e.what());
      continue;
    }
    if (img.width <= spec.target_size || img.height <= spec.target_size) {
      ++data.rejected_small;
      if (log) {
        log("rejected " + path.string() + ": " + std::to_string(img.width) + "x" +
            std::to_string(img.height) + " is not larger than " +
            std::to_string(spec.target_size) + " on both axes");
      }
      continue;
    }
    kept.push_back(downsample_area(convert_channels(img, spec.channels), spec.target_size,
                                   spec.target_size));
  }
  if (kept.empty()) {
    fail(ErrorCode::kInvalidArgument, "no usable images in " + spec.source_dir + " (" +
                                          std::to_string(data.rejected_small) + " too small, " +
                                          std::to_string(data.unreadable) + " unreadable)");
  }
  const auto order = shuffled_indices(kept.size(), spec.shuffle_seed);
  const std::size_t n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.train_fraction * kept.size())));
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? data.train : data.eval).push_back(std::move(kept[order[i]]));
  }
  return data;
}

void save_dataset(const Dataset &data, const std::string &dir) {
  for (const char *split : {"train", "eval"}) {
    const fs::path sub = fs::path(dir) / split;
    std::error_code ec;
    fs::create_directories(sub, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + sub.string() + ": " + ec.message());
    const auto &images = std::string(split) == "train" ? data.train : data.eval;
    for (std::size_t i = 0; i < images.size(); ++i) write_png((sub / numbered(i)).string(), images[i]);
  }
}

std::vector<Image> load_image_dir(const std::string &dir) {
  std::vector<Image> images;
  for (const auto &path : png_files(dir)) {
    images.push_back(read_png(path.string()));
    const Image &first = images.front();
    const Image &last = images.back();
    if (last.width != first.width || last.height != first.height ||
        last.channels != first.channels) {
      fail(ErrorCode::kShapeMismatch, path.string() + " differs in size from the rest of " + dir);
    }
  }
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "no PNG images in " + dir);
  return images;
}

}  // namespace nntc
