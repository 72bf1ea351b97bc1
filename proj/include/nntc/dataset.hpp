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

#ifndef NNTC_DATASET_HPP
#define NNTC_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nntc/image.hpp"

namespace nntc {

struct DatasetSpec {
  std::string source_dir;
  std::size_t target_size = 32;
  /// Fraction kept for training; the rest is the evaluation split.
  double train_fraction = 0.9;
  std::uint64_t shuffle_seed = 1;
  std::size_t channels = 3;
};

struct Dataset {
  std::vector<Image> train;
  std::vector<Image> eval;
  /// Decodable images with an axis of at most target_size pixels.
  std::size_t rejected_small = 0;
  /// Files that could not be read or decoded.
  std::size_t unreadable = 0;
};

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// Loads every *.png under source_dir (sorted by name), keeps images larger
/// than target_size on both axes, area-downsamples them to target_size
/// squared, shuffles and splits. Skipped files are reported through log.
/// Throws kInvalidArgument when nothing usable remains.
Dataset ingest_images(const DatasetSpec &spec,
                      const std::function<void(const std::string &)> &log = {});

/// Writes train/NNNNNN.png and eval/NNNNNN.png under dir.
void save_dataset(const Dataset &data, const std::string &dir);
/// Reads a prepared split directory of equally sized PNGs, sorted by name.
std::vector<Image> load_image_dir(const std::string &dir);

}  // namespace nntc

#endif  // NNTC_DATASET_HPP
