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

#ifndef NNTC_NOISE_HPP
#define NNTC_NOISE_HPP

#include <cstdint>

namespace nntc {

/// Counter-based noise: a draw is a pure function of the seed and its
/// coordinates (training step, chain stage, patch, unit), so results do not
/// depend on evaluation order.
struct NoiseSource {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t stage = 0;
  /// Added to the batch row to form the patch coordinate.
  std::uint64_t patch_offset = 0;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t patch, std::uint64_t unit) const;

  NoiseSource at_stage(std::uint64_t s) const {
    NoiseSource n = *this;
    n.stage = s;
    return n;
  }
};

}  // namespace nntc

#endif  // NNTC_NOISE_HPP
