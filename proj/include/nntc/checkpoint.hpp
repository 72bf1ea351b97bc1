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

// Checkpoint layout, all integers little-endian:
//   "NNTCCKPT"  u32 version  u8 precision (8 = IEEE-754 binary64)  u64 seed
//   u32 len + model config JSON
//   u32 count, then per parameter: u32 len + name, u32 rank, u64 dims, f64 values
//   u8 has_adam; if set: u64 step, f64 beta1, beta2, epsilon, then m and v
//   values per parameter in declaration order.

#ifndef NNTC_CHECKPOINT_HPP
#define NNTC_CHECKPOINT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nntc/model.hpp"
#include "nntc/trainer.hpp"

namespace nntc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::optional<AdamState> adam;
};

std::vector<std::uint8_t> serialize_checkpoint(const Model &model, const AdamState *adam = nullptr);
/// Errors: kBadMagic, kVersionMismatch, kTruncated, kShapeMismatch (stored
/// tensors disagree with the stored config), kMalformed.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t> &bytes);

void save_checkpoint(const std::string &path, const Model &model, const AdamState *adam = nullptr);
Checkpoint load_checkpoint(const std::string &path);
/// As above, and throws kConfigMismatch if the stored config differs.
Checkpoint load_checkpoint(const std::string &path, const ModelConfig &expected);

/// FNV-1a 64 of the checkpoint bytes without optimizer state: identifies the
/// weights a bitstream was produced with.
std::uint64_t model_fingerprint(const Model &model);

}  // namespace nntc

#endif  // NNTC_CHECKPOINT_HPP
