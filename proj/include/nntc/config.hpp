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

#ifndef NNTC_CONFIG_HPP
#define NNTC_CONFIG_HPP

#include <string>

#include "nntc/model.hpp"
#include "nntc/trainer.hpp"

namespace nntc {

/// JSON document {"model": {...}, "train": {...}}. Both sections and every
/// key are optional; missing model keys take the defaults of the chosen
/// variant. Unknown keys are errors.
struct RunConfig {
  ModelConfig model = ModelConfig::defaults(Variant::kConvLstm);
  TrainConfig train;

  friend bool operator==(const RunConfig &, const RunConfig &) = default;
};

/// Parse errors carry "line L, column C"; unknown keys are named.
/// Throws kParse. source labels messages (usually the file path).
RunConfig parse_run_config(const std::string &text, const std::string &source = "config");
RunConfig load_run_config(const std::string &path);
/// Pretty-printed effective configuration; parse_run_config reads it back
/// to an equal RunConfig.
std::string dump_run_config(const RunConfig &config);

/// Compact model-only JSON used in checkpoint headers.
std::string model_config_to_json(const ModelConfig &config);
ModelConfig model_config_from_json(const std::string &text);

}  // namespace nntc

#endif  // NNTC_CONFIG_HPP
