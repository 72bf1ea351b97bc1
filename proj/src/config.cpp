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

#include "nntc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string &source, const std::string &msg) {
  fail(ErrorCode::kParse, source + ": " + msg);
}

void reject_unknown(const json &obj, const std::set<std::string> &allowed,
                    const std::string &where, const std::string &source) {
  if (!obj.is_object()) parse_fail(source, where + " must be a JSON object");
  for (const auto &[key, value] : obj.items()) {
    if (!allowed.count(key)) parse_fail(source, "unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void read(const json &obj, const char *key, T &out, const std::string &where,
          const std::string &source) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception &) {
    parse_fail(source, where + "." + key + " has the wrong type");
  }
}

void read_size(const json &obj, const char *key, std::size_t &out, const std::string &where,
               const std::string &source) {
  if (!obj.contains(key)) return;
  const json &v = obj.at(key);
  if (!v.is_number_unsigned()) {
    parse_fail(source, where + "." + key + " must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

json model_to_json(const ModelConfig &c) {
  json j;
  j["variant"] = variant_name(c.variant);
  j["weight_policy"] = weight_policy_name(c.weight_policy);
  j["patch_size"] = c.patch_size;
  j["bits_per_iteration"] = c.bits_per_iteration;
  j["max_iterations"] = c.max_iterations;
  j["channels"] = c.channels;
  j["hidden_units"] = c.hidden_units;
  j["conv_filters"] = c.conv_filters;
  j["kernel_size"] = c.kernel_size;
  j["recurrent_kernel"] = c.recurrent_kernel;
  return j;
}

ModelConfig model_from_json(const json &j, const std::string &source) {
  static const std::set<std::string> keys = {
      "variant",  "weight_policy", "patch_size",   "bits_per_iteration", "max_iterations",
      "channels", "hidden_units",  "conv_filters", "kernel_size",        "recurrent_kernel"};
  reject_unknown(j, keys, "model", source);
  std::string variant = variant_name(Variant::kConvLstm);
  read(j, "variant", variant, "model", source);
  ModelConfig c;
  try {
    c = ModelConfig::defaults(parse_variant(variant));
    if (j.contains("weight_policy")) {
      std::string policy;
      read(j, "weight_policy", policy, "model", source);
      c.weight_policy = parse_weight_policy(policy);
    }
  } catch (const Error &e) {
    parse_fail(source, e.what());
  }
  read_size(j, "patch_size", c.patch_size, "model", source);
  read_size(j, "bits_per_iteration", c.bits_per_iteration, "model", source);
  read_size(j, "max_iterations", c.max_iterations, "model", source);
  read_size(j, "channels", c.channels, "model", source);
  read_size(j, "hidden_units", c.hidden_units, "model", source);
  if (j.contains("conv_filters")) {
    const json &f = j.at("conv_filters");
    if (!f.is_array() || f.size() != 3) parse_fail(source, "model.conv_filters must list 3 widths");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!f[i].is_number_unsigned()) parse_fail(source, "model.conv_filters must be integers");
      c.conv_filters[i] = f[i].get<std::size_t>();
    }
  }
  read_size(j, "kernel_size", c.kernel_size, "model", source);
  read_size(j, "recurrent_kernel", c.recurrent_kernel, "model", source);
  return c;
}

json train_to_json(const TrainConfig &t) {
  json j;
  j["learning_rate"] = t.learning_rate;
  j["batch_size"] = t.batch_size;
  j["steps"] = t.steps;
  j["n_iterations"] = t.n_iterations;
  j["seed"] = t.seed;
  j["log_every"] = t.log_every;
  j["time_budget_seconds"] = t.time_budget_seconds;
  return j;
}

TrainConfig train_from_json(const json &j, const std::string &source) {
  static const std::set<std::string> keys = {"learning_rate", "batch_size", "steps",
                                             "n_iterations",  "seed",       "log_every",
                                             "time_budget_seconds"};
  reject_unknown(j, keys, "train", source);
  TrainConfig t;
  if (j.contains("learning_rate") && !j.at("learning_rate").is_number()) {
    parse_fail(source, "train.learning_rate must be a number");
  }
  read(j, "learning_rate", t.learning_rate, "train", source);
  read_size(j, "batch_size", t.batch_size, "train", source);
  read_size(j, "steps", t.steps, "train", source);
  read_size(j, "n_iterations", t.n_iterations, "train", source);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) parse_fail(source, "train.seed must be an integer");
    t.seed = j.at("seed").get<std::uint64_t>();
  }
  read_size(j, "log_every", t.log_every, "train", source);
  if (j.contains("time_budget_seconds") && !j.at("time_budget_seconds").is_number()) {
    parse_fail(source, "train.time_budget_seconds must be a number");
  }
  read(j, "time_budget_seconds", t.time_budget_seconds, "train", source);
  return t;
}

json parse_document(const std::string &text, const std::string &source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    // Translate the byte offset into a 1-based line and column.
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    parse_fail(source, "JSON parse error at line " + std::to_string(line) + ", column " +
                           std::to_string(column));
  }
}

}  // namespace

RunConfig parse_run_config(const std::string &text, const std::string &source) {
  const json doc = parse_document(text, source);
  reject_unknown(doc, {"model", "train"}, "top level", source);
  RunConfig rc;
  rc.model = doc.contains("model") ? model_from_json(doc.at("model"), source)
                                   : ModelConfig::defaults(Variant::kConvLstm);
  rc.train = doc.contains("train") ? train_from_json(doc.at("train"), source) : TrainConfig{};
  try {
    rc.model.validate();
    if (!doc.contains("train") || !doc.at("train").contains("n_iterations")) {
      rc.train.n_iterations = std::min(rc.train.n_iterations, rc.model.max_iterations);
    }
    rc.train.validate(rc.model);
  } catch (const Error &e) {
    parse_fail(source, e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::string dump_run_config(const RunConfig &config) {
  json j;
  j["model"] = model_to_json(config.model);
  j["train"] = train_to_json(config.train);
  return j.dump(2) + "\n";
}

std::string model_config_to_json(const ModelConfig &config) {
  return model_to_json(config).dump();
}

ModelConfig model_config_from_json(const std::string &text) {
  const ModelConfig c = model_from_json(parse_document(text, "model config"), "model config");
  return c;
}

}  // namespace nntc
