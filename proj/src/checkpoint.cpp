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

#include "nntc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hash.hpp"
#include "nntc/config.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

constexpr char kMagic[8] = {'N', 'N', 'T', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kPrecisionF64 = 8;

// Sink is either a byte vector or a running FNV-1a state, so fingerprints
// never materialize the serialized model.
struct ByteSink {
  std::vector<std::uint8_t> out;
  void put(const std::uint8_t *b, std::size_t n) { out.insert(out.end(), b, b + n); }
};
struct HashSink {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void put(const std::uint8_t *b, std::size_t n) { h = detail::fnv1a64(b, n, h); }
};

template <typename Sink>
class Writer {
 public:
  void bytes(const void *p, std::size_t n) { sink_.put(static_cast<const std::uint8_t *>(p), n); }
  void u8(std::uint8_t v) { sink_.put(&v, 1); }
  template <typename T>
  void le(T v) {
    std::uint8_t b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    sink_.put(b, sizeof(T));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string &s) {
    le(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void values(const Tensor &t) {
    for (double v : t.data()) f64(v);
  }
  Sink &sink() { return sink_; }

 private:
  Sink sink_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t> &in) : in_(in) {}
  const std::uint8_t *take(std::size_t n, const char *what) {
    if (in_.size() - pos_ < n) {
      fail(ErrorCode::kTruncated, std::string("checkpoint truncated while reading ") + what);
    }
    const std::uint8_t *p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8(const char *what) { return *take(1, what); }
  template <typename T>
  T le(const char *what) {
    const std::uint8_t *p = take(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
  }
  double f64(const char *what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
  std::string str(const char *what) {
    const std::uint32_t n = le<std::uint32_t>(what);
    const auto *p = take(n, what);
    return std::string(reinterpret_cast<const char *>(p), n);
  }
  void values(Tensor &t, const char *what) {
    take(0, what);
    if ((in_.size() - pos_) / 8 < t.size()) {
      fail(ErrorCode::kTruncated, std::string("checkpoint truncated while reading ") + what);
    }
    for (auto &v : t.data()) v = f64(what);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t> &in_;
  std::size_t pos_ = 0;
};

template <typename Sink>
void write_model(Writer<Sink> &w, const Model &model) {
  w.bytes(kMagic, sizeof kMagic);
  w.le(kCheckpointVersion);
  w.u8(kPrecisionF64);
  w.le(model.seed());
  w.str(model_config_to_json(model.config()));
  const ParameterSet &params = model.params();
  w.le(static_cast<std::uint32_t>(params.size()));
  for (const auto &p : params) {
    w.str(p.name);
    w.le(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.le(static_cast<std::uint64_t>(d));
    w.values(p.value);
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model &model, const AdamState *adam) {
  Writer<ByteSink> w;
  write_model(w, model);
  w.u8(adam ? 1 : 0);
  if (adam) {
    if (adam->m.size() != model.params().size() || adam->v.size() != model.params().size()) {
      fail(ErrorCode::kShapeMismatch, "Adam state does not match the model parameters");
    }
    w.le(adam->step);
    w.f64(adam->beta1);
    w.f64(adam->beta2);
    w.f64(adam->epsilon);
    for (std::size_t i = 0; i < adam->m.size(); ++i) {
      w.values(adam->m[i]);
      w.values(adam->v[i]);
    }
  }
  return std::move(w.sink().out);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t> &bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kMagic) {
    if (std::memcmp(bytes.data(), kMagic, bytes.size()) == 0) {
      fail(ErrorCode::kTruncated, "checkpoint truncated while reading magic");
    }
    fail(ErrorCode::kBadMagic, "not a checkpoint (bad magic)");
  }
  if (std::memcmp(r.take(sizeof kMagic, "magic"), kMagic, sizeof kMagic) != 0) {
    fail(ErrorCode::kBadMagic, "not a checkpoint (bad magic)");
  }
  const auto version = r.le<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                          ", this build reads version " +
                                          std::to_string(kCheckpointVersion));
  }
  const std::uint8_t precision = r.u8("precision flag");
  if (precision != kPrecisionF64) {
    fail(ErrorCode::kMalformed, "unsupported checkpoint precision flag " + std::to_string(precision));
  }
  const auto seed = r.le<std::uint64_t>("seed");
  ModelConfig config;
  try {
    config = model_config_from_json(r.str("model config"));
    config.validate();
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kTruncated) throw;
    fail(ErrorCode::kMalformed, std::string("checkpoint model config: ") + e.what());
  }
  Checkpoint ck{Model::build(config, seed), std::nullopt};
  ParameterSet &params = ck.model.params();
  const auto count = r.le<std::uint32_t>("parameter count");
  if (count != params.size()) {
    fail(ErrorCode::kShapeMismatch, "checkpoint holds " + std::to_string(count) +
                                        " tensors, its config defines " +
                                        std::to_string(params.size()));
  }
  for (auto &p : params) {
    const std::string name = r.str("parameter name");
    const auto rank = r.le<std::uint32_t>("parameter rank");
    if (rank > 8) fail(ErrorCode::kMalformed, "implausible rank for " + name);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.le<std::uint64_t>("parameter shape"));
    if (name != p.name || shape != p.value.shape()) {
      fail(ErrorCode::kShapeMismatch, "checkpoint tensor " + name + " " + shape_string(shape) +
                                          " does not match expected " + p.name + " " +
                                          shape_string(p.value.shape()));
    }
    r.values(p.value, "parameter values");
  }
  const std::uint8_t has_adam = r.u8("optimizer flag");
  if (has_adam > 1) fail(ErrorCode::kMalformed, "bad optimizer flag");
  if (has_adam) {
    AdamState a = AdamState::for_params(params);
    a.step = r.le<std::uint64_t>("optimizer step");
    a.beta1 = r.f64("optimizer beta1");
    a.beta2 = r.f64("optimizer beta2");
    a.epsilon = r.f64("optimizer epsilon");
    for (std::size_t i = 0; i < params.size(); ++i) {
      r.values(a.m[i], "optimizer moments");
      r.values(a.v[i], "optimizer moments");
    }
    ck.adam = std::move(a);
  }
  if (!r.done()) fail(ErrorCode::kMalformed, "trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::string &path, const Model &model, const AdamState *adam) {
  const auto bytes = serialize_checkpoint(model, adam);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Checkpoint load_checkpoint(const std::string &path, const ModelConfig &expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.model.config() == expected)) {
    fail(ErrorCode::kConfigMismatch, "checkpoint " + path + " was trained with config " +
                                         model_config_to_json(ck.model.config()) +
                                         ", expected " + model_config_to_json(expected));
  }
  return ck;
}

std::uint64_t model_fingerprint(const Model &model) {
  Writer<HashSink> w;
  write_model(w, model);
  return w.sink().h;
}

}  // namespace nntc
