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

#include "nntc/model.hpp"

#include <string>

#include "nntc/binarizer.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string &msg) {
  if (!ok) fail(ErrorCode::kInvalidArgument, "model config: " + msg);
}

class LayerFactory {
 public:
  LayerFactory(ParameterSet &params, Initializer &init, const ModelConfig &config)
      : params_(params), init_(init), config_(config) {}

  Layer dense(const std::string &name, std::size_t in, std::size_t out) {
    DenseLayer l;
    l.weight = params_.add(name + "/w", init_.uniform({out, in}, in));
    l.bias = params_.add(name + "/b", init_.uniform({out}, in));
    return l;
  }

  Layer conv(const std::string &name, std::size_t in, std::size_t out, std::size_t kernel,
             std::size_t stride, bool transposed) {
    ConvLayer l;
    l.spec = ConvSpec::same(in, out, kernel, stride);
    l.transposed = transposed;
    const std::size_t fan_in = in * kernel * kernel;
    l.weight = params_.add(name + "/w", init_.uniform(l.spec.weight_shape(), fan_in));
    l.bias = params_.add(name + "/b", init_.uniform({out}, fan_in));
    return l;
  }

  Layer fc_lstm(const std::string &name, std::size_t in, std::size_t units) {
    return FcLstmCell::create(params_, name, in, units, init_);
  }

  Layer conv_lstm(const std::string &name, std::size_t in, std::size_t depth, std::size_t stride) {
    return ConvLstmCell::create(params_, name, in, depth, config_.kernel_size, stride,
                                config_.recurrent_kernel, init_);
  }

  Layer deconv_lstm(const std::string &name, std::size_t in, std::size_t depth,
                    std::size_t stride) {
    return DeconvLstmCell::create(params_, name, in, depth, config_.kernel_size, stride,
                                  config_.recurrent_kernel, init_);
  }

 private:
  ParameterSet &params_;
  Initializer &init_;
  const ModelConfig &config_;
};

StageLayers make_stage(LayerFactory &f, const ModelConfig &c, const std::string &prefix) {
  const std::size_t h = c.hidden_units, in = c.patch_values(), bits = c.bits_per_iteration;
  const auto [f0, f1, f2] = c.conv_filters;
  const std::size_t k = c.kernel_size;
  const std::string e = prefix + "enc", d = prefix + "dec";
  StageLayers s;
  switch (c.variant) {
    case Variant::kFcResidual:
      s.encoder = {f.dense(e + "0", in, h), f.dense(e + "1", h, h)};
      s.decoder = {f.dense(d + "0", bits, h), f.dense(d + "1", h, h), f.dense(d + "2", h, in)};
      break;
    case Variant::kFcLstm:
      s.encoder = {f.dense(e + "0", in, h), f.fc_lstm(e + "1", h, h), f.fc_lstm(e + "2", h, h)};
      s.decoder = {f.fc_lstm(d + "0", bits, h), f.fc_lstm(d + "1", h, h), f.dense(d + "2", h, in)};
      break;
    case Variant::kConvResidual:
      s.encoder = {f.conv(e + "0", c.channels, f0, k, 2, false), f.conv(e + "1", f0, f1, k, 2, false),
                   f.conv(e + "2", f1, f2, k, 1, false)};
      s.decoder = {f.conv(d + "0", c.bottleneck_depth(), f2, 1, 1, false),
                   f.conv(d + "1", f2, f1, k, 2, true), f.conv(d + "2", f1, f0, k, 2, true),
                   f.conv(d + "3", f0, c.channels, 1, 1, false)};
      break;
    case Variant::kConvLstm:
      s.encoder = {f.conv(e + "0", c.channels, f0, k, 2, false), f.conv_lstm(e + "1", f0, f1, 2),
                   f.conv_lstm(e + "2", f1, f2, 1)};
      s.decoder = {f.conv(d + "0", c.bottleneck_depth(), f2, 1, 1, false),
                   f.deconv_lstm(d + "1", f2, f1, 2), f.deconv_lstm(d + "2", f1, f0, 2),
                   f.conv(d + "3", f0, c.channels, 1, 1, false)};
      break;
  }
  return s;
}

std::size_t count_lstm(const std::vector<Layer> &layers) {
  std::size_t n = 0;
  for (const auto &l : layers) {
    n += std::holds_alternative<FcLstmCell>(l) || std::holds_alternative<ConvLstmCell>(l) ||
         std::holds_alternative<DeconvLstmCell>(l);
  }
  return n;
}

template <typename Cell>
NodeId apply_cell(Graph &g, const ParameterSet &p, const Cell &cell, NodeId x,
                  std::vector<CellNodes> &state, std::size_t &slot) {
  if (slot == state.size()) {
    const Shape s = cell.state_shape(g.value(x).shape());
    state.push_back({g.constant(Tensor(s, 0.0)), g.constant(Tensor(s, 0.0))});
  }
  state[slot] = cell.step(g, p, x, state[slot]);
  return state[slot++].h;
}

NodeId apply_stack(Graph &g, const ParameterSet &p, const std::vector<Layer> &layers, NodeId x,
                   std::vector<CellNodes> &state) {
  std::size_t slot = 0;
  for (const auto &layer : layers) {
    x = std::visit(
        Overloaded{
            [&](const DenseLayer &l) {
              return g.tanh(g.affine(g.parameter(p, l.weight), g.parameter(p, l.bias), x));
            },
            [&](const ConvLayer &l) {
              const NodeId w = g.parameter(p, l.weight);
              const NodeId y = l.transposed ? g.deconv2d(w, x, l.spec) : g.conv2d(w, x, l.spec);
              return g.tanh(g.channel_bias(y, g.parameter(p, l.bias)));
            },
            [&](const FcLstmCell &c) { return apply_cell(g, p, c, x, state, slot); },
            [&](const ConvLstmCell &c) { return apply_cell(g, p, c, x, state, slot); },
            [&](const DeconvLstmCell &c) { return apply_cell(g, p, c, x, state, slot); },
        },
        layer);
  }
  return x;
}

void check_patches(const ModelConfig &c, const Shape &s) {
  const Shape want{c.channels, c.patch_size, c.patch_size};
  if (s.size() != 4 || Shape(s.begin() + 1, s.end()) != want) {
    fail(ErrorCode::kShapeMismatch, "expected patches (B, " + std::to_string(c.channels) + ", " +
                                        std::to_string(c.patch_size) + ", " +
                                        std::to_string(c.patch_size) + "), got " +
                                        shape_string(s));
  }
}

void check_stage(const ModelConfig &c, std::size_t t) {
  if (t >= c.max_iterations) {
    fail(ErrorCode::kOutOfRange, "stage " + std::to_string(t + 1) + " exceeds max_iterations " +
                                     std::to_string(c.max_iterations));
  }
}

std::vector<CellNodes> load_states(Graph &g, const std::vector<LstmLayerState> &states) {
  std::vector<CellNodes> out;
  for (const auto &s : states) out.push_back({g.constant(s.h), g.constant(s.c)});
  return out;
}

std::vector<LstmLayerState> save_states(const Graph &g, const std::vector<CellNodes> &nodes) {
  std::vector<LstmLayerState> out;
  for (const auto &n : nodes) out.push_back({g.value(n.h), g.value(n.c)});
  return out;
}

}  // namespace

const char *variant_name(Variant v) {
  switch (v) {
    case Variant::kFcResidual: return "fc-residual";
    case Variant::kFcLstm: return "fc-lstm";
    case Variant::kConvResidual: return "conv-residual";
    case Variant::kConvLstm: return "conv-lstm";
  }
  return "?";
}

Variant parse_variant(const std::string &name) {
  for (Variant v : {Variant::kFcResidual, Variant::kFcLstm, Variant::kConvResidual,
                    Variant::kConvLstm}) {
    if (name == variant_name(v)) return v;
  }
  fail(ErrorCode::kInvalidArgument, "unknown variant \"" + name + "\"");
}

const char *weight_policy_name(WeightPolicy p) {
  return p == WeightPolicy::kShared ? "shared" : "distinct";
}

WeightPolicy parse_weight_policy(const std::string &name) {
  if (name == "shared") return WeightPolicy::kShared;
  if (name == "distinct") return WeightPolicy::kDistinct;
  fail(ErrorCode::kInvalidArgument, "unknown weight policy \"" + name + "\"");
}

ModelConfig ModelConfig::defaults(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  if (!c.is_conv()) {
    c.patch_size = 8;
    c.bits_per_iteration = 8;
  }
  return c;
}

std::size_t ModelConfig::bottleneck_depth() const {
  const std::size_t q = bottleneck_side();
  return q == 0 ? 0 : bits_per_iteration / (q * q);
}

void ModelConfig::validate() const {
  require(patch_size > 0 && patch_size % 8 == 0 && patch_size <= 248,
          "patch_size must be a positive multiple of 8 up to 248, got " + std::to_string(patch_size));
  require(bits_per_iteration > 0 && bits_per_iteration <= 65535,
          "bits_per_iteration must be in [1, 65535], got " + std::to_string(bits_per_iteration));
  require(max_iterations >= 1 && max_iterations <= 64,
          "max_iterations must be in [1, 64], got " + std::to_string(max_iterations));
  require(channels == 1 || channels == 3, "channels must be 1 or 3, got " + std::to_string(channels));
  require(hidden_units > 0, "hidden_units must be positive");
  require(kernel_size % 2 == 1, "kernel_size must be odd, got " + std::to_string(kernel_size));
  require(recurrent_kernel % 2 == 1,
          "recurrent_kernel must be odd, got " + std::to_string(recurrent_kernel));
  for (std::size_t f : conv_filters) require(f > 0, "conv_filters must be positive");
  require(!(is_lstm() && weight_policy == WeightPolicy::kDistinct),
          std::string(variant_name(variant)) + " always shares weights across iterations");
  if (is_conv()) {
    const std::size_t q = bottleneck_side();
    require(bits_per_iteration % (q * q) == 0,
            "bits_per_iteration " + std::to_string(bits_per_iteration) +
                " is not a whole number of bits per pixel on the " + std::to_string(q) + "x" +
                std::to_string(q) + " bottleneck");
  }
}

Model Model::build(const ModelConfig &config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config_ = config;
  m.seed_ = seed;
  Initializer init(seed);
  LayerFactory factory(m.params_, init, config);
  const bool distinct = config.weight_policy == WeightPolicy::kDistinct;
  const std::size_t copies = distinct ? config.max_iterations : 1;
  for (std::size_t t = 0; t < copies; ++t) {
    m.stages_.push_back(
        make_stage(factory, config, distinct ? "stage" + std::to_string(t) + "/" : ""));
  }
  if (config.is_conv()) {
    const std::size_t f2 = config.conv_filters[2];
    m.bin_weight_ = m.params_.add("bin/w", init.uniform({config.bottleneck_depth(), f2, 1, 1}, f2));
    m.bin_bias_ = m.params_.add("bin/b", init.uniform({config.bottleneck_depth()}, f2));
  } else {
    const std::size_t h = config.hidden_units;
    m.bin_weight_ = m.params_.add("bin/w", init.uniform({config.bits_per_iteration, h}, h));
    m.bin_bias_ = m.params_.add("bin/b", init.uniform({config.bits_per_iteration}, h));
  }
  return m;
}

const StageLayers &Model::stage(std::size_t t) const {
  check_stage(config_, t);
  return stages_.size() == 1 ? stages_[0] : stages_.at(t);
}

std::size_t Model::encoder_state_slots() const { return count_lstm(stages_[0].encoder); }
std::size_t Model::decoder_state_slots() const { return count_lstm(stages_[0].decoder); }

NodeId encode_step(Graph &graph, const Model &model, std::size_t t, NodeId input,
                   std::vector<CellNodes> &state, BinarizeMode mode, const NoiseSource &noise) {
  const ModelConfig &c = model.config();
  check_patches(c, graph.value(input).shape());
  const std::size_t batch = graph.value(input).dim(0);
  NodeId x = c.is_conv() ? input : graph.reshape(input, {batch, c.patch_values()});
  x = apply_stack(graph, model.params(), model.stage(t).encoder, x, state);
  const ParameterSet &p = model.params();
  const NodeId bits = binarizer_forward(graph, graph.parameter(p, model.binarizer_weight()),
                                        graph.parameter(p, model.binarizer_bias()), x, mode,
                                        noise.at_stage(t));
  return c.is_conv() ? graph.reshape(bits, {batch, c.bits_per_iteration}) : bits;
}

NodeId decode_step(Graph &graph, const Model &model, std::size_t t, NodeId bits,
                   std::vector<CellNodes> &state) {
  const ModelConfig &c = model.config();
  const Shape &s = graph.value(bits).shape();
  if (s.size() != 2 || s[1] != c.bits_per_iteration) {
    fail(ErrorCode::kShapeMismatch, "bit plane must be (B, " +
                                        std::to_string(c.bits_per_iteration) + "), got " +
                                        shape_string(s));
  }
  const std::size_t batch = s[0], q = c.bottleneck_side();
  NodeId x = c.is_conv() ? graph.reshape(bits, {batch, c.bottleneck_depth(), q, q}) : bits;
  x = apply_stack(graph, model.params(), model.stage(t).decoder, x, state);
  return graph.reshape(x, {batch, c.channels, c.patch_size, c.patch_size});
}

std::vector<StageNodes> build_chain(Graph &graph, const Model &model, NodeId r0, std::size_t n,
                                    BinarizeMode mode, const NoiseSource &noise) {
  const ModelConfig &c = model.config();
  if (n < 1 || n > c.max_iterations) {
    fail(ErrorCode::kOutOfRange, "iteration count " + std::to_string(n) + " outside [1, " +
                                     std::to_string(c.max_iterations) + "]");
  }
  std::vector<CellNodes> enc, dec;
  std::vector<StageNodes> stages;
  NodeId input = r0;
  for (std::size_t t = 0; t < n; ++t) {
    StageNodes s;
    s.bits = encode_step(graph, model, t, input, enc, mode, noise);
    s.prediction = decode_step(graph, model, t, s.bits, dec);
    s.target = c.is_lstm() ? r0 : input;
    s.residual = graph.sub(s.prediction, s.target);
    stages.push_back(s);
    input = s.residual;
  }
  return stages;
}

std::vector<StageOutput> run_chain(const Model &model, const Tensor &patches, std::size_t n,
                                   BinarizeMode mode, const NoiseSource &noise) {
  const bool single = patches.rank() == 3;
  Graph g;
  const NodeId r0 = g.constant(single ? patches.reshaped({1, patches.dim(0), patches.dim(1),
                                                          patches.dim(2)})
                                      : patches);
  const auto stages = build_chain(g, model, r0, n, mode, noise);
  std::vector<StageOutput> out;
  for (const auto &s : stages) {
    StageOutput o{g.value(s.bits), g.value(s.prediction), g.value(s.residual)};
    if (single) {
      o.bits = o.bits.reshaped({o.bits.size()});
      o.prediction = o.prediction.reshaped(patches.shape());
      o.residual = o.residual.reshaped(patches.shape());
    }
    out.push_back(std::move(o));
  }
  return out;
}

void Reconstruction::add(const Tensor &prediction) {
  ++steps_;
  if (lstm_ || steps_ == 1) {
    value_ = prediction;
    return;
  }
  if (prediction.shape() != value_.shape()) {
    fail(ErrorCode::kShapeMismatch, "prediction " + shape_string(prediction.shape()) +
                                        " vs reconstruction " + shape_string(value_.shape()));
  }
  const bool subtract = steps_ % 2 == 0;
  for (std::size_t i = 0; i < value_.size(); ++i) {
    value_[i] = subtract ? value_[i] - prediction[i] : value_[i] + prediction[i];
  }
}

const Tensor &Reconstruction::value() const {
  if (steps_ == 0) fail(ErrorCode::kState, "no stages decoded yet");
  return value_;
}

Tensor reconstruct(const Model &model, const std::vector<StageOutput> &outputs) {
  if (outputs.empty()) fail(ErrorCode::kInvalidArgument, "reconstruct needs at least one stage");
  Reconstruction r(model.config().is_lstm());
  for (const auto &o : outputs) r.add(o.prediction);
  return r.value();
}

EncoderSession::EncoderSession(const Model &model, const Tensor &patches)
    : model_(&model), r0_(patches), residual_(patches), recon_(model.config().is_lstm()) {
  check_patches(model.config(), patches.shape());
}

Tensor EncoderSession::step() {
  const std::size_t t = steps();
  check_stage(model_->config(), t);
  Graph g;
  std::vector<CellNodes> enc = load_states(g, enc_state_), dec = load_states(g, dec_state_);
  const NodeId input = g.constant(residual_);
  const NodeId bits = encode_step(g, *model_, t, input, enc, BinarizeMode::kInference, {});
  const NodeId pred = decode_step(g, *model_, t, bits, dec);
  const NodeId target = model_->config().is_lstm() ? g.constant(r0_) : input;
  residual_ = g.value(g.sub(pred, target));
  enc_state_ = save_states(g, enc);
  dec_state_ = save_states(g, dec);
  recon_.add(g.value(pred));
  return g.value(bits);
}

DecoderSession::DecoderSession(const Model &model, std::size_t batch)
    : model_(&model), batch_(batch), recon_(model.config().is_lstm()) {
  if (batch == 0) fail(ErrorCode::kInvalidArgument, "decoder batch must be positive");
}

void DecoderSession::step(const Tensor &bits) {
  const std::size_t t = steps();
  check_stage(model_->config(), t);
  const std::size_t width = model_->config().bits_per_iteration;
  if (bits.shape() != Shape{batch_, width}) {
    fail(ErrorCode::kShapeMismatch, "bit plane " + shape_string(bits.shape()) + " expected " +
                                        shape_string({batch_, width}));
  }
  for (double v : bits.data()) {
    if (v != 1.0 && v != -1.0) fail(ErrorCode::kInvalidArgument, "bit plane values must be +-1");
  }
  Graph g;
  std::vector<CellNodes> dec = load_states(g, dec_state_);
  const NodeId pred = decode_step(g, *model_, t, g.constant(bits), dec);
  dec_state_ = save_states(g, dec);
  recon_.add(g.value(pred));
}

Tensor decode_only(const Model &model, const std::vector<Tensor> &planes) {
  if (planes.empty()) fail(ErrorCode::kInvalidArgument, "decode_only needs at least one bit plane");
  const std::size_t width = model.config().bits_per_iteration;
  const bool single = planes[0].rank() == 1;
  const std::size_t batch = single ? 1 : planes[0].dim(0);
  DecoderSession session(model, batch);
  for (const Tensor &p : planes) {
    if (single && p.shape() != Shape{width}) {
      fail(ErrorCode::kShapeMismatch,
           "bit plane " + shape_string(p.shape()) + " expected (" + std::to_string(width) + ")");
    }
    session.step(single ? p.reshaped({1, width}) : p);
  }
  const ModelConfig &c = model.config();
  return single ? session.reconstruction().reshaped({c.channels, c.patch_size, c.patch_size})
                : session.reconstruction();
}

}  // namespace nntc
