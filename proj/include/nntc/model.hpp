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

#ifndef NNTC_MODEL_HPP
#define NNTC_MODEL_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "nntc/graph.hpp"
#include "nntc/recurrent.hpp"
#include "nntc/tensor.hpp"

namespace nntc {

enum class Variant { kFcResidual, kFcLstm, kConvResidual, kConvLstm };
enum class WeightPolicy { kShared, kDistinct };

const char *variant_name(Variant v);
Variant parse_variant(const std::string &name);
const char *weight_policy_name(WeightPolicy p);
WeightPolicy parse_weight_policy(const std::string &name);

struct ModelConfig {
  Variant variant = Variant::kConvLstm;
  WeightPolicy weight_policy = WeightPolicy::kShared;
  std::size_t patch_size = 32;
  std::size_t bits_per_iteration = 128;
  std::size_t max_iterations = 16;
  std::size_t channels = 3;
  /// Width of every fully-connected and fc-LSTM layer.
  std::size_t hidden_units = 512;
  /// Filters of the three encoder layers; the decoder mirrors them.
  std::array<std::size_t, 3> conv_filters = {64, 256, 512};
  std::size_t kernel_size = 3;
  std::size_t recurrent_kernel = 1;

  /// Defaults for a variant: 8x8 patches with 8 bits per step for the fc
  /// models, 32x32 patches with 2 bits per pixel at 8x8 for the conv models.
  static ModelConfig defaults(Variant variant);

  bool is_lstm() const { return variant == Variant::kFcLstm || variant == Variant::kConvLstm; }
  bool is_conv() const { return variant == Variant::kConvResidual || variant == Variant::kConvLstm; }
  /// Side of the conv bottleneck grid (patch / 4).
  std::size_t bottleneck_side() const { return patch_size / 4; }
  /// Bits per bottleneck pixel for conv variants.
  std::size_t bottleneck_depth() const;
  std::size_t total_bits() const { return bits_per_iteration * max_iterations; }
  std::size_t patch_values() const { return channels * patch_size * patch_size; }

  /// Throws kInvalidArgument naming the offending field.
  void validate() const;

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/// Dense(in -> out) followed by tanh.
struct DenseLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

/// Convolution or deconvolution with per-channel bias, followed by tanh.
struct ConvLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
  ConvSpec spec;
  bool transposed = false;
};

using Layer = std::variant<DenseLayer, ConvLayer, FcLstmCell, ConvLstmCell, DeconvLstmCell>;

/// Encoder E_t and decoder D_t parameters of one chain stage.
struct StageLayers {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
};

class Model {
 public:
  /// Validates config and draws initial weights from seed.
  static Model build(const ModelConfig &config, std::uint64_t seed);

  const ModelConfig &config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  /// Stage t (0-based) layers; shared and LSTM models hold one copy.
  const StageLayers &stage(std::size_t t) const;
  std::size_t stage_copies() const { return stages_.size(); }
  std::size_t binarizer_weight() const { return bin_weight_; }
  std::size_t binarizer_bias() const { return bin_bias_; }
  /// LSTM layers in each stack, i.e. the state slots a session carries.
  std::size_t encoder_state_slots() const;
  std::size_t decoder_state_slots() const;

 private:
  ModelConfig config_;
  std::uint64_t seed_ = 0;
  ParameterSet params_;
  std::vector<StageLayers> stages_;
  std::size_t bin_weight_ = 0;
  std::size_t bin_bias_ = 0;
};

/// Graph-level pieces of one stage. Patches are (B, C, P, P); bits are
/// (B, bits_per_iteration) in channel-major bottleneck order. State vectors
/// hold one entry per LSTM layer, are updated in place, and start empty,
/// which reads as zeros. The binarizer draws from noise.at_stage(t).
NodeId encode_step(Graph &graph, const Model &model, std::size_t t, NodeId input,
                   std::vector<CellNodes> &state, BinarizeMode mode, const NoiseSource &noise);
NodeId decode_step(Graph &graph, const Model &model, std::size_t t, NodeId bits,
                   std::vector<CellNodes> &state);

struct StageNodes {
  NodeId bits;
  NodeId prediction;
  NodeId residual;
  /// What the prediction is trained to match: r_{t-1} or r_0.
  NodeId target;
};

/// Unrolls n stages on r0 in one graph. Stage t uses noise.at_stage(t).
std::vector<StageNodes> build_chain(Graph &graph, const Model &model, NodeId r0, std::size_t n,
                                    BinarizeMode mode, const NoiseSource &noise);

struct StageOutput {
  Tensor bits;
  Tensor prediction;
  Tensor residual;
};

/// patches (B, C, P, P) or a single (C, P, P) patch scaled to network range.
std::vector<StageOutput> run_chain(const Model &model, const Tensor &patches, std::size_t n,
                                   BinarizeMode mode, const NoiseSource &noise = {});

/// Running reconstruction. Feed-forward chains add predictions with
/// alternating signs; LSTM chains take the latest prediction. Encoder and
/// decoder sides both go through this so they agree bit for bit.
class Reconstruction {
 public:
  explicit Reconstruction(bool lstm) : lstm_(lstm) {}
  void add(const Tensor &prediction);
  const Tensor &value() const;
  std::size_t steps() const { return steps_; }

 private:
  bool lstm_;
  std::size_t steps_ = 0;
  Tensor value_;
};

Tensor reconstruct(const Model &model, const std::vector<StageOutput> &outputs);

/// Step-at-a-time encoder with inference binarization, for dynamic bit
/// assignment. Holds both encoder and decoder state so the running
/// reconstruction is available after each step.
class EncoderSession {
 public:
  EncoderSession(const Model &model, const Tensor &patches);
  /// Runs one more stage and returns its bits (B, bits_per_iteration).
  Tensor step();
  std::size_t steps() const { return recon_.steps(); }
  const Tensor &reconstruction() const { return recon_.value(); }
  const Tensor &residual() const { return residual_; }

 private:
  const Model *model_;
  Tensor r0_;
  Tensor residual_;
  std::vector<LstmLayerState> enc_state_;
  std::vector<LstmLayerState> dec_state_;
  Reconstruction recon_;
};

/// Decoder-side counterpart; never touches encoder parameters.
class DecoderSession {
 public:
  DecoderSession(const Model &model, std::size_t batch);
  /// Consumes one bit plane (B, bits_per_iteration) of +-1 values.
  void step(const Tensor &bits);
  std::size_t steps() const { return recon_.steps(); }
  const Tensor &reconstruction() const { return recon_.value(); }

 private:
  const Model *model_;
  std::size_t batch_;
  std::vector<LstmLayerState> dec_state_;
  Reconstruction recon_;
};

/// Decodes planes[0..t) for one batch of patches and returns (B, C, P, P).
Tensor decode_only(const Model &model, const std::vector<Tensor> &planes);

}  // namespace nntc

#endif  // NNTC_MODEL_HPP
