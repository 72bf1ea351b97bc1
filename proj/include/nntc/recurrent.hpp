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

#ifndef NNTC_RECURRENT_HPP
#define NNTC_RECURRENT_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nntc/conv.hpp"
#include "nntc/graph.hpp"
#include "nntc/tensor.hpp"

namespace nntc {

/// Uniform(-s, s) with s = 1 / sqrt(fan_in), drawn from a counter-based
/// stream so initial weights are identical on every platform.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : seed_(seed) {}
  Tensor uniform(Shape shape, std::size_t fan_in);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Hidden and cell state of one LSTM layer.
struct LstmLayerState {
  Tensor h;
  Tensor c;
};

/// Per-layer recurrent state. Empty entries read as zeros of the right shape.
struct LstmState {
  std::vector<LstmLayerState> layers;

  /// Zeroes every stored tensor, keeping shapes.
  void reset();
};

struct CellNodes {
  NodeId h;
  NodeId c;
};

/// Applies (i, f, o, g) = (sigm, sigm, sigm, tanh) to the four axis-1 blocks
/// of pre, then c = f*c_prev + i*g and h = o*tanh(c).
CellNodes lstm_gates(Graph &graph, NodeId pre, NodeId c_prev);

/// Fully-connected LSTM: one affine T_4n over concat(x, h_prev).
/// weight (4n, in + n), bias (4n).
struct FcLstmCell {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t input_dim = 0;
  std::size_t units = 0;

  static FcLstmCell create(ParameterSet &params, const std::string &prefix,
                           std::size_t input_dim, std::size_t units, Initializer &init);
  /// x is (B, in); state is (B, n).
  Shape state_shape(const Shape &x_shape) const;
  CellNodes step(Graph &graph, const ParameterSet &params, NodeId x, CellNodes prev) const;
};

/// T_4n = W_in (x)_k x + W_rec (x)_1 h_prev + b.
struct ConvLstmCell {
  std::size_t input_weight = 0;
  std::size_t recurrent_weight = 0;
  std::size_t bias = 0;
  ConvSpec input_spec;
  ConvSpec recurrent_spec;

  static ConvLstmCell create(ParameterSet &params, const std::string &prefix,
                             std::size_t in_channels, std::size_t depth, std::size_t kernel,
                             std::size_t stride, std::size_t recurrent_kernel,
                             Initializer &init);
  std::size_t depth() const { return recurrent_spec.in_channels; }
  Shape state_shape(const Shape &x_shape) const;
  CellNodes step(Graph &graph, const ParameterSet &params, NodeId x, CellNodes prev) const;
};

/// T_4n = W_d (/)_k x + W_c (x)_1 h_prev + b.
struct DeconvLstmCell {
  std::size_t input_weight = 0;
  std::size_t recurrent_weight = 0;
  std::size_t bias = 0;
  ConvSpec input_spec;
  ConvSpec recurrent_spec;

  static DeconvLstmCell create(ParameterSet &params, const std::string &prefix,
                               std::size_t in_channels, std::size_t depth, std::size_t kernel,
                               std::size_t stride, std::size_t recurrent_kernel,
                               Initializer &init);
  std::size_t depth() const { return recurrent_spec.in_channels; }
  Shape state_shape(const Shape &x_shape) const;
  CellNodes step(Graph &graph, const ParameterSet &params, NodeId x, CellNodes prev) const;
};

/// Single-step tensor versions. An empty prev state means zeros.
LstmLayerState fc_lstm_step(const FcLstmCell &cell, const ParameterSet &params, const Tensor &x,
                            const LstmLayerState &prev);
LstmLayerState conv_lstm_step(const ConvLstmCell &cell, const ParameterSet &params,
                              const Tensor &x, const LstmLayerState &prev);
LstmLayerState deconv_lstm_step(const DeconvLstmCell &cell, const ParameterSet &params,
                                const Tensor &x, const LstmLayerState &prev);

}  // namespace nntc

#endif  // NNTC_RECURRENT_HPP
