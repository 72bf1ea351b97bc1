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

#ifndef NNTC_GRAPH_HPP
#define NNTC_GRAPH_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nntc/conv.hpp"
#include "nntc/noise.hpp"
#include "nntc/tensor.hpp"

namespace nntc {

struct Parameter {
  std::string name;
  Tensor value;
};

/// Trainable tensors in declaration order. Checkpoints store them in this
/// order and gradients are returned aligned with it.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter &operator[](std::size_t i) { return params_[i]; }
  const Parameter &operator[](std::size_t i) const { return params_[i]; }
  std::optional<std::size_t> find(const std::string &name) const;
  /// Number of scalar values across all parameters.
  std::size_t value_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind {
  kConstant,
  kVariable,
  kParameter,
  kAffine,
  kTanh,
  kSigmoid,
  kAdd,
  kSub,
  kMul,
  kScale,
  kConcat,
  kSlice,
  kReshape,
  kChannelBias,
  kConv2d,
  kDeconv2d,
  kInflate,
  kL2Loss,
  kBinarize,
};

enum class BinarizeMode { kStochastic, kInference };

/// Tape of forward operations over immutable tensor values, with
/// reverse-mode differentiation. Parameter nodes reference the
/// ParameterSet, which must outlive the graph and stay unmodified.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  NodeId constant(Tensor value);
  /// A leaf that receives a gradient but is not a parameter.
  NodeId variable(Tensor value);
  /// Repeated calls with the same index return the same node.
  NodeId parameter(const ParameterSet &params, std::size_t index);

  /// weight (out, in), bias (out), x (in) or (B, in): x W^T + b.
  NodeId affine(NodeId weight, NodeId bias, NodeId x);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  /// Axis-1 concatenation; all other dims must agree.
  NodeId concat(NodeId a, NodeId b);
  /// Axis-1 slice [begin, begin + count).
  NodeId slice(NodeId x, std::size_t begin, std::size_t count);
  NodeId reshape(NodeId x, Shape shape);
  /// x (B, C, ...) plus bias (C) broadcast over the trailing dims.
  NodeId channel_bias(NodeId x, NodeId bias);
  NodeId conv2d(NodeId weights, NodeId x, const ConvSpec &spec);
  NodeId deconv2d(NodeId weights, NodeId x, const ConvSpec &spec);
  NodeId inflate(NodeId x, std::size_t k);
  /// sum (pred - target)^2 / (pixel_count * step_count), shape {1}.
  NodeId l2_loss(NodeId pred, NodeId target, std::size_t pixel_count, std::size_t step_count);
  /// Elementwise +-1. Row b of axis 0 is patch noise.patch_offset + b and the
  /// flat index within the row is the unit. Backward passes gradients
  /// through unchanged.
  NodeId binarize(NodeId x, BinarizeMode mode, const NoiseSource &noise);

  const Tensor &value(NodeId id) const;
  OpKind kind(NodeId id) const { return nodes_.at(id.index).kind; }
  std::vector<NodeId> inputs(NodeId id) const { return nodes_.at(id.index).inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a {1}-shaped node. Returns dLoss/dParam aligned with
  /// params (zeros for parameters the loss does not touch).
  std::vector<Tensor> backward(NodeId loss, const ParameterSet &params);
  /// Gradient of a variable or parameter node from the last backward().
  const Tensor &gradient(NodeId id) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    const Tensor *external = nullptr;
    bool needs_grad = false;
    std::size_t param_index = 0;
    ConvSpec conv{};
    std::size_t a = 0, b = 0;
    double factor = 0.0;
  };

  NodeId push(Node node);
  const Node &node(NodeId id) const;
  void accumulate(NodeId id, const Tensor &grad);
  void accumulate(NodeId id, Tensor &&grad);
  Tensor &grad_buffer(NodeId id);
  void backward_node(std::size_t index);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<std::optional<NodeId>> param_nodes_;
};

/// Rebuilds the graph for each perturbation of params[param] and compares
/// central differences against backward(). Relative error per element is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8); returns the worst.
double finite_diff_check(const std::function<NodeId(Graph &)> &build, ParameterSet &params,
                         std::size_t param, double h);

}  // namespace nntc

#endif  // NNTC_GRAPH_HPP
