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

#ifndef NNTC_BINARIZER_HPP
#define NNTC_BINARIZER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>

#include "nntc/graph.hpp"
#include "nntc/noise.hpp"
#include "nntc/tensor.hpp"

namespace nntc {

/// +1 with probability (1 + x) / 2, else -1, so the expectation is x.
/// The draw is noise.uniform(patch, unit). Throws for |x| > 1.
double binarize_stochastic(double x, const NoiseSource &noise, std::uint64_t patch,
                           std::uint64_t unit);

/// Most likely outcome: -1 for x < 0, +1 otherwise (including 0).
inline double binarize_inference(double x) { return x < 0.0 ? -1.0 : 1.0; }

/// Graph form of B(x) = b(tanh(W x + b)). Dense weights are (bits, in); a
/// rank-4 weight (bits_per_pixel, in_channels, 1, 1) applies the same
/// projection per pixel of a (B, C, H, W) feature map.
NodeId binarizer_forward(Graph &graph, NodeId weight, NodeId bias, NodeId x, BinarizeMode mode,
                         const NoiseSource &noise);

struct BinarizerGradients {
  Tensor preactivation;  // d/d(W x + b)
  Tensor input;
  Tensor weight;
  Tensor bias;
};

/// Standalone dense bottleneck with an explicit forward/backward pair.
class BinarizerLayer {
 public:
  BinarizerLayer(Tensor weight, Tensor bias);

  std::size_t bit_count() const { return bias_.size(); }
  std::size_t input_dim() const { return weight_.dim(1); }
  const Tensor &weight() const { return weight_; }
  const Tensor &bias() const { return bias_; }

  /// activations: (in) or (B, in). Keeps tanh outputs for backward.
  Tensor forward(const Tensor &activations, BinarizeMode mode, const NoiseSource &noise);
  /// Straight-through: b contributes an identity Jacobian. Requires a prior
  /// train-mode forward().
  BinarizerGradients backward(const Tensor &upstream) const;

 private:
  Tensor weight_;
  Tensor bias_;
  std::optional<Tensor> input_;
  std::optional<Tensor> tanh_out_;
};

}  // namespace nntc

#endif  // NNTC_BINARIZER_HPP
