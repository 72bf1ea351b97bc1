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

#ifndef NNTC_CONV_HPP
#define NNTC_CONV_HPP

#include <cstddef>

#include "nntc/tensor.hpp"

namespace nntc {

/// Geometry of a 2-D (de)convolution. Weights are laid out
/// (out_channels, in_channels, kernel_h, kernel_w) and applied as a
/// cross-correlation. pad_h / pad_w are zero rows/columns added on each side.
struct ConvSpec {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t stride = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;

  /// Odd square kernel with symmetric "same" padding: a stride-k conv maps
  /// kn -> n and the matching deconv maps n -> kn.
  static ConvSpec same(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                       std::size_t stride = 1);

  Shape weight_shape() const { return {out_channels, in_channels, kernel_h, kernel_w}; }

  /// floor((in + 2 pad - kernel) / stride) + 1; throws when < 1.
  std::size_t conv_out_h(std::size_t in) const;
  std::size_t conv_out_w(std::size_t in) const;
  /// stride * in + 2 pad - kernel + 1, the stride-1 conv of the inflated grid.
  std::size_t deconv_out_h(std::size_t in) const;
  std::size_t deconv_out_w(std::size_t in) const;

  friend bool operator==(const ConvSpec &, const ConvSpec &) = default;
};

/// Strided convolution W (x)_k x. x is (C, H, W) or (B, C, H, W); the result
/// has the same rank. Equal, element for element, to subsample(conv stride 1).
Tensor conv2d(const Tensor &weights, const Tensor &x, const ConvSpec &spec);

/// W (/)_k x = W (x)_1 inflate(x, k). Computed per output phase so only
/// non-zero taps are visited, summing in the same order as the reference
/// composition; results are bit-identical to it.
Tensor deconv2d(const Tensor &weights, const Tensor &x, const ConvSpec &spec);

/// T_k: (.., H, W) -> (.., kH, kW) with x(i, j) at (ki, kj), zeros elsewhere.
Tensor inflate(const Tensor &x, std::size_t k);

/// S_k: keeps every k-th row and column starting at 0.
Tensor subsample(const Tensor &x, std::size_t k);

/// Accumulates into grad_weights / grad_x when non-null (must be pre-shaped).
void conv2d_backward(const Tensor &weights, const Tensor &x, const ConvSpec &spec,
                     const Tensor &grad_out, Tensor *grad_weights, Tensor *grad_x);
void deconv2d_backward(const Tensor &weights, const Tensor &x, const ConvSpec &spec,
                       const Tensor &grad_out, Tensor *grad_weights, Tensor *grad_x);

}  // namespace nntc

#endif  // NNTC_CONV_HPP
