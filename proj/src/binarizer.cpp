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

#include "nntc/binarizer.hpp"

#include <cmath>
#include <string>

#include "gemm.hpp"
#include "hash.hpp"
#include "nntc/error.hpp"

namespace nntc {

double NoiseSource::uniform(std::uint64_t patch, std::uint64_t unit) const {
  using detail::absorb;
  std::uint64_t h = detail::mix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = absorb(h, step);
  h = absorb(h, stage);
  h = absorb(h, patch);
  h = absorb(h, unit);
  return detail::unit_interval(h);
}

double binarize_stochastic(double x, const NoiseSource &noise, std::uint64_t patch,
                           std::uint64_t unit) {
  if (!(x >= -1.0 && x <= 1.0)) {
    fail(ErrorCode::kOutOfRange,
         "stochastic binarization input " + std::to_string(x) + " outside [-1, 1]");
  }
  return noise.uniform(patch, unit) < 0.5 * (1.0 + x) ? 1.0 : -1.0;
}

NodeId binarizer_forward(Graph &graph, NodeId weight, NodeId bias, NodeId x, BinarizeMode mode,
                         const NoiseSource &noise) {
  NodeId pre;
  if (graph.value(weight).rank() == 4) {
    const Shape &ws = graph.value(weight).shape();
    if (ws[2] != 1 || ws[3] != 1) {
      fail(ErrorCode::kShapeMismatch,
           "per-pixel binarizer needs 1x1 weights, got " + shape_string(ws));
    }
    const ConvSpec spec{1, 1, ws[1], ws[0], 1, 0, 0};
    pre = graph.channel_bias(graph.conv2d(weight, x, spec), bias);
  } else {
    pre = graph.affine(weight, bias, x);
  }
  return graph.binarize(graph.tanh(pre), mode, noise);
}

BinarizerLayer::BinarizerLayer(Tensor weight, Tensor bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rank() != 2 || bias_.rank() != 1 || weight_.dim(0) != bias_.dim(0)) {
    fail(ErrorCode::kShapeMismatch, "binarizer weight " + shape_string(weight_.shape()) +
                                        " and bias " + shape_string(bias_.shape()) +
                                        " disagree");
  }
}

Tensor BinarizerLayer::forward(const Tensor &activations, BinarizeMode mode,
                               const NoiseSource &noise) {
  const bool batched = activations.rank() == 2;
  if (!(batched || activations.rank() == 1) ||
      activations.dim(activations.rank() - 1) != input_dim()) {
    fail(ErrorCode::kShapeMismatch, "binarizer expects " + std::to_string(input_dim()) +
                                        " inputs, got " + shape_string(activations.shape()));
  }
  const std::size_t rows = batched ? activations.dim(0) : 1;
  const std::size_t bits = bit_count();
  Tensor t(batched ? Shape{rows, bits} : Shape{bits});
  detail::gemm(detail::Trans::kNo, detail::Trans::kYes, rows, bits, input_dim(),
               activations.data().data(), weight_.data().data(), t.data().data(), false);
  Tensor out = t;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < bits; ++j) {
      double &v = t[r * bits + j];
      v = std::tanh(v + bias_[j]);
      out[r * bits + j] = mode == BinarizeMode::kStochastic
                              ? binarize_stochastic(v, noise, noise.patch_offset + r, j)
                              : binarize_inference(v);
    }
  }
  if (mode == BinarizeMode::kStochastic) {
    input_ = activations;
    tanh_out_ = std::move(t);
  } else {
    input_.reset();
    tanh_out_.reset();
  }
  return out;
}

BinarizerGradients BinarizerLayer::backward(const Tensor &upstream) const {
  if (!tanh_out_) {
    fail(ErrorCode::kState, "binarizer backward called without a train-mode forward");
  }
  if (upstream.shape() != tanh_out_->shape()) {
    fail(ErrorCode::kShapeMismatch, "binarizer upstream gradient " +
                                        shape_string(upstream.shape()) + " vs output " +
                                        shape_string(tanh_out_->shape()));
  }
  const std::size_t bits = bit_count();
  const std::size_t rows = upstream.size() / bits;
  BinarizerGradients g{upstream, Tensor(input_->shape()), Tensor(weight_.shape()),
                       Tensor(bias_.shape())};
  for (std::size_t i = 0; i < g.preactivation.size(); ++i) {
    const double t = (*tanh_out_)[i];
    g.preactivation[i] = upstream[i] * (1.0 - t * t);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < bits; ++j) g.bias[j] += g.preactivation[r * bits + j];
  }
  detail::gemm(detail::Trans::kYes, detail::Trans::kNo, bits, input_dim(), rows,
               g.preactivation.data().data(), input_->data().data(), g.weight.data().data(),
               false);
  detail::gemm(detail::Trans::kNo, detail::Trans::kNo, rows, input_dim(), bits,
               g.preactivation.data().data(), weight_.data().data(), g.input.data().data(),
               false);
  return g;
}

}  // namespace nntc
