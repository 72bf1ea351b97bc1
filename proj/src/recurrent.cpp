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

#include "nntc/recurrent.hpp"

#include <cmath>

#include "hash.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

void check_state(const Tensor &t, const Shape &expected, const char *what) {
  if (t.shape() != expected) {
    fail(ErrorCode::kShapeMismatch, std::string("LSTM ") + what + " state " +
                                        shape_string(t.shape()) + " inconsistent with input; expected " +
                                        shape_string(expected));
  }
}

CellNodes load_state(Graph &g, const LstmLayerState &prev, const Shape &shape) {
  if (prev.h.empty() != prev.c.empty()) {
    fail(ErrorCode::kState, "LSTM state has only one of h and c");
  }
  if (prev.h.empty()) {
    return {g.constant(Tensor(shape, 0.0)), g.constant(Tensor(shape, 0.0))};
  }
  check_state(prev.h, shape, "hidden");
  check_state(prev.c, shape, "cell");
  return {g.constant(prev.h), g.constant(prev.c)};
}

Shape spatial_state(const Shape &x_shape, std::size_t depth, std::size_t h, std::size_t w) {
  if (x_shape.size() == 4) return {x_shape[0], depth, h, w};
  return {depth, h, w};
}

NodeId batch_of_one(Graph &g, NodeId x) {
  const Shape &s = g.value(x).shape();
  return g.reshape(x, {1, s[0], s[1], s[2]});
}

// Runs a spatial cell on a (B, C, H, W) view; unbatched (C, H, W) operands
// are lifted to a batch of one and the outputs dropped back.
template <typename Pre>
CellNodes spatial_step(Graph &g, const Shape &state, NodeId x, CellNodes prev, Pre pre) {
  if (state.size() == 4) return lstm_gates(g, pre(x, prev.h), prev.c);
  const CellNodes out =
      lstm_gates(g, pre(batch_of_one(g, x), batch_of_one(g, prev.h)), batch_of_one(g, prev.c));
  return {g.reshape(out.h, state), g.reshape(out.c, state)};
}

template <typename Cell>
LstmLayerState run_step(const Cell &cell, const ParameterSet &params, const Tensor &x,
                        const LstmLayerState &prev) {
  Graph g;
  const CellNodes prev_nodes = load_state(g, prev, cell.state_shape(x.shape()));
  const CellNodes next = cell.step(g, params, g.constant(x), prev_nodes);
  return {g.value(next.h), g.value(next.c)};
}

}  // namespace

Tensor Initializer::uniform(Shape shape, std::size_t fan_in) {
  if (fan_in == 0) fail(ErrorCode::kInvalidArgument, "fan_in must be positive");
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  const std::uint64_t stream = detail::absorb(detail::mix64(seed_), counter_++);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = detail::unit_interval(detail::absorb(stream, i));
    t[i] = (2.0 * u - 1.0) * s;
  }
  return t;
}

void LstmState::reset() {
  for (auto &layer : layers) {
    for (auto &v : layer.h.data()) v = 0.0;
    for (auto &v : layer.c.data()) v = 0.0;
  }
}

CellNodes lstm_gates(Graph &graph, NodeId pre, NodeId c_prev) {
  const Tensor &p = graph.value(pre);
  if (p.rank() < 2 || p.dim(1) % 4 != 0) {
    fail(ErrorCode::kShapeMismatch,
         "LSTM pre-activation needs 4n channels on axis 1, got " + shape_string(p.shape()));
  }
  const std::size_t n = p.dim(1) / 4;
  const NodeId i = graph.sigmoid(graph.slice(pre, 0, n));
  const NodeId f = graph.sigmoid(graph.slice(pre, n, n));
  const NodeId o = graph.sigmoid(graph.slice(pre, 2 * n, n));
  const NodeId gate = graph.tanh(graph.slice(pre, 3 * n, n));
  const NodeId c = graph.add(graph.mul(f, c_prev), graph.mul(i, gate));
  const NodeId h = graph.mul(o, graph.tanh(c));
  return {h, c};
}

FcLstmCell FcLstmCell::create(ParameterSet &params, const std::string &prefix,
                              std::size_t input_dim, std::size_t units, Initializer &init) {
  FcLstmCell cell;
  cell.input_dim = input_dim;
  cell.units = units;
  const std::size_t fan_in = input_dim + units;
  cell.weight = params.add(prefix + "/w", init.uniform({4 * units, fan_in}, fan_in));
  cell.bias = params.add(prefix + "/b", init.uniform({4 * units}, fan_in));
  return cell;
}

Shape FcLstmCell::state_shape(const Shape &x_shape) const {
  if (x_shape.empty() || x_shape.back() != input_dim || x_shape.size() > 2) {
    fail(ErrorCode::kShapeMismatch, "fc LSTM expects (B, " + std::to_string(input_dim) +
                                        ") input, got " + shape_string(x_shape));
  }
  if (x_shape.size() == 2) return {x_shape[0], units};
  return {units};
}

CellNodes FcLstmCell::step(Graph &graph, const ParameterSet &params, NodeId x,
                           CellNodes prev) const {
  const Shape expected = state_shape(graph.value(x).shape());
  check_state(graph.value(prev.h), expected, "hidden");
  check_state(graph.value(prev.c), expected, "cell");
  NodeId joint;
  if (expected.size() == 1) {
    joint = graph.reshape(graph.concat(graph.reshape(x, {1, input_dim}),
                                       graph.reshape(prev.h, {1, units})),
                          {input_dim + units});
  } else {
    joint = graph.concat(x, prev.h);
  }
  const NodeId pre =
      graph.affine(graph.parameter(params, weight), graph.parameter(params, bias), joint);
  if (expected.size() == 1) {
    const CellNodes out = lstm_gates(graph, graph.reshape(pre, {1, 4 * units}),
                                     graph.reshape(prev.c, {1, units}));
    return {graph.reshape(out.h, {units}), graph.reshape(out.c, {units})};
  }
  return lstm_gates(graph, pre, prev.c);
}

ConvLstmCell ConvLstmCell::create(ParameterSet &params, const std::string &prefix,
                                  std::size_t in_channels, std::size_t depth,
                                  std::size_t kernel, std::size_t stride,
                                  std::size_t recurrent_kernel, Initializer &init) {
  ConvLstmCell cell;
  cell.input_spec = ConvSpec::same(in_channels, 4 * depth, kernel, stride);
  cell.recurrent_spec = ConvSpec::same(depth, 4 * depth, recurrent_kernel, 1);
  const std::size_t fan_in = in_channels * kernel * kernel + depth * recurrent_kernel * recurrent_kernel;
  cell.input_weight = params.add(prefix + "/w_in", init.uniform(cell.input_spec.weight_shape(), fan_in));
  cell.recurrent_weight =
      params.add(prefix + "/w_rec", init.uniform(cell.recurrent_spec.weight_shape(), fan_in));
  cell.bias = params.add(prefix + "/b", init.uniform({4 * depth}, fan_in));
  return cell;
}

Shape ConvLstmCell::state_shape(const Shape &x_shape) const {
  if (x_shape.size() < 3) {
    fail(ErrorCode::kShapeMismatch, "conv LSTM input must be spatial, got " + shape_string(x_shape));
  }
  const std::size_t h = x_shape[x_shape.size() - 2], w = x_shape[x_shape.size() - 1];
  return spatial_state(x_shape, depth(), input_spec.conv_out_h(h), input_spec.conv_out_w(w));
}

CellNodes ConvLstmCell::step(Graph &graph, const ParameterSet &params, NodeId x,
                             CellNodes prev) const {
  const Shape expected = state_shape(graph.value(x).shape());
  check_state(graph.value(prev.h), expected, "hidden");
  check_state(graph.value(prev.c), expected, "cell");
  return spatial_step(graph, expected, x, prev, [&](NodeId xb, NodeId hb) {
    const NodeId in = graph.conv2d(graph.parameter(params, input_weight), xb, input_spec);
    const NodeId rec = graph.conv2d(graph.parameter(params, recurrent_weight), hb, recurrent_spec);
    return graph.channel_bias(graph.add(in, rec), graph.parameter(params, bias));
  });
}

DeconvLstmCell DeconvLstmCell::create(ParameterSet &params, const std::string &prefix,
                                      std::size_t in_channels, std::size_t depth,
                                      std::size_t kernel, std::size_t stride,
                                      std::size_t recurrent_kernel, Initializer &init) {
  DeconvLstmCell cell;
  cell.input_spec = ConvSpec::same(in_channels, 4 * depth, kernel, stride);
  cell.recurrent_spec = ConvSpec::same(depth, 4 * depth, recurrent_kernel, 1);
  const std::size_t fan_in = in_channels * kernel * kernel + depth * recurrent_kernel * recurrent_kernel;
  cell.input_weight = params.add(prefix + "/w_in", init.uniform(cell.input_spec.weight_shape(), fan_in));
  cell.recurrent_weight =
      params.add(prefix + "/w_rec", init.uniform(cell.recurrent_spec.weight_shape(), fan_in));
  cell.bias = params.add(prefix + "/b", init.uniform({4 * depth}, fan_in));
  return cell;
}

Shape DeconvLstmCell::state_shape(const Shape &x_shape) const {
  if (x_shape.size() < 3) {
    fail(ErrorCode::kShapeMismatch, "deconv LSTM input must be spatial, got " + shape_string(x_shape));
  }
  const std::size_t h = x_shape[x_shape.size() - 2], w = x_shape[x_shape.size() - 1];
  return spatial_state(x_shape, depth(), input_spec.deconv_out_h(h), input_spec.deconv_out_w(w));
}

CellNodes DeconvLstmCell::step(Graph &graph, const ParameterSet &params, NodeId x,
                               CellNodes prev) const {
  const Shape expected = state_shape(graph.value(x).shape());
  check_state(graph.value(prev.h), expected, "hidden");
  check_state(graph.value(prev.c), expected, "cell");
  return spatial_step(graph, expected, x, prev, [&](NodeId xb, NodeId hb) {
    const NodeId in = graph.deconv2d(graph.parameter(params, input_weight), xb, input_spec);
    const NodeId rec = graph.conv2d(graph.parameter(params, recurrent_weight), hb, recurrent_spec);
    return graph.channel_bias(graph.add(in, rec), graph.parameter(params, bias));
  });
}

LstmLayerState fc_lstm_step(const FcLstmCell &cell, const ParameterSet &params, const Tensor &x,
                            const LstmLayerState &prev) {
  return run_step(cell, params, x, prev);
}

LstmLayerState conv_lstm_step(const ConvLstmCell &cell, const ParameterSet &params,
                              const Tensor &x, const LstmLayerState &prev) {
  return run_step(cell, params, x, prev);
}

LstmLayerState deconv_lstm_step(const DeconvLstmCell &cell, const ParameterSet &params,
                                const Tensor &x, const LstmLayerState &prev) {
  return run_step(cell, params, x, prev);
}

}  // namespace nntc
