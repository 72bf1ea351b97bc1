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

#include "nntc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "gemm.hpp"
#include "nntc/binarizer.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

using detail::gemm;
using detail::Trans;

void require_same_shape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::kShapeMismatch, std::string(op) + ": shapes " + shape_string(a.shape()) +
                                        " and " + shape_string(b.shape()) + " differ");
  }
}

// (outer, axis-1 extent, inner) view used by concat / slice / channel bias.
struct AxisView {
  std::size_t outer, mid, inner;
};

AxisView axis1_view(const Tensor &t, const char *op) {
  if (t.rank() < 2) {
    fail(ErrorCode::kShapeMismatch,
         std::string(op) + " needs rank >= 2, got " + shape_string(t.shape()));
  }
  return {t.dim(0), t.dim(1), t.size() / (t.dim(0) * t.dim(1))};
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::size_t ParameterSet::add(std::string name, Tensor value) {
  if (find(name)) fail(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  params_.push_back({std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string &name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSet::value_count() const {
  std::size_t n = 0;
  for (const auto &p : params_) n += p.value.size();
  return n;
}

NodeId Graph::push(Node node) {
  for (auto in : node.inputs) {
    if (nodes_.at(in.index).needs_grad) node.needs_grad = true;
  }
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Graph::Node &Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) fail(ErrorCode::kOutOfRange, "unknown graph node");
  return nodes_[id.index];
}

const Tensor &Graph::value(NodeId id) const {
  const Node &n = node(id);
  return n.external != nullptr ? *n.external : n.value;
}

NodeId Graph::constant(Tensor value) {
  Node n{OpKind::kConstant, {}, std::move(value)};
  return push(std::move(n));
}

NodeId Graph::variable(Tensor value) {
  Node n{OpKind::kVariable, {}, std::move(value)};
  n.needs_grad = true;
  return push(std::move(n));
}

NodeId Graph::parameter(const ParameterSet &params, std::size_t index) {
  if (index >= params.size()) fail(ErrorCode::kOutOfRange, "unknown parameter index");
  if (param_nodes_.size() < params.size()) param_nodes_.resize(params.size());
  if (param_nodes_[index]) return *param_nodes_[index];
  Node n{OpKind::kParameter, {}, {}};
  n.external = &params[index].value;
  n.needs_grad = true;
  n.param_index = index;
  const NodeId id = push(std::move(n));
  param_nodes_[index] = id;
  return id;
}

NodeId Graph::affine(NodeId weight, NodeId bias, NodeId x) {
  const Tensor &w = value(weight);
  const Tensor &b = value(bias);
  const Tensor &in = value(x);
  if (w.rank() != 2 || b.rank() != 1 || w.dim(0) != b.dim(0)) {
    fail(ErrorCode::kShapeMismatch, "affine: weight " + shape_string(w.shape()) +
                                        " and bias " + shape_string(b.shape()) + " disagree");
  }
  const bool batched = in.rank() == 2;
  if (!(batched || in.rank() == 1) || in.dim(in.rank() - 1) != w.dim(1)) {
    fail(ErrorCode::kShapeMismatch, "affine: weight " + shape_string(w.shape()) +
                                        " cannot apply to input " + shape_string(in.shape()));
  }
  const std::size_t rows = batched ? in.dim(0) : 1;
  const std::size_t out_dim = w.dim(0);
  Tensor out(batched ? Shape{rows, out_dim} : Shape{out_dim});
  gemm(Trans::kNo, Trans::kYes, rows, out_dim, w.dim(1), in.data().data(), w.data().data(),
       out.data().data(), false);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < out_dim; ++j) out[r * out_dim + j] += b[j];
  }
  return push({OpKind::kAffine, {weight, bias, x}, std::move(out)});
}

NodeId Graph::tanh(NodeId x) {
  Tensor out = value(x);
  for (auto &v : out.data()) v = std::tanh(v);
  return push({OpKind::kTanh, {x}, std::move(out)});
}

NodeId Graph::sigmoid(NodeId x) {
  Tensor out = value(x);
  for (auto &v : out.data()) v = sigmoid_scalar(v);
  return push({OpKind::kSigmoid, {x}, std::move(out)});
}

NodeId Graph::add(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  const Tensor &rhs = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += rhs[i];
  return push({OpKind::kAdd, {a, b}, std::move(out)});
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "sub");
  Tensor out = value(a);
  const Tensor &rhs = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rhs[i];
  return push({OpKind::kSub, {a, b}, std::move(out)});
}

NodeId Graph::mul(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  const Tensor &rhs = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= rhs[i];
  return push({OpKind::kMul, {a, b}, std::move(out)});
}

NodeId Graph::scale(NodeId x, double factor) {
  Tensor out = value(x);
  for (auto &v : out.data()) v *= factor;
  Node n{OpKind::kScale, {x}, std::move(out)};
  n.factor = factor;
  return push(std::move(n));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Tensor &lhs = value(a);
  const Tensor &rhs = value(b);
  const AxisView va = axis1_view(lhs, "concat");
  const AxisView vb = axis1_view(rhs, "concat");
  Shape sa = lhs.shape(), sb = rhs.shape();
  sa[1] = sb[1] = 0;
  if (sa != sb) {
    fail(ErrorCode::kShapeMismatch, "concat: shapes " + shape_string(lhs.shape()) + " and " +
                                        shape_string(rhs.shape()) + " differ off axis 1");
  }
  Shape shape = lhs.shape();
  shape[1] = va.mid + vb.mid;
  Tensor out(shape);
  const std::size_t row_a = va.mid * va.inner, row_b = vb.mid * vb.inner;
  for (std::size_t o = 0; o < va.outer; ++o) {
    std::copy_n(lhs.data().data() + o * row_a, row_a, out.data().data() + o * (row_a + row_b));
    std::copy_n(rhs.data().data() + o * row_b, row_b,
                out.data().data() + o * (row_a + row_b) + row_a);
  }
  Node n{OpKind::kConcat, {a, b}, std::move(out)};
  n.a = va.mid;
  return push(std::move(n));
}

NodeId Graph::slice(NodeId x, std::size_t begin, std::size_t count) {
  const Tensor &in = value(x);
  const AxisView v = axis1_view(in, "slice");
  if (count == 0 || begin + count > v.mid) {
    fail(ErrorCode::kOutOfRange, "slice [" + std::to_string(begin) + ", " +
                                     std::to_string(begin + count) + ") of " +
                                     shape_string(in.shape()));
  }
  Shape shape = in.shape();
  shape[1] = count;
  Tensor out(shape);
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(in.data().data() + (o * v.mid + begin) * v.inner, count * v.inner,
                out.data().data() + o * count * v.inner);
  }
  Node n{OpKind::kSlice, {x}, std::move(out)};
  n.a = begin;
  n.b = count;
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, Shape shape) {
  return push({OpKind::kReshape, {x}, value(x).reshaped(std::move(shape))});
}

NodeId Graph::channel_bias(NodeId x, NodeId bias) {
  const Tensor &in = value(x);
  const Tensor &b = value(bias);
  const AxisView v = axis1_view(in, "channel_bias");
  if (b.rank() != 1 || b.dim(0) != v.mid) {
    fail(ErrorCode::kShapeMismatch, "channel_bias: bias " + shape_string(b.shape()) +
                                        " vs input " + shape_string(in.shape()));
  }
  Tensor out = in;
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t c = 0; c < v.mid; ++c) {
      double *p = out.data().data() + (o * v.mid + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) p[i] += b[c];
    }
  }
  return push({OpKind::kChannelBias, {x, bias}, std::move(out)});
}

NodeId Graph::conv2d(NodeId weights, NodeId x, const ConvSpec &spec) {
  Node n{OpKind::kConv2d, {weights, x}, nntc::conv2d(value(weights), value(x), spec)};
  n.conv = spec;
  return push(std::move(n));
}

NodeId Graph::deconv2d(NodeId weights, NodeId x, const ConvSpec &spec) {
  Node n{OpKind::kDeconv2d, {weights, x}, nntc::deconv2d(value(weights), value(x), spec)};
  n.conv = spec;
  return push(std::move(n));
}

NodeId Graph::inflate(NodeId x, std::size_t k) {
  Node n{OpKind::kInflate, {x}, nntc::inflate(value(x), k)};
  n.a = k;
  return push(std::move(n));
}

NodeId Graph::l2_loss(NodeId pred, NodeId target, std::size_t pixel_count,
                      std::size_t step_count) {
  const Tensor &p = value(pred);
  const Tensor &t = value(target);
  require_same_shape(p, t, "l2_loss");
  if (pixel_count == 0 || step_count == 0) {
    fail(ErrorCode::kInvalidArgument, "l2_loss needs positive pixel and step counts");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    s += d * d;
  }
  const double norm = static_cast<double>(pixel_count) * static_cast<double>(step_count);
  Node n{OpKind::kL2Loss, {pred, target}, Tensor::scalar(s / norm)};
  n.factor = norm;
  return push(std::move(n));
}

NodeId Graph::binarize(NodeId x, BinarizeMode mode, const NoiseSource &noise) {
  Tensor out = value(x);
  const std::size_t rows = out.rank() >= 2 ? out.dim(0) : 1;
  const std::size_t per_row = out.size() / rows;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t u = 0; u < per_row; ++u) {
      double &v = out[r * per_row + u];
      v = mode == BinarizeMode::kStochastic
              ? binarize_stochastic(v, noise, noise.patch_offset + r, u)
              : binarize_inference(v);
    }
  }
  return push({OpKind::kBinarize, {x}, std::move(out)});
}

Tensor &Graph::grad_buffer(NodeId id) {
  Tensor &g = grads_[id.index];
  if (g.empty()) g = Tensor(value(id).shape(), 0.0);
  return g;
}

void Graph::accumulate(NodeId id, const Tensor &grad) {
  if (!nodes_[id.index].needs_grad) return;
  Tensor &g = grad_buffer(id);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
}

const Tensor &Graph::gradient(NodeId id) const {
  if (id.index >= grads_.size() || grads_[id.index].empty()) {
    fail(ErrorCode::kState, "no gradient recorded for node; run backward() first");
  }
  return grads_[id.index];
}

std::vector<Tensor> Graph::backward(NodeId loss, const ParameterSet &params) {
  if (value(loss).shape() != Shape{1}) {
    fail(ErrorCode::kShapeMismatch,
         "backward needs a scalar loss, got " + shape_string(value(loss).shape()));
  }
  grads_.assign(nodes_.size(), Tensor{});
  if (nodes_[loss.index].needs_grad) grads_[loss.index] = Tensor::scalar(1.0);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (!nodes_[i].needs_grad || grads_[i].empty()) continue;
    backward_node(i);
  }
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (p < param_nodes_.size() && param_nodes_[p] && !grads_[param_nodes_[p]->index].empty()) {
      out.push_back(grads_[param_nodes_[p]->index]);
    } else {
      out.emplace_back(params[p].value.shape(), 0.0);
    }
  }
  return out;
}

void Graph::backward_node(std::size_t index) {
  const Node &n = nodes_[index];
  const Tensor &g = grads_[index];
  auto needs = [&](std::size_t k) { return nodes_[n.inputs[k].index].needs_grad; };
  switch (n.kind) {
    case OpKind::kConstant:
    case OpKind::kVariable:
    case OpKind::kParameter:
      return;
    case OpKind::kAffine: {
      const Tensor &w = value(n.inputs[0]);
      const Tensor &x = value(n.inputs[2]);
      const std::size_t rows = x.rank() == 2 ? x.dim(0) : 1;
      const std::size_t out_dim = w.dim(0), in_dim = w.dim(1);
      if (needs(0)) {
        gemm(Trans::kYes, Trans::kNo, out_dim, in_dim, rows, g.data().data(), x.data().data(),
             grad_buffer(n.inputs[0]).data().data(), true);
      }
      if (needs(1)) {
        Tensor &gb = grad_buffer(n.inputs[1]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < out_dim; ++j) gb[j] += g[r * out_dim + j];
        }
      }
      if (needs(2)) {
        gemm(Trans::kNo, Trans::kNo, rows, in_dim, out_dim, g.data().data(), w.data().data(),
             grad_buffer(n.inputs[2]).data().data(), true);
      }
      return;
    }
    case OpKind::kTanh: {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - n.value[i] * n.value[i];
      accumulate(n.inputs[0], d);
      return;
    }
    case OpKind::kSigmoid: {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= n.value[i] * (1.0 - n.value[i]);
      accumulate(n.inputs[0], d);
      return;
    }
    case OpKind::kAdd:
      accumulate(n.inputs[0], g);
      accumulate(n.inputs[1], g);
      return;
    case OpKind::kSub: {
      accumulate(n.inputs[0], g);
      if (needs(1)) {
        Tensor &gb = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
      }
      return;
    }
    case OpKind::kMul: {
      const Tensor &a = value(n.inputs[0]);
      const Tensor &b = value(n.inputs[1]);
      if (needs(0)) {
        Tensor &ga = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (needs(1)) {
        Tensor &gb = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * a[i];
      }
      return;
    }
    case OpKind::kScale: {
      if (!needs(0)) return;
      Tensor &gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * n.factor;
      return;
    }
    case OpKind::kConcat: {
      const AxisView v = axis1_view(n.value, "concat");
      const std::size_t row_a = n.a * v.inner;
      const std::size_t row = v.mid * v.inner;
      const std::size_t row_b = row - row_a;
      if (needs(0)) {
        Tensor &ga = grad_buffer(n.inputs[0]);
        for (std::size_t o = 0; o < v.outer; ++o) {
          for (std::size_t i = 0; i < row_a; ++i) ga[o * row_a + i] += g[o * row + i];
        }
      }
      if (needs(1)) {
        Tensor &gb = grad_buffer(n.inputs[1]);
        for (std::size_t o = 0; o < v.outer; ++o) {
          for (std::size_t i = 0; i < row_b; ++i) gb[o * row_b + i] += g[o * row + row_a + i];
        }
      }
      return;
    }
    case OpKind::kSlice: {
      if (!needs(0)) return;
      Tensor &gx = grad_buffer(n.inputs[0]);
      const AxisView v = axis1_view(gx, "slice");
      const std::size_t span = n.b * v.inner;
      for (std::size_t o = 0; o < v.outer; ++o) {
        double *dst = gx.data().data() + (o * v.mid + n.a) * v.inner;
        const double *src = g.data().data() + o * span;
        for (std::size_t i = 0; i < span; ++i) dst[i] += src[i];
      }
      return;
    }
    case OpKind::kReshape: {
      if (!needs(0)) return;
      Tensor &gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      return;
    }
    case OpKind::kChannelBias: {
      accumulate(n.inputs[0], g);
      if (needs(1)) {
        const AxisView v = axis1_view(g, "channel_bias");
        Tensor &gb = grad_buffer(n.inputs[1]);
        for (std::size_t o = 0; o < v.outer; ++o) {
          for (std::size_t c = 0; c < v.mid; ++c) {
            const double *p = g.data().data() + (o * v.mid + c) * v.inner;
            double s = 0.0;
            for (std::size_t i = 0; i < v.inner; ++i) s += p[i];
            gb[c] += s;
          }
        }
      }
      return;
    }
    case OpKind::kConv2d:
    case OpKind::kDeconv2d: {
      Tensor *gw = needs(0) ? &grad_buffer(n.inputs[0]) : nullptr;
      Tensor *gx = needs(1) ? &grad_buffer(n.inputs[1]) : nullptr;
      if (n.kind == OpKind::kConv2d) {
        conv2d_backward(value(n.inputs[0]), value(n.inputs[1]), n.conv, g, gw, gx);
      } else {
        deconv2d_backward(value(n.inputs[0]), value(n.inputs[1]), n.conv, g, gw, gx);
      }
      return;
    }
    case OpKind::kInflate: {
      if (!needs(0)) return;
      const Tensor d = subsample(g, n.a);
      accumulate(n.inputs[0], d);
      return;
    }
    case OpKind::kL2Loss: {
      const Tensor &p = value(n.inputs[0]);
      const Tensor &t = value(n.inputs[1]);
      const double s = 2.0 * g[0] / n.factor;
      if (needs(0)) {
        Tensor &gp = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += s * (p[i] - t[i]);
      }
      if (needs(1)) {
        Tensor &gt = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= s * (p[i] - t[i]);
      }
      return;
    }
    case OpKind::kBinarize:
      // Straight-through: E[b(x)] = x, so db/dx is taken as the identity.
      accumulate(n.inputs[0], g);
      return;
  }
}

double finite_diff_check(const std::function<NodeId(Graph &)> &build, ParameterSet &params,
                         std::size_t param, double h) {
  if (!(h > 0.0)) fail(ErrorCode::kInvalidArgument, "finite difference step must be > 0");
  if (param >= params.size()) fail(ErrorCode::kOutOfRange, "unknown parameter index");
  Tensor analytic;
  {
    Graph g;
    const NodeId loss = build(g);
    analytic = g.backward(loss, params)[param];
  }
  auto evaluate = [&]() {
    Graph g;
    return g.value(build(g))[0];
  };
  double worst = 0.0;
  Tensor &value = params[param].value;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double saved = value[i];
    value[i] = saved + h;
    const double up = evaluate();
    value[i] = saved - h;
    const double down = evaluate();
    value[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace nntc
