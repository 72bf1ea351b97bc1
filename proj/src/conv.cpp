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

#include "nntc/conv.hpp"

#include <cstddef>
#include <string>
#include <vector>

#include "gemm.hpp"
#include "nntc/error.hpp"

namespace nntc {
namespace {

using detail::gemm;
using detail::Trans;

struct Geometry {
  std::size_t batch, channels, in_h, in_w, out_channels, out_h, out_w;
  bool batched;
};

// One output phase: the output grid positions (y0 + step*i, x0 + step*j)
// read input (mul*i + off_u[t], mul*j + off_v[t]) through kernel taps
// (taps_u[t], taps_v[t]).
struct Phase {
  std::vector<std::size_t> taps_u, taps_v;
  std::vector<std::ptrdiff_t> off_u, off_v;
  std::size_t mul = 1;
  std::size_t rows = 0, cols = 0;
  std::size_t y0 = 0, x0 = 0, step = 1;
};

void check_weights(const Tensor &weights, const ConvSpec &spec) {
  if (spec.kernel_h == 0 || spec.kernel_w == 0 || spec.stride == 0 || spec.in_channels == 0 ||
      spec.out_channels == 0) {
    fail(ErrorCode::kInvalidArgument, "conv spec has a zero kernel, stride or channel count");
  }
  if (weights.shape() != spec.weight_shape()) {
    fail(ErrorCode::kShapeMismatch, "conv weights " + shape_string(weights.shape()) +
                                        " do not match spec " +
                                        shape_string(spec.weight_shape()));
  }
}

Geometry input_geometry(const Tensor &x, const ConvSpec &spec) {
  Geometry g{};
  if (x.rank() == 3) {
    g = {1, x.dim(0), x.dim(1), x.dim(2), spec.out_channels, 0, 0, false};
  } else if (x.rank() == 4) {
    g = {x.dim(0), x.dim(1), x.dim(2), x.dim(3), spec.out_channels, 0, 0, true};
  } else {
    fail(ErrorCode::kShapeMismatch,
         "conv input must be (C, H, W) or (B, C, H, W), got " + shape_string(x.shape()));
  }
  if (g.channels != spec.in_channels) {
    fail(ErrorCode::kShapeMismatch, "conv input " + shape_string(x.shape()) + " has " +
                                        std::to_string(g.channels) + " channels, spec expects " +
                                        std::to_string(spec.in_channels));
  }
  return g;
}

Shape output_shape(const Geometry &g) {
  if (g.batched) return {g.batch, g.out_channels, g.out_h, g.out_w};
  return {g.out_channels, g.out_h, g.out_w};
}

std::vector<Phase> conv_phases(const ConvSpec &spec, const Geometry &g) {
  Phase p;
  for (std::size_t u = 0; u < spec.kernel_h; ++u) {
    p.taps_u.push_back(u);
    p.off_u.push_back(static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(spec.pad_h));
  }
  for (std::size_t v = 0; v < spec.kernel_w; ++v) {
    p.taps_v.push_back(v);
    p.off_v.push_back(static_cast<std::ptrdiff_t>(v) - static_cast<std::ptrdiff_t>(spec.pad_w));
  }
  p.mul = spec.stride;
  p.rows = g.out_h;
  p.cols = g.out_w;
  return {p};
}

// Output row y reads inflated row y + u - pad, which holds data only when it
// is a multiple of k. Grouping outputs by y mod k fixes the useful taps.
void phase_taps(std::size_t phase, std::size_t kernel, std::size_t pad, std::size_t k,
                std::vector<std::size_t> &taps, std::vector<std::ptrdiff_t> &offsets) {
  const auto sk = static_cast<std::ptrdiff_t>(k);
  for (std::size_t u = 0; u < kernel; ++u) {
    const std::ptrdiff_t shifted = static_cast<std::ptrdiff_t>(phase + u) -
                                   static_cast<std::ptrdiff_t>(pad);
    if (((shifted % sk) + sk) % sk != 0) continue;
    taps.push_back(u);
    // Exact division; shifted may be negative.
    offsets.push_back(shifted >= 0 ? shifted / sk : -((-shifted) / sk));
  }
}

std::vector<Phase> deconv_phases(const ConvSpec &spec, const Geometry &g) {
  const std::size_t k = spec.stride;
  std::vector<Phase> phases;
  for (std::size_t py = 0; py < k && py < g.out_h; ++py) {
    for (std::size_t px = 0; px < k && px < g.out_w; ++px) {
      Phase p;
      phase_taps(py, spec.kernel_h, spec.pad_h, k, p.taps_u, p.off_u);
      phase_taps(px, spec.kernel_w, spec.pad_w, k, p.taps_v, p.off_v);
      p.mul = 1;
      p.rows = (g.out_h - py + k - 1) / k;
      p.cols = (g.out_w - px + k - 1) / k;
      p.y0 = py;
      p.x0 = px;
      p.step = k;
      phases.push_back(std::move(p));
    }
  }
  return phases;
}

std::size_t phase_positions(const Geometry &g, const Phase &p) {
  return g.batch * p.rows * p.cols;
}

std::size_t phase_depth(const Geometry &g, const Phase &p) {
  return g.channels * p.taps_u.size() * p.taps_v.size();
}

std::vector<double> im2col(const Tensor &x, const Geometry &g, const Phase &p) {
  const std::size_t n = phase_positions(g, p);
  std::vector<double> cols(phase_depth(g, p) * n, 0.0);
  const double *src = x.data().data();
  const auto h = static_cast<std::ptrdiff_t>(g.in_h);
  const auto w = static_cast<std::ptrdiff_t>(g.in_w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t tu = 0; tu < p.taps_u.size(); ++tu) {
      for (std::size_t tv = 0; tv < p.taps_v.size(); ++tv, ++row) {
        double *dst = cols.data() + row * n;
        for (std::size_t b = 0; b < g.batch; ++b) {
          const double *plane = src + (b * g.channels + c) * g.in_h * g.in_w;
          for (std::size_t i = 0; i < p.rows; ++i) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(p.mul * i) + p.off_u[tu];
            double *out = dst + (b * p.rows + i) * p.cols;
            if (iy < 0 || iy >= h) continue;
            for (std::size_t j = 0; j < p.cols; ++j) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(p.mul * j) + p.off_v[tv];
              if (ix >= 0 && ix < w) out[j] = plane[iy * w + ix];
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const std::vector<double> &cols, const Geometry &g, const Phase &p,
                Tensor &grad_x) {
  const std::size_t n = phase_positions(g, p);
  double *dst = grad_x.data().data();
  const auto h = static_cast<std::ptrdiff_t>(g.in_h);
  const auto w = static_cast<std::ptrdiff_t>(g.in_w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t tu = 0; tu < p.taps_u.size(); ++tu) {
      for (std::size_t tv = 0; tv < p.taps_v.size(); ++tv, ++row) {
        const double *src = cols.data() + row * n;
        for (std::size_t b = 0; b < g.batch; ++b) {
          double *plane = dst + (b * g.channels + c) * g.in_h * g.in_w;
          for (std::size_t i = 0; i < p.rows; ++i) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(p.mul * i) + p.off_u[tu];
            if (iy < 0 || iy >= h) continue;
            const double *in = src + (b * p.rows + i) * p.cols;
            for (std::size_t j = 0; j < p.cols; ++j) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(p.mul * j) + p.off_v[tv];
              if (ix >= 0 && ix < w) plane[iy * w + ix] += in[j];
            }
          }
        }
      }
    }
  }
}

// Weight columns for the taps of one phase, ordered (c, u, v) like im2col rows.
std::vector<double> gather_weights(const Tensor &weights, const ConvSpec &spec,
                                   const Phase &p) {
  const std::size_t depth = spec.in_channels * p.taps_u.size() * p.taps_v.size();
  std::vector<double> out(spec.out_channels * depth);
  for (std::size_t o = 0; o < spec.out_channels; ++o) {
    std::size_t col = 0;
    for (std::size_t c = 0; c < spec.in_channels; ++c) {
      for (auto u : p.taps_u) {
        for (auto v : p.taps_v) {
          out[o * depth + col++] = weights.at(o, c, u, v);
        }
      }
    }
  }
  return out;
}

void scatter_weights_add(const std::vector<double> &dw, const ConvSpec &spec, const Phase &p,
                         Tensor &grad_weights) {
  const std::size_t depth = spec.in_channels * p.taps_u.size() * p.taps_v.size();
  for (std::size_t o = 0; o < spec.out_channels; ++o) {
    std::size_t col = 0;
    for (std::size_t c = 0; c < spec.in_channels; ++c) {
      for (auto u : p.taps_u) {
        for (auto v : p.taps_v) {
          grad_weights.at(o, c, u, v) += dw[o * depth + col++];
        }
      }
    }
  }
}

void forward_phases(const Tensor &weights, const Tensor &x, const ConvSpec &spec,
                    const Geometry &g, const std::vector<Phase> &phases, Tensor &out) {
  double *dst = out.data().data();
  for (const auto &p : phases) {
    const std::size_t n = phase_positions(g, p);
    const std::size_t depth = phase_depth(g, p);
    if (n == 0 || depth == 0) continue;  // output stays +0, as the zero taps would give
    const auto cols = im2col(x, g, p);
    const auto wp = gather_weights(weights, spec, p);
    std::vector<double> y(g.out_channels * n);
    gemm(Trans::kNo, Trans::kNo, g.out_channels, n, depth, wp.data(), cols.data(), y.data(),
         false);
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t b = 0; b < g.batch; ++b) {
        double *plane = dst + (b * g.out_channels + o) * g.out_h * g.out_w;
        for (std::size_t i = 0; i < p.rows; ++i) {
          const double *src = y.data() + o * n + (b * p.rows + i) * p.cols;
          double *row = plane + (p.y0 + p.step * i) * g.out_w + p.x0;
          for (std::size_t j = 0; j < p.cols; ++j) row[p.step * j] = src[j];
        }
      }
    }
  }
}

void backward_phases(const Tensor &weights, const Tensor &x, const ConvSpec &spec,
                     const Geometry &g, const std::vector<Phase> &phases,
                     const Tensor &grad_out, Tensor *grad_weights, Tensor *grad_x) {
  const double *gsrc = grad_out.data().data();
  for (const auto &p : phases) {
    const std::size_t n = phase_positions(g, p);
    const std::size_t depth = phase_depth(g, p);
    if (n == 0 || depth == 0) continue;
    std::vector<double> dy(g.out_channels * n);
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t b = 0; b < g.batch; ++b) {
        const double *plane = gsrc + (b * g.out_channels + o) * g.out_h * g.out_w;
        for (std::size_t i = 0; i < p.rows; ++i) {
          double *dst = dy.data() + o * n + (b * p.rows + i) * p.cols;
          const double *row = plane + (p.y0 + p.step * i) * g.out_w + p.x0;
          for (std::size_t j = 0; j < p.cols; ++j) dst[j] = row[p.step * j];
        }
      }
    }
    if (grad_weights != nullptr) {
      const auto cols = im2col(x, g, p);
      std::vector<double> dw(g.out_channels * depth);
      gemm(Trans::kNo, Trans::kYes, g.out_channels, depth, n, dy.data(), cols.data(), dw.data(),
           false);
      scatter_weights_add(dw, spec, p, *grad_weights);
    }
    if (grad_x != nullptr) {
      const auto wp = gather_weights(weights, spec, p);
      std::vector<double> dcols(depth * n);
      gemm(Trans::kYes, Trans::kNo, depth, n, g.out_channels, wp.data(), dy.data(),
           dcols.data(), false);
      col2im_add(dcols, g, p, *grad_x);
    }
  }
}

Geometry conv_geometry(const Tensor &weights, const Tensor &x, const ConvSpec &spec) {
  check_weights(weights, spec);
  Geometry g = input_geometry(x, spec);
  g.out_h = spec.conv_out_h(g.in_h);
  g.out_w = spec.conv_out_w(g.in_w);
  return g;
}

Geometry deconv_geometry(const Tensor &weights, const Tensor &x, const ConvSpec &spec) {
  check_weights(weights, spec);
  Geometry g = input_geometry(x, spec);
  g.out_h = spec.deconv_out_h(g.in_h);
  g.out_w = spec.deconv_out_w(g.in_w);
  return g;
}

void check_grad_shapes(const Tensor &weights, const Tensor &x, const Tensor &grad_out,
                       const Shape &expected_out, const Tensor *grad_weights,
                       const Tensor *grad_x) {
  if (grad_out.shape() != expected_out) {
    fail(ErrorCode::kShapeMismatch, "conv upstream gradient " + shape_string(grad_out.shape()) +
                                        " vs output " + shape_string(expected_out));
  }
  if (grad_weights != nullptr && grad_weights->shape() != weights.shape()) {
    fail(ErrorCode::kShapeMismatch, "conv weight gradient buffer " +
                                        shape_string(grad_weights->shape()) + " vs " +
                                        shape_string(weights.shape()));
  }
  if (grad_x != nullptr && grad_x->shape() != x.shape()) {
    fail(ErrorCode::kShapeMismatch, "conv input gradient buffer " +
                                        shape_string(grad_x->shape()) + " vs " +
                                        shape_string(x.shape()));
  }
}

std::size_t checked_out(std::ptrdiff_t numerator, std::size_t stride, const char *what) {
  if (numerator < 0) {
    fail(ErrorCode::kInvalidArgument,
         std::string("conv spec yields a non-positive output ") + what);
  }
  return static_cast<std::size_t>(numerator) / stride + 1;
}

}  // namespace

ConvSpec ConvSpec::same(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                        std::size_t stride) {
  if (kernel % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, "same padding needs an odd kernel, got " +
                                          std::to_string(kernel));
  }
  return ConvSpec{kernel, kernel, in_channels, out_channels, stride, (kernel - 1) / 2,
                  (kernel - 1) / 2};
}

std::size_t ConvSpec::conv_out_h(std::size_t in) const {
  return checked_out(static_cast<std::ptrdiff_t>(in + 2 * pad_h) -
                         static_cast<std::ptrdiff_t>(kernel_h),
                     stride, "height");
}

std::size_t ConvSpec::conv_out_w(std::size_t in) const {
  return checked_out(static_cast<std::ptrdiff_t>(in + 2 * pad_w) -
                         static_cast<std::ptrdiff_t>(kernel_w),
                     stride, "width");
}

std::size_t ConvSpec::deconv_out_h(std::size_t in) const {
  return checked_out(static_cast<std::ptrdiff_t>(stride * in + 2 * pad_h) -
                         static_cast<std::ptrdiff_t>(kernel_h),
                     1, "height");
}

std::size_t ConvSpec::deconv_out_w(std::size_t in) const {
  return checked_out(static_cast<std::ptrdiff_t>(stride * in + 2 * pad_w) -
                         static_cast<std::ptrdiff_t>(kernel_w),
                     1, "width");
}

Tensor conv2d(const Tensor &weights, const Tensor &x, const ConvSpec &spec) {
  const Geometry g = conv_geometry(weights, x, spec);
  Tensor out(output_shape(g));
  forward_phases(weights, x, spec, g, conv_phases(spec, g), out);
  return out;
}

Tensor deconv2d(const Tensor &weights, const Tensor &x, const ConvSpec &spec) {
  const Geometry g = deconv_geometry(weights, x, spec);
  Tensor out(output_shape(g));
  forward_phases(weights, x, spec, g, deconv_phases(spec, g), out);
  return out;
}

void conv2d_backward(const Tensor &weights, const Tensor &x, const ConvSpec &spec,
                     const Tensor &grad_out, Tensor *grad_weights, Tensor *grad_x) {
  const Geometry g = conv_geometry(weights, x, spec);
  check_grad_shapes(weights, x, grad_out, output_shape(g), grad_weights, grad_x);
  backward_phases(weights, x, spec, g, conv_phases(spec, g), grad_out, grad_weights, grad_x);
}

void deconv2d_backward(const Tensor &weights, const Tensor &x, const ConvSpec &spec,
                       const Tensor &grad_out, Tensor *grad_weights, Tensor *grad_x) {
  const Geometry g = deconv_geometry(weights, x, spec);
  check_grad_shapes(weights, x, grad_out, output_shape(g), grad_weights, grad_x);
  backward_phases(weights, x, spec, g, deconv_phases(spec, g), grad_out, grad_weights, grad_x);
}

Tensor inflate(const Tensor &x, std::size_t k) {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "inflation factor must be >= 1");
  if (x.rank() < 2) {
    fail(ErrorCode::kShapeMismatch, "inflate needs a spatial tensor, got " +
                                        shape_string(x.shape()));
  }
  Shape shape = x.shape();
  const std::size_t h = shape[shape.size() - 2];
  const std::size_t w = shape[shape.size() - 1];
  shape[shape.size() - 2] = k * h;
  shape[shape.size() - 1] = k * w;
  Tensor out(shape);
  const std::size_t planes = x.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        out[p * k * h * k * w + (k * i) * (k * w) + k * j] = x[p * h * w + i * w + j];
      }
    }
  }
  return out;
}

Tensor subsample(const Tensor &x, std::size_t k) {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "stride factor must be >= 1");
  if (x.rank() < 2) {
    fail(ErrorCode::kShapeMismatch, "subsample needs a spatial tensor, got " +
                                        shape_string(x.shape()));
  }
  Shape shape = x.shape();
  const std::size_t h = shape[shape.size() - 2];
  const std::size_t w = shape[shape.size() - 1];
  const std::size_t oh = (h + k - 1) / k;
  const std::size_t ow = (w + k - 1) / k;
  shape[shape.size() - 2] = oh;
  shape[shape.size() - 1] = ow;
  Tensor out(shape);
  const std::size_t planes = x.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        out[p * oh * ow + i * ow + j] = x[p * h * w + (k * i) * w + k * j];
      }
    }
  }
  return out;
}

}  // namespace nntc
