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

#include "nntc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "hash.hpp"
#include "nntc/dataset.hpp"
#include "nntc/error.hpp"

namespace nntc {

void TrainConfig::validate(const ModelConfig &model) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  if (batch_size == 0) fail(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (steps == 0) fail(ErrorCode::kInvalidArgument, "steps must be positive");
  if (n_iterations == 0 || n_iterations > model.max_iterations) {
    fail(ErrorCode::kInvalidArgument, "n_iterations " + std::to_string(n_iterations) +
                                          " outside [1, " + std::to_string(model.max_iterations) +
                                          "]");
  }
  if (time_budget_seconds < 0.0) fail(ErrorCode::kInvalidArgument, "time budget is negative");
}

AdamState AdamState::for_params(const ParameterSet &params) {
  AdamState a;
  for (const auto &p : params) {
    a.m.emplace_back(p.value.shape(), 0.0);
    a.v.emplace_back(p.value.shape(), 0.0);
  }
  return a;
}

void adam_update(AdamState &adam, ParameterSet &params, const std::vector<Tensor> &grads,
                 double lr) {
  if (grads.size() != params.size() || adam.m.size() != params.size() ||
      adam.v.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "Adam state, gradients and parameters disagree in count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape &s = params[i].value.shape();
    if (grads[i].shape() != s || adam.m[i].shape() != s || adam.v[i].shape() != s) {
      fail(ErrorCode::kShapeMismatch, "Adam shapes disagree for " + params[i].name);
    }
  }
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value.data();
    auto m = adam.m[i].data();
    auto v = adam.v[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g[j];
      v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + adam.epsilon);
    }
  }
}

NodeId chain_loss(Graph &graph, const Model &model, NodeId r0, std::size_t n, BinarizeMode mode,
                  const NoiseSource &noise) {
  const auto stages = build_chain(graph, model, r0, n, mode, noise);
  const std::size_t values = graph.value(r0).size();
  NodeId loss = graph.l2_loss(stages[0].prediction, stages[0].target, values, n);
  for (std::size_t t = 1; t < stages.size(); ++t) {
    loss = graph.add(loss, graph.l2_loss(stages[t].prediction, stages[t].target, values, n));
  }
  return loss;
}

double train_step(Model &model, const Tensor &batch, const TrainConfig &config, AdamState &adam,
                  const NoiseSource &noise) {
  if (adam.m.empty()) adam = AdamState::for_params(model.params());
  std::vector<Tensor> grads;
  double loss = 0.0;
  {
    Graph g;
    const NodeId l = chain_loss(g, model, g.constant(batch), config.n_iterations,
                                BinarizeMode::kStochastic, noise);
    loss = g.value(l)[0];
    auto diagnose = [&](const std::string &what) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "non-finite %s at step %llu (lr %g)", what.c_str(),
                    static_cast<unsigned long long>(adam.step + 1), config.learning_rate);
      fail(ErrorCode::kNonFinite, buf);
    };
    if (!std::isfinite(loss)) diagnose("loss");
    grads = g.backward(l, model.params());
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!grads[i].all_finite()) diagnose("gradient for " + model.params()[i].name);
    }
  }
  adam_update(adam, model.params(), grads, config.learning_rate);
  return loss;
}

PatchSet::PatchSet(const std::vector<Image> &images, const ModelConfig &config) {
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "training set is empty");
  std::vector<Tensor> all;
  for (const Image &img : images) {
    if (img.channels != config.channels) {
      fail(ErrorCode::kShapeMismatch, "image has " + std::to_string(img.channels) +
                                          " channels, model expects " +
                                          std::to_string(config.channels));
    }
    all.push_back(extract_patches(scale_to_network(img), config.patch_size));
    if (all.back().dim(0) != all.front().dim(0)) {
      fail(ErrorCode::kShapeMismatch, "training images differ in size");
    }
  }
  images_ = images.size();
  per_image_ = all.front().dim(0);
  const std::size_t stride = all.front().size();
  Shape shape = all.front().shape();
  shape[0] = images_ * per_image_;
  patches_ = Tensor(shape);
  for (std::size_t i = 0; i < images_; ++i) {
    std::copy(all[i].data().begin(), all[i].data().end(), patches_.data().begin() + i * stride);
  }
}

Tensor PatchSet::gather(const std::vector<std::size_t> &image_indices) const {
  Shape shape = patches_.shape();
  shape[0] = image_indices.size() * per_image_;
  Tensor out(shape);
  const std::size_t stride = patches_.size() / images_;
  for (std::size_t k = 0; k < image_indices.size(); ++k) {
    const std::size_t i = image_indices[k];
    if (i >= images_) fail(ErrorCode::kOutOfRange, "image index out of range");
    std::copy(patches_.data().begin() + i * stride, patches_.data().begin() + (i + 1) * stride,
              out.data().begin() + k * stride);
  }
  return out;
}

std::vector<std::size_t> batch_indices(std::size_t images, std::size_t batch, std::size_t step,
                                       std::uint64_t seed) {
  std::vector<std::size_t> out;
  std::size_t cached_epoch = SIZE_MAX;
  std::vector<std::size_t> perm;
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t pos = step * batch + k;
    const std::size_t epoch = pos / images;
    if (epoch != cached_epoch) {
      perm = shuffled_indices(images, detail::absorb(detail::mix64(seed), epoch));
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % images]);
  }
  return out;
}

std::string format_log(const TrainLogRecord &r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "step=%zu loss=%.9g lr=%g", r.step, r.loss, r.lr);
  return buf;
}

TrainSummary train(Model &model, AdamState &adam, const PatchSet &data, const TrainConfig &config,
                   const std::function<void(const TrainLogRecord &)> &log) {
  config.validate(model.config());
  if (adam.m.empty()) adam = AdamState::for_params(model.params());
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  TrainSummary summary;
  for (std::size_t k = 0; k < config.steps; ++k) {
    if (config.time_budget_seconds > 0.0 && elapsed() >= config.time_budget_seconds) {
      summary.stopped_by_time = true;
      break;
    }
    const std::size_t step = static_cast<std::size_t>(adam.step);
    const Tensor batch = data.gather(batch_indices(data.images(), config.batch_size, step, config.seed));
    const NoiseSource noise{config.seed, step, 0, 0};
    const double loss = train_step(model, batch, config, adam, noise);
    summary.losses.push_back(loss);
    ++summary.steps_run;
    const bool last = k + 1 == config.steps;
    if (log && config.log_every > 0 && ((step + 1) % config.log_every == 0 || last)) {
      log({step + 1, loss, config.learning_rate});
    }
  }
  summary.seconds = elapsed();
  return summary;
}

}  // namespace nntc
