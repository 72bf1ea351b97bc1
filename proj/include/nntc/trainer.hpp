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

#ifndef NNTC_TRAINER_HPP
#define NNTC_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nntc/graph.hpp"
#include "nntc/image.hpp"
#include "nntc/model.hpp"

namespace nntc {

struct TrainConfig {
  double learning_rate = 0.001;
  /// Images per step; every patch of each image is in the batch.
  std::size_t batch_size = 32;
  std::size_t steps = 1000;
  /// Chain length unrolled during training.
  std::size_t n_iterations = 16;
  std::uint64_t seed = 1;
  /// Log every this many steps (and the last step); 0 disables logging.
  std::size_t log_every = 100;
  /// Stop early once this much wall-clock time has passed; 0 means no limit.
  double time_budget_seconds = 0.0;

  void validate(const ModelConfig &model) const;
  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  /// Zero moments shaped like params.
  static AdamState for_params(const ParameterSet &params);
};

/// One bias-corrected Adam step. Shapes of grads and moments must match params.
void adam_update(AdamState &adam, ParameterSet &params, const std::vector<Tensor> &grads,
                 double lr);

/// Sum over stages of ||prediction_t - target_t||^2 / (values * batch * n),
/// where values = C * P * P per patch.
NodeId chain_loss(Graph &graph, const Model &model, NodeId r0, std::size_t n, BinarizeMode mode,
                  const NoiseSource &noise);

/// Forward, backward and Adam update on one batch (B, C, P, P) with
/// stochastic binarization. Returns the loss before the update. Throws
/// kNonFinite, naming the step and learning rate, on a non-finite loss or
/// gradient; parameters are left untouched in that case.
double train_step(Model &model, const Tensor &batch, const TrainConfig &config, AdamState &adam,
                  const NoiseSource &noise);

/// Training images cut into model patches, grouped per image.
class PatchSet {
 public:
  PatchSet(const std::vector<Image> &images, const ModelConfig &config);
  std::size_t images() const { return images_; }
  std::size_t patches_per_image() const { return per_image_; }
  /// All patches of the listed images, in list order.
  Tensor gather(const std::vector<std::size_t> &image_indices) const;
  const Tensor &patches() const { return patches_; }

 private:
  Tensor patches_;
  std::size_t images_ = 0;
  std::size_t per_image_ = 0;
};

/// Image indices for a step: consecutive slices of a per-epoch shuffle.
std::vector<std::size_t> batch_indices(std::size_t images, std::size_t batch, std::size_t step,
                                       std::uint64_t seed);

struct TrainLogRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

/// "step=<n> loss=<value> lr=<value>".
std::string format_log(const TrainLogRecord &record);

struct TrainSummary {
  std::size_t steps_run = 0;
  std::vector<double> losses;
  double seconds = 0.0;
  bool stopped_by_time = false;
};

/// Runs config.steps steps (fewer if the time budget runs out), continuing
/// from adam.step so a resumed run sees the same batches and noise.
TrainSummary train(Model &model, AdamState &adam, const PatchSet &data, const TrainConfig &config,
                   const std::function<void(const TrainLogRecord &)> &log = {});

}  // namespace nntc

#endif  // NNTC_TRAINER_HPP
