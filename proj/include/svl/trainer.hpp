// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svl/backbone.hpp"
#include "svl/image.hpp"
#include "svl/model.hpp"
#include "svl/objectives.hpp"

namespace svl {

struct TrainConfig {
  std::int64_t total_iters = 500;
  int batch_size = 4;
  double base_lr = 5e-3;
  double lr_power = 0.9;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const;
};

/// base_lr * (1 - iter / total_iters)^lr_power for iter in [0, total_iters].
double poly_lr(std::int64_t iter, const TrainConfig& cfg);

/// A training example already resized to the model resolution.
struct Sample {
  std::string id;
  Image image;
  Mask mask;
};

struct TrainState {
  ModelParams params;
  ModelParams momentum;
  std::int64_t iteration = 0;

  static TrainState initialize(const BackboneConfig& backbone, int head_hidden, std::uint64_t seed);
};

/// In-place SGD with heavy-ball momentum (dampening 0) and L2 weight decay:
///   g = grad + weight_decay * param;  buf = momentum * buf + g;  param -= lr * buf.
void sgd_momentum_update(std::span<double> param, std::span<const double> grad,
                         std::span<double> buffer, double lr, double momentum, double weight_decay);

/// Applies sgd_momentum_update to every tensor, honouring per-tensor
/// weight-decay exclusions.
void apply_sgd(ModelParams& params, ModelParams& grads, ModelParams& momentum, double lr,
               const TrainConfig& cfg);

struct TrainContext {
  const VisionEncoder& vision;
  const TextReference& text;
  LossConfig loss;
  TrainConfig train;
};

/// Mean loss and mean gradient over `batch`, reduced in batch order.
LossReport batch_gradient(const ModelParams& params, std::span<const Sample* const> batch,
                          std::int64_t iter, const TrainContext& ctx, ModelParams& grads);

/// One optimizer step at learning rate poly_lr(iter). Throws NonFiniteError
/// naming the offending loss term if any component is not finite.
LossReport train_step(TrainState& state, std::span<const Sample* const> batch, std::int64_t iter,
                      const TrainContext& ctx);

struct LossLogEntry {
  std::int64_t iter = 0;
  double lr = 0.0;
  LossReport report;
};

struct FitOptions {
  std::filesystem::path output_dir;  // empty: nothing is written
  std::string config_text;           // snapshot stored in every checkpoint
  std::function<void(const LossLogEntry&)> on_step;
};

struct FitResult {
  TrainState state;
  std::vector<LossLogEntry> log;
};

/// Runs train.total_iters steps from `init` with seeded sampling: disjoint
/// shuffled batches when the dataset covers the whole budget, sampling with
/// replacement otherwise. Writes loss.csv, periodic checkpoints and
/// final.svlckpt when an output directory is given.
FitResult fit(const TrainContext& ctx, std::span<const Sample> dataset, TrainState init,
              const FitOptions& options = {});

void write_loss_csv(const std::filesystem::path& path, std::span<const LossLogEntry> log);

/// trainable / (trainable + frozen).
double trainable_fraction(const ModelParams& params, std::uint64_t frozen_params);

}  // namespace svl
