// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "svl/checkpoint.hpp"
#include "svl/error.hpp"
#include "svl/rng.hpp"

namespace svl {
namespace {

void check_finite(const LossReport& r, std::int64_t iter) {
  const std::pair<const char*, double> terms[] = {
      {"l_final", r.l_final}, {"l_gi", r.l_gi}, {"l_lc", r.l_lc}, {"l_ratio", r.l_ratio},
      {"total", r.total}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw NonFiniteError("non-finite " + std::string(name) + " at iteration " + std::to_string(iter));
    }
  }
}

void accumulate(LossReport& into, const LossReport& r) {
  into.l_final += r.l_final;
  into.l_gi += r.l_gi;
  into.l_lc += r.l_lc;
  into.l_ratio += r.l_ratio;
  into.total += r.total;
  into.lambda_gi = r.lambda_gi;
  into.lambda_lc = r.lambda_lc;
}

std::vector<std::size_t> sample_indices(std::size_t dataset_size, std::int64_t iters, int batch,
                                        std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5a3b1e));
  const auto needed = static_cast<std::size_t>(iters) * static_cast<std::size_t>(batch);
  std::vector<std::size_t> order;
  order.reserve(needed);
  if (dataset_size >= needed) {
    std::vector<std::size_t> perm(dataset_size);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    order.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(needed));
  } else {
    for (std::size_t i = 0; i < needed; ++i) order.push_back(static_cast<std::size_t>(rng.index(dataset_size)));
  }
  return order;
}

}  // namespace

void TrainConfig::validate() const {
  if (total_iters < 0) throw ConfigError("train.total_iters must be non-negative");
  if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  if (!(base_lr >= 0.0)) throw ConfigError("train.base_lr must be non-negative");
  if (!(lr_power > 0.0 && lr_power <= 1.0)) throw ConfigError("train.lr_power must lie in (0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be non-negative");
}

double poly_lr(std::int64_t iter, const TrainConfig& cfg) {
  if (cfg.total_iters <= 0 || iter < 0 || iter > cfg.total_iters) {
    throw InputError("iteration " + std::to_string(iter) + " outside [0, " +
                     std::to_string(cfg.total_iters) + "]");
  }
  const double progress = static_cast<double>(iter) / static_cast<double>(cfg.total_iters);
  return cfg.base_lr * std::pow(1.0 - progress, cfg.lr_power);
}

TrainState TrainState::initialize(const BackboneConfig& backbone, int head_hidden, std::uint64_t seed) {
  TrainState state;
  state.params = ModelParams::initialize(backbone, head_hidden, seed);
  state.momentum = state.params.zeros_like();
  return state;
}

void sgd_momentum_update(std::span<double> param, std::span<const double> grad,
                         std::span<double> buffer, double lr, double momentum, double weight_decay) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i] + weight_decay * param[i];
    buffer[i] = momentum * buffer[i] + g;
    param[i] -= lr * buffer[i];
  }
}

void apply_sgd(ModelParams& params, ModelParams& grads, ModelParams& momentum, double lr,
               const TrainConfig& cfg) {
  auto p = param_views(params);
  auto g = param_views(grads);
  auto m = param_views(momentum);
  for (std::size_t i = 0; i < p.size(); ++i) {
    sgd_momentum_update(p[i].data, g[i].data, m[i].data, lr, cfg.momentum,
                        p[i].weight_decay ? cfg.weight_decay : 0.0);
  }
}

LossReport batch_gradient(const ModelParams& params, std::span<const Sample* const> batch,
                          std::int64_t iter, const TrainContext& ctx, ModelParams& grads) {
  if (batch.empty()) throw InputError("empty batch");
  const int image_size = ctx.vision.config().image_size;
  grads = params.zeros_like();
  LossReport mean;
  for (const Sample* sample : batch) {
    if (sample->mask.width != image_size || sample->mask.height != image_size) {
      throw InputError("mask for '" + sample->id + "' is not image-sized");
    }
    const TokenPyramid pyramid = extract_token_pyramid(sample->image, ctx.vision);
    ForwardCache cache;
    const PredictionBundle bundle = forward(params, pyramid, ctx.text, image_size, &cache);
    BundleGradient upstream;
    const LossReport report = total_loss(bundle, sample->mask, iter, ctx.loss, &upstream);
    accumulate(mean, report);
    backward(params, pyramid, ctx.text, cache, upstream, grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& view : param_views(grads)) {
    for (double& v : view.data) v *= inv;
  }
  mean.l_final *= inv;
  mean.l_gi *= inv;
  mean.l_lc *= inv;
  mean.l_ratio *= inv;
  mean.total *= inv;
  return mean;
}

LossReport train_step(TrainState& state, std::span<const Sample* const> batch, std::int64_t iter,
                      const TrainContext& ctx) {
  ModelParams grads;
  const LossReport report = batch_gradient(state.params, batch, iter, ctx, grads);
  check_finite(report, iter);
  apply_sgd(state.params, grads, state.momentum, poly_lr(iter, ctx.train), ctx.train);
  state.iteration = iter + 1;
  return report;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const LossLogEntry> log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iter,lr,l_final,l_gi,l_lc,l_ratio,total\n";
  char line[256];
  for (const auto& e : log) {
    std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  static_cast<long long>(e.iter), e.lr, e.report.l_final, e.report.l_gi,
                  e.report.l_lc, e.report.l_ratio, e.report.total);
    out << line;
  }
}

FitResult fit(const TrainContext& ctx, std::span<const Sample> dataset, TrainState init,
              const FitOptions& options) {
  if (dataset.empty()) throw InputError("training dataset is empty");
  ctx.train.validate();
  ctx.loss.validate();
  if (ctx.loss.total_iters != ctx.train.total_iters) {
    throw ConfigError("loss and train iteration budgets differ");
  }

  const bool write = !options.output_dir.empty();
  if (write) std::filesystem::create_directories(options.output_dir);

  FitResult result{std::move(init), {}};
  const auto total = ctx.train.total_iters;
  const int batch = ctx.train.batch_size;
  const auto order = sample_indices(dataset.size(), total, batch, ctx.train.seed);

  std::vector<const Sample*> members(static_cast<std::size_t>(batch));
  for (std::int64_t iter = result.state.iteration; iter < total; ++iter) {
    for (int b = 0; b < batch; ++b) {
      members[static_cast<std::size_t>(b)] =
          &dataset[order[static_cast<std::size_t>(iter) * batch + b]];
    }
    const double lr = poly_lr(iter, ctx.train);
    LossLogEntry entry{iter, lr, train_step(result.state, members, iter, ctx)};
    result.log.push_back(entry);
    if (options.on_step) options.on_step(entry);
    if (iter % 50 == 0 || iter + 1 == total) {
      spdlog::debug("iter {} lr {:.3e} total {:.5f}", iter, lr, entry.report.total);
    }
    if (write && ctx.train.checkpoint_every > 0 && (iter + 1) % ctx.train.checkpoint_every == 0) {
      write_checkpoint(options.output_dir / ("ckpt_" + std::to_string(iter + 1) + ".svlckpt"),
                       make_checkpoint(result.state, options.config_text));
    }
  }

  if (write) {
    write_loss_csv(options.output_dir / "loss.csv", result.log);
    write_checkpoint(options.output_dir / "final.svlckpt",
                     make_checkpoint(result.state, options.config_text));
  }
  return result;
}

double trainable_fraction(const ModelParams& params, std::uint64_t frozen_params) {
  const auto trainable = static_cast<double>(params.parameter_count());
  return trainable / (trainable + static_cast<double>(frozen_params));
}

}  // namespace svl
