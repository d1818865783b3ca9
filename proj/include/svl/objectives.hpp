// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "svl/fusion.hpp"
#include "svl/image.hpp"
#include "svl/types.hpp"

namespace svl {

struct LossConfig {
  double beta_back = 1.0;
  double eps = 1e-6;
  double delta = 0.05;
  double kappa = 0.5;
  double lambda_ratio = 0.25;
  double smooth_l1_beta = 1.0;
  std::int64_t total_iters = 500;
  double omega_min = 0.0;
  double omega_max = 50.0;

  void validate() const;
};

struct LossReport {
  double l_final = 0.0;
  double l_gi = 0.0;
  double l_lc = 0.0;
  double l_ratio = 0.0;
  double total = 0.0;
  double lambda_gi = 0.0;
  double lambda_lc = 0.0;
};

/// Gradient of the total loss with respect to every bundle output.
using BundleGradient = PredictionBundle;

/// Non-shadow to shadow pixel ratio, clamped to [omega_min, omega_max].
/// A mask without shadow pixels yields 1.
double class_balance_weight(const Mask& mask, double omega_min = 0.0, double omega_max = 50.0);

/// Numerically stable logistic function.
double sigmoid(double x) noexcept;

/// Spatial mean of -beta_back (w Y log(Z + eps) + (1 - Y) log(1 - Z + eps)),
/// Z = sigmoid(logits), w from class_balance_weight. When `grad` is given it
/// receives dLoss/dlogits.
double weighted_bce(const Matrix& logits, const Mask& mask, const LossConfig& cfg,
                    Matrix* grad = nullptr);

double shadow_ratio(const Mask& mask);

double smooth_l1(double x, double beta_pt);
double smooth_l1_grad(double x, double beta_pt);

/// (r + delta)^kappa * SmoothL1(sigmoid(s) - r). `grad` receives dL/ds.
double ratio_loss(double logit, double ratio, const LossConfig& cfg, double* grad = nullptr);

/// Linear decay 1 - iter / total_iters; iter must lie in [0, total_iters].
double aux_weight(std::int64_t iter, std::int64_t total_iters);

LossReport total_loss(const PredictionBundle& bundle, const Mask& mask, std::int64_t iter,
                      const LossConfig& cfg, BundleGradient* grad = nullptr);

}  // namespace svl
