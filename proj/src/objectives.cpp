// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svl/error.hpp"

namespace svl {
namespace {

void check_binary(const Mask& mask) {
  for (auto v : mask.data) {
    if (v > 1) throw InputError("mask must be binary (0/1)");
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(beta_back > 0.0)) throw ConfigError("loss.beta_back must be positive");
  if (!(eps > 0.0)) throw ConfigError("loss.eps must be positive");
  if (!(delta > 0.0)) throw ConfigError("loss.delta must be positive");
  if (!(kappa > 0.0)) throw ConfigError("loss.kappa must be positive");
  if (!(lambda_ratio > 0.0)) throw ConfigError("loss.lambda_ratio must be positive");
  if (!(smooth_l1_beta > 0.0)) throw ConfigError("loss.smooth_l1_beta must be positive");
  if (total_iters < 0) throw ConfigError("total_iters must be non-negative");
  if (!(omega_min >= 0.0) || !(omega_max >= omega_min)) throw ConfigError("invalid omega clamp");
}

double class_balance_weight(const Mask& mask, double omega_min, double omega_max) {
  check_binary(mask);
  const auto shadow = static_cast<double>(std::count(mask.data.begin(), mask.data.end(), 1));
  if (shadow == 0.0) return 1.0;
  const double background = static_cast<double>(mask.data.size()) - shadow;
  return std::clamp(background / shadow, omega_min, omega_max);
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double weighted_bce(const Matrix& logits, const Mask& mask, const LossConfig& cfg, Matrix* grad) {
  if (logits.rows() != mask.height || logits.cols() != mask.width) {
    throw InputError("logit map " + std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()) +
                     " does not match mask " + std::to_string(mask.height) + "x" +
                     std::to_string(mask.width));
  }
  const double omega = class_balance_weight(mask, cfg.omega_min, cfg.omega_max);
  const double count = static_cast<double>(mask.pixel_count());
  if (grad) grad->resize(logits.rows(), logits.cols());

  double sum = 0.0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const double z = sigmoid(logits(y, x));
      const double one_minus_z = sigmoid(-logits(y, x));
      const bool shadow = mask.at(y, x) != 0;
      double dz = 0.0;
      if (shadow) {
        sum += omega * std::log(z + cfg.eps);
        dz = omega / (z + cfg.eps);
      } else {
        sum += std::log(one_minus_z + cfg.eps);
        dz = -1.0 / (one_minus_z + cfg.eps);
      }
      if (grad) (*grad)(y, x) = -cfg.beta_back * dz * z * one_minus_z / count;
    }
  }
  return -cfg.beta_back * sum / count;
}

double shadow_ratio(const Mask& mask) {
  check_binary(mask);
  if (mask.data.empty()) throw InputError("empty mask");
  return static_cast<double>(std::count(mask.data.begin(), mask.data.end(), 1)) /
         static_cast<double>(mask.data.size());
}

double smooth_l1(double x, double beta_pt) {
  const double a = std::abs(x);
  return a < beta_pt ? 0.5 * x * x / beta_pt : a - 0.5 * beta_pt;
}

double smooth_l1_grad(double x, double beta_pt) {
  if (std::abs(x) < beta_pt) return x / beta_pt;
  return x > 0.0 ? 1.0 : -1.0;
}

double ratio_loss(double logit, double ratio, const LossConfig& cfg, double* grad) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw InputError("shadow ratio must lie in [0, 1]");
  const double predicted = sigmoid(logit);
  const double weight = std::pow(ratio + cfg.delta, cfg.kappa);
  const double diff = predicted - ratio;
  if (grad) {
    *grad = weight * smooth_l1_grad(diff, cfg.smooth_l1_beta) * predicted * sigmoid(-logit);
  }
  return weight * smooth_l1(diff, cfg.smooth_l1_beta);
}

double aux_weight(std::int64_t iter, std::int64_t total_iters) {
  if (total_iters <= 0 || iter < 0 || iter > total_iters) {
    throw InputError("iteration " + std::to_string(iter) + " outside [0, " +
                     std::to_string(total_iters) + "]");
  }
  return 1.0 - static_cast<double>(iter) / static_cast<double>(total_iters);
}

LossReport total_loss(const PredictionBundle& bundle, const Mask& mask, std::int64_t iter,
                      const LossConfig& cfg, BundleGradient* grad) {
  LossReport report;
  report.lambda_gi = report.lambda_lc = aux_weight(iter, cfg.total_iters);

  double d_ratio = 0.0;
  if (grad) {
    report.l_final = weighted_bce(bundle.final_logits, mask, cfg, &grad->final_logits);
    report.l_gi = weighted_bce(bundle.aux_gi, mask, cfg, &grad->aux_gi);
    report.l_lc = weighted_bce(bundle.aux_lc, mask, cfg, &grad->aux_lc);
    report.l_ratio = ratio_loss(bundle.ratio_logit, shadow_ratio(mask), cfg, &d_ratio);
    grad->aux_gi *= report.lambda_gi;
    grad->aux_lc *= report.lambda_lc;
    grad->ratio_logit = cfg.lambda_ratio * d_ratio;
  } else {
    report.l_final = weighted_bce(bundle.final_logits, mask, cfg);
    report.l_gi = weighted_bce(bundle.aux_gi, mask, cfg);
    report.l_lc = weighted_bce(bundle.aux_lc, mask, cfg);
    report.l_ratio = ratio_loss(bundle.ratio_logit, shadow_ratio(mask), cfg);
  }
  report.total = report.l_final + report.lambda_gi * report.l_gi + report.lambda_lc * report.l_lc +
                 cfg.lambda_ratio * report.l_ratio;
  return report;
}

}  // namespace svl
