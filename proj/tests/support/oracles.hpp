// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svl/hardcase.hpp"
#include "svl/image.hpp"
#include "svl/metrics.hpp"
#include "svl/model.hpp"
#include "svl/trainer.hpp"

namespace svl::testing {

// Per-pixel loop with no shared code path.
struct NaiveCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};
NaiveCounts naive_counts(const Mask& pred, const Mask& gt, const Mask* region = nullptr);

struct NaiveRates {
  double ber, shadow, nonshadow, fpr, precision;
};
NaiveRates naive_rates(const NaiveCounts& c);

/// Brute-force hard-case selection for integer percentiles and a selection
/// percentage. Full sort for thresholds, pairwise counting for ranks.
struct NaiveHardcase {
  std::vector<std::string> ids;             // ascending
  std::vector<std::vector<double>> ratios;  // [image][percentile]
  std::vector<std::vector<int>> ranks;
  std::vector<int> rank_sums;
  std::vector<std::string> selected;        // selection order
};
NaiveHardcase naive_hardcase(const std::vector<HardCaseImage>& images, const std::vector<int>& percentiles,
                             int select_percent);

struct GroupError {
  std::string name;
  std::size_t size = 0;
  double analytic_norm = 0.0;
  double relative_error = 0.0;
};

/// Central differences of the mean batch total loss against batch_gradient,
/// one entry per parameter tensor. Large tensors are probed at up to
/// `max_probes` evenly spaced entries.
std::vector<GroupError> gradient_check(const ModelParams& params, std::span<const Sample* const> batch,
                                       std::int64_t iter, const TrainContext& ctx, double step = 1e-6,
                                       std::size_t max_probes = 0);

}  // namespace svl::testing
