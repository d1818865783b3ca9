// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svl/image.hpp"
#include "svl/types.hpp"

namespace svl {

/// Nearest-rank percentile of the brightness values: the k-th smallest V with
/// k = ceil(p / 100 * |pixels|), p in (0, 100].
double darkness_threshold(const Matrix& brightness, double p);
double darkness_threshold(const Image& image, double p);

/// Fraction of non-shadow pixels strictly darker than the p-th percentile,
/// kept as an exact ratio so rankings compare without rounding.
struct DarkRatio {
  std::uint64_t dark = 0;       // |{x in non-shadow : V(x) < tau}|
  std::uint64_t nonshadow = 0;  // |non-shadow|
  bool degenerate = false;      // no non-shadow pixels; value() is 0

  double value() const noexcept {
    return nonshadow == 0 ? 0.0 : static_cast<double>(dark) / static_cast<double>(nonshadow);
  }
  /// Exact comparison of the two ratios.
  friend bool ratio_greater(const DarkRatio& a, const DarkRatio& b) noexcept {
    const std::uint64_t ad = a.nonshadow == 0 ? 1 : a.nonshadow;
    const std::uint64_t bd = b.nonshadow == 0 ? 1 : b.nonshadow;
    const auto lhs = static_cast<unsigned __int128>(a.nonshadow == 0 ? 0 : a.dark) * bd;
    const auto rhs = static_cast<unsigned __int128>(b.nonshadow == 0 ? 0 : b.dark) * ad;
    return lhs > rhs;
  }
};

DarkRatio dark_nonshadow_ratio(const Matrix& brightness, const Mask& gt, double p);
DarkRatio dark_nonshadow_ratio(const Image& image, const Mask& gt, double p);

struct HardCaseImage {
  std::string id;
  Matrix brightness;  // V channel
  Mask mask;
};

struct HardCaseEntry {
  std::string id;
  std::vector<DarkRatio> ratios;  // one per percentile
  std::vector<int> ranks;         // 1 = hardest
  int rank_sum = 0;
  bool selected = false;

  double mean_rank() const noexcept {
    return ranks.empty() ? 0.0 : static_cast<double>(rank_sum) / static_cast<double>(ranks.size());
  }
  bool degenerate() const noexcept { return !ratios.empty() && ratios.front().degenerate; }
};

struct HardCaseRanking {
  std::vector<double> percentiles;
  double fraction = 0.2;
  std::vector<HardCaseEntry> entries;     // ascending id
  std::vector<std::string> selected_ids;  // selection order: mean rank, then id
};

/// Ranks images by descending dark non-shadow ratio per percentile (ties by
/// ascending id), averages the ranks, and selects the ceil(frac * N) images
/// with the smallest mean rank (ties by ascending id).
HardCaseRanking rank_and_select(std::span<const HardCaseImage> images,
                                const std::vector<double>& percentiles = {5.0, 10.0, 15.0},
                                double fraction = 0.2);

/// `id,r_<p>...,mean_rank,selected,degenerate`, one row per image.
std::string format_hardcase_csv(const HardCaseRanking& ranking);
std::string format_selected_ids(const HardCaseRanking& ranking);

}  // namespace svl
