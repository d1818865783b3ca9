// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/hardcase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "svl/error.hpp"

namespace svl {
namespace {

std::size_t nearest_rank(double p, std::size_t n) {
  const double k = std::ceil(p * static_cast<double>(n) / 100.0 - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

std::string format_percentile(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", p);
  return buf;
}

}  // namespace

double darkness_threshold(const Matrix& brightness, double p) {
  if (brightness.size() == 0) throw InputError("empty image");
  if (!(p > 0.0 && p <= 100.0)) throw InputError("percentile must lie in (0, 100]");
  std::vector<double> v(brightness.data(), brightness.data() + brightness.size());
  const std::size_t k = nearest_rank(p, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

double darkness_threshold(const Image& image, double p) { return darkness_threshold(brightness(image), p); }

DarkRatio dark_nonshadow_ratio(const Matrix& brightness, const Mask& gt, double p) {
  if (brightness.rows() != gt.height || brightness.cols() != gt.width) {
    throw InputError("mask does not match image size");
  }
  const double tau = darkness_threshold(brightness, p);
  DarkRatio r;
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      if (gt.at(y, x)) continue;
      ++r.nonshadow;
      if (brightness(y, x) < tau) ++r.dark;
    }
  }
  r.degenerate = r.nonshadow == 0;
  return r;
}

DarkRatio dark_nonshadow_ratio(const Image& image, const Mask& gt, double p) {
  return dark_nonshadow_ratio(brightness(image), gt, p);
}

HardCaseRanking rank_and_select(std::span<const HardCaseImage> images,
                                const std::vector<double>& percentiles, double fraction) {
  if (images.empty()) throw InputError("hard-case dataset is empty");
  if (percentiles.empty()) throw InputError("at least one percentile is required");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must lie in (0, 1]");

  HardCaseRanking ranking;
  ranking.percentiles = percentiles;
  ranking.fraction = fraction;
  for (const auto& img : images) {
    HardCaseEntry e;
    e.id = img.id;
    for (double p : percentiles) e.ratios.push_back(dark_nonshadow_ratio(img.brightness, img.mask, p));
    e.ranks.assign(percentiles.size(), 0);
    ranking.entries.push_back(std::move(e));
  }
  auto& entries = ranking.entries;
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) throw InputError("duplicate image id '" + entries[i].id + "'");
  }

  std::vector<std::size_t> order(entries.size());
  for (std::size_t p = 0; p < percentiles.size(); ++p) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // entries are id-sorted, so a stable sort on the ratio breaks ties by id.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ratio_greater(entries[a].ratios[p], entries[b].ratios[p]);
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      entries[order[r]].ranks[p] = static_cast<int>(r + 1);
      entries[order[r]].rank_sum += static_cast<int>(r + 1);
    }
  }

  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entries[a].rank_sum < entries[b].rank_sum; });
  const auto count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(entries.size()) - 1e-9));
  for (std::size_t i = 0; i < std::min(count, order.size()); ++i) {
    entries[order[i]].selected = true;
    ranking.selected_ids.push_back(entries[order[i]].id);
  }
  return ranking;
}

std::string format_hardcase_csv(const HardCaseRanking& ranking) {
  std::ostringstream out;
  out << "id";
  for (double p : ranking.percentiles) out << ",r_" << format_percentile(p);
  out << ",mean_rank,selected,degenerate\n";
  char buf[64];
  for (const auto& e : ranking.entries) {
    out << e.id;
    for (const auto& r : e.ratios) {
      std::snprintf(buf, sizeof(buf), ",%.9f", r.value());
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.6f,%d,%d\n", e.mean_rank(), e.selected ? 1 : 0, e.degenerate() ? 1 : 0);
    out << buf;
  }
  return out.str();
}

std::string format_selected_ids(const HardCaseRanking& ranking) {
  std::string out;
  for (const auto& id : ranking.selected_ids) out += id + '\n';
  return out;
}

}  // namespace svl
