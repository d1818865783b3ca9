// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace svl::testing {

NaiveCounts naive_counts(const Mask& pred, const Mask& gt, const Mask* region) {
  NaiveCounts c;
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      if (region && !region->at(y, x)) continue;
      const bool p = pred.at(y, x) != 0;
      const bool g = gt.at(y, x) != 0;
      if (p && g) ++c.tp;
      else if (!p && !g) ++c.tn;
      else if (p && !g) ++c.fp;
      else ++c.fn;
    }
  }
  return c;
}

NaiveRates naive_rates(const NaiveCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  NaiveRates r{};
  r.shadow = 100.0 * (1.0 - tp / (tp + fn));
  r.nonshadow = 100.0 * (1.0 - tn / (tn + fp));
  r.ber = 100.0 * (1.0 - 0.5 * (tp / (tp + fn) + tn / (tn + fp)));
  r.fpr = 100.0 * fp / (fp + tn);
  r.precision = 100.0 * tp / (tp + fp);
  return r;
}

NaiveHardcase naive_hardcase(const std::vector<HardCaseImage>& images, const std::vector<int>& percentiles,
                             int select_percent) {
  std::vector<const HardCaseImage*> sorted;
  for (const auto& im : images) sorted.push_back(&im);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  NaiveHardcase out;
  const int n = static_cast<int>(sorted.size());
  for (const auto* im : sorted) {
    out.ids.push_back(im->id);
    std::vector<double> values(im->brightness.data(), im->brightness.data() + im->brightness.size());
    std::sort(values.begin(), values.end());
    const long long pixels = static_cast<long long>(values.size());
    std::vector<double> row;
    for (int p : percentiles) {
      const long long k = (p * pixels + 99) / 100;
      const double tau = values[static_cast<std::size_t>(k - 1)];
      long long dark = 0, nonshadow = 0;
      for (int y = 0; y < im->mask.height; ++y) {
        for (int x = 0; x < im->mask.width; ++x) {
          if (im->mask.at(y, x)) continue;
          ++nonshadow;
          if (im->brightness(y, x) < tau) ++dark;
        }
      }
      row.push_back(nonshadow == 0 ? 0.0 : static_cast<double>(dark) / static_cast<double>(nonshadow));
    }
    out.ratios.push_back(row);
  }

  out.ranks.assign(n, std::vector<int>(percentiles.size()));
  out.rank_sums.assign(n, 0);
  for (std::size_t p = 0; p < percentiles.size(); ++p) {
    for (int i = 0; i < n; ++i) {
      int rank = 1;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double rj = out.ratios[j][p], ri = out.ratios[i][p];
        if (rj > ri || (rj == ri && out.ids[j] < out.ids[i])) ++rank;
      }
      out.ranks[i][p] = rank;
      out.rank_sums[i] += rank;
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (out.rank_sums[a] != out.rank_sums[b]) return out.rank_sums[a] < out.rank_sums[b];
    return out.ids[a] < out.ids[b];
  });
  const int count = (select_percent * n + 99) / 100;
  for (int i = 0; i < count; ++i) out.selected.push_back(out.ids[order[i]]);
  return out;
}

std::vector<GroupError> gradient_check(const ModelParams& params, std::span<const Sample* const> batch,
                                       std::int64_t iter, const TrainContext& ctx, double step,
                                       std::size_t max_probes) {
  ModelParams grads = params.zeros_like();
  batch_gradient(params, batch, iter, ctx, grads);

  ModelParams probe = params;
  auto probe_views = param_views(probe);
  auto grad_views = param_views(grads);
  std::vector<GroupError> out;
  for (std::size_t g = 0; g < probe_views.size(); ++g) {
    auto& data = probe_views[g].data;
    const std::size_t n = data.size();
    const std::size_t stride = (max_probes == 0 || n <= max_probes) ? 1 : (n + max_probes - 1) / max_probes;
    double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = data[i];
      ModelParams scratch = params.zeros_like();
      data[i] = saved + step;
      const double up = batch_gradient(probe, batch, iter, ctx, scratch).total;
      data[i] = saved - step;
      const double down = batch_gradient(probe, batch, iter, ctx, scratch).total;
      data[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = grad_views[g].data[i];
      diff2 += (fd - an) * (fd - an);
      a2 += an * an;
      f2 += fd * fd;
    }
    const double scale = std::max({std::sqrt(a2), std::sqrt(f2), 1e-12});
    out.push_back({probe_views[g].name, n, std::sqrt(a2), std::sqrt(diff2) / scale});
  }
  return out;
}

}  // namespace svl::testing
