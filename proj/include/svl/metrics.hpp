// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svl/image.hpp"

namespace svl {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Counts over pixels where `region` is set (all pixels when null).
ConfusionCounts confusion_counts(const Mask& pred, const Mask& gt, const Mask* region = nullptr);

// A disengaged optional is the undefined marker for a zero denominator.
struct BerBreakdown {
  std::optional<double> ber;
  std::optional<double> shadow;
  std::optional<double> nonshadow;
};

/// Percentages. `ber` is defined only when both class denominators are positive.
BerBreakdown ber(const ConfusionCounts& counts);
std::optional<double> fpr(const ConfusionCounts& counts);
std::optional<double> precision(const ConfusionCounts& counts);

/// Marks the floor(f * |pixels|) pixels with the smallest V = max(R,G,B);
/// ties go to the lower row-major index.
Mask darkest_fraction_mask(const Image& image, double fraction);

struct MetricReport {
  std::string region = "all";  // "all" or "darkest_<f>"
  std::uint64_t pixel_count = 0;
  ConfusionCounts counts;
  std::optional<double> ber;
  std::optional<double> ber_shadow;
  std::optional<double> ber_nonshadow;
  std::optional<double> fpr;
  std::optional<double> precision;
};

MetricReport make_report(const ConfusionCounts& counts, std::string region);

struct EvalOptions {
  std::optional<double> dark_fraction;
};

struct DatasetReport {
  MetricReport all;
  std::optional<MetricReport> dark;
};

/// Pools confusion counts over the dataset, then derives the metrics. Images
/// are required only for the darkest-fraction region.
DatasetReport evaluate_dataset(std::span<const Mask> preds, std::span<const Mask> gts,
                               std::span<const Image> images, const EvalOptions& options = {});

std::string region_label(double dark_fraction);

// Report emission. Undefined values print as "NA".
std::string format_report_csv(std::span<const MetricReport> reports);
std::vector<MetricReport> parse_report_csv(const std::string& text);
/// Aligned columns: BER, S, NS (overall and per-class BER).
std::string format_ber_table(std::span<const MetricReport> reports);
/// Aligned columns: All BER | D<pct> BER, FPR, Prec.
std::string format_hardcase_table(const MetricReport& all, const MetricReport& dark);

}  // namespace svl
