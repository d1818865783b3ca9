// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "svl/error.hpp"

namespace svl {
namespace {

std::optional<double> percent(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt_value(const std::optional<double>& v, int precision = 6) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

std::string dark_header(const std::string& region) {
  // darkest_0.200000 -> D20
  const auto pos = region.find('_');
  if (pos == std::string::npos) return region;
  const double f = std::stod(region.substr(pos + 1));
  return "D" + std::to_string(static_cast<int>(std::lround(f * 100.0)));
}

}  // namespace

ConfusionCounts confusion_counts(const Mask& pred, const Mask& gt, const Mask* region) {
  if (pred.width != gt.width || pred.height != gt.height ||
      (region && (region->width != gt.width || region->height != gt.height))) {
    throw InputError("prediction, ground truth and region masks must share a shape");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    if (region && !region->data[i]) continue;
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    if (p && g) ++c.tp;
    else if (!p && !g) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

BerBreakdown ber(const ConfusionCounts& c) {
  BerBreakdown out;
  if (c.tp + c.fn > 0) out.shadow = 100.0 * (1.0 - static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn));
  if (c.tn + c.fp > 0) out.nonshadow = 100.0 * (1.0 - static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp));
  if (out.shadow && out.nonshadow) out.ber = 0.5 * (*out.shadow + *out.nonshadow);
  return out;
}

std::optional<double> fpr(const ConfusionCounts& c) { return percent(c.fp, c.fp + c.tn); }

std::optional<double> precision(const ConfusionCounts& c) { return percent(c.tp, c.tp + c.fp); }

Mask darkest_fraction_mask(const Image& image, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("dark fraction must lie in (0, 1]");
  const std::size_t n = image.pixel_count();
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  std::vector<double> v(n);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      v[static_cast<std::size_t>(y) * image.width + x] =
          std::max({image.at(y, x, 0), image.at(y, x, 1), image.at(y, x, 2)});
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Mask mask(image.width, image.height);
  for (std::size_t i = 0; i < std::min(k, n); ++i) mask.data[order[i]] = 1;
  return mask;
}

MetricReport make_report(const ConfusionCounts& counts, std::string region) {
  MetricReport r;
  r.region = std::move(region);
  r.counts = counts;
  r.pixel_count = counts.total();
  const auto b = ber(counts);
  r.ber = b.ber;
  r.ber_shadow = b.shadow;
  r.ber_nonshadow = b.nonshadow;
  r.fpr = fpr(counts);
  r.precision = precision(counts);
  return r;
}

std::string region_label(double dark_fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "darkest_%.6f", dark_fraction);
  return buf;
}

DatasetReport evaluate_dataset(std::span<const Mask> preds, std::span<const Mask> gts,
                               std::span<const Image> images, const EvalOptions& options) {
  if (preds.size() != gts.size()) throw InputError("prediction and ground-truth lists differ in length");
  if (options.dark_fraction && images.size() != gts.size()) {
    throw InputError("darkest-fraction evaluation needs one image per ground-truth mask");
  }
  ConfusionCounts all;
  ConfusionCounts dark;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    all += confusion_counts(preds[i], gts[i]);
    if (options.dark_fraction) {
      const Mask region = darkest_fraction_mask(images[i], *options.dark_fraction);
      dark += confusion_counts(preds[i], gts[i], &region);
    }
  }
  DatasetReport report{make_report(all, "all"), std::nullopt};
  if (options.dark_fraction) report.dark = make_report(dark, region_label(*options.dark_fraction));
  return report;
}

std::string format_report_csv(std::span<const MetricReport> reports) {
  std::ostringstream out;
  out << "region,pixels,tp,tn,fp,fn,ber,ber_shadow,ber_nonshadow,fpr,precision\n";
  for (const auto& r : reports) {
    out << r.region << ',' << r.pixel_count << ',' << r.counts.tp << ',' << r.counts.tn << ','
        << r.counts.fp << ',' << r.counts.fn << ',' << fmt_value(r.ber) << ','
        << fmt_value(r.ber_shadow) << ',' << fmt_value(r.ber_nonshadow) << ',' << fmt_value(r.fpr)
        << ',' << fmt_value(r.precision) << '\n';
  }
  return out.str();
}

std::vector<MetricReport> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("region,", 0) != 0) {
    throw InputError("report CSV must start with the region,pixels,... header");
  }
  std::vector<MetricReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11) throw InputError("malformed report row: " + line);
    // Counts are authoritative; the printed metrics are recomputed from them.
    ConfusionCounts c{std::stoull(f[2]), std::stoull(f[3]), std::stoull(f[4]), std::stoull(f[5])};
    MetricReport r = make_report(c, f[0]);
    if (std::stoull(f[1]) != r.pixel_count) throw InputError("pixel count disagrees with counts: " + line);
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string format_ber_table(std::span<const MetricReport> reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s\n", "Region", "BER", "S", "NS");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s\n", r.region.c_str(), fmt_value(r.ber, 2).c_str(),
                  fmt_value(r.ber_shadow, 2).c_str(), fmt_value(r.ber_nonshadow, 2).c_str());
    out << line;
  }
  return out.str();
}

std::string format_hardcase_table(const MetricReport& all, const MetricReport& dark) {
  const std::string d = dark_header(dark.region);
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%8s | %8s %8s %8s\n", "All", d.c_str(), d.c_str(), d.c_str());
  out << line;
  std::snprintf(line, sizeof(line), "%8s | %8s %8s %8s\n", "BER", "BER", "FPR", "Prec");
  out << line;
  std::snprintf(line, sizeof(line), "%8s | %8s %8s %8s\n", fmt_value(all.ber, 2).c_str(),
                fmt_value(dark.ber, 2).c_str(), fmt_value(dark.fpr, 2).c_str(),
                fmt_value(dark.precision, 2).c_str());
  out << line;
  return out.str();
}

}  // namespace svl
