// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/dataset.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "svl/error.hpp"
#include "svl/objectives.hpp"

namespace svl {
namespace fs = std::filesystem;
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::map<std::string, fs::path> scan(const fs::path& dir, std::initializer_list<const char*> exts) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower(entry.path().extension().string());
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    const std::string stem = entry.path().stem().string();
    auto [it, inserted] = out.emplace(stem, entry.path());
    if (!inserted) {
      // Same stem in two formats: keep the smallest path.
      if (entry.path() < it->second) it->second = entry.path();
      spdlog::warn("duplicate stem '{}' in {}, using {}", stem, dir.string(), it->second.string());
    }
  }
  return out;
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const fs::path& root, bool require_masks) {
  if (!fs::is_directory(root)) throw InputError("dataset root is not a directory: " + root.string());
  const auto images = scan(root / "images", {".png", ".jpg", ".jpeg"});
  const auto masks = scan(root / "masks", {".png"});

  std::vector<DatasetRecord> records;
  std::vector<std::string> unmatched;
  for (const auto& [stem, path] : images) {
    DatasetRecord rec{stem, path, std::nullopt, std::nullopt};
    if (auto it = masks.find(stem); it != masks.end()) rec.mask_path = it->second;
    else unmatched.push_back(stem);
    records.push_back(std::move(rec));
  }
  if (require_masks && !unmatched.empty()) {
    std::string list;
    for (const auto& s : unmatched) list += (list.empty() ? "" : ",") + s;
    throw InputError("images without masks in " + root.string() + ": " + list);
  }
  if (records.empty()) spdlog::warn("no images found under {}", root.string());
  else spdlog::info("loaded {} records from {}", records.size(), root.string());
  return records;
}

LoadedRecord load_record(const DatasetRecord& record) {
  LoadedRecord out{record.id, load_image(record.image_path), std::nullopt};
  if (record.mask_path) {
    Mask m = load_mask(*record.mask_path);
    if (m.width != out.image.width || m.height != out.image.height) {
      throw InputError("mask size does not match image for " + record.id);
    }
    out.mask = std::move(m);
  }
  return out;
}

std::vector<Sample> load_samples(std::vector<DatasetRecord>& records, int image_size) {
  std::vector<Sample> out;
  out.reserve(records.size());
  for (auto& rec : records) {
    if (!rec.mask_path) throw InputError("record " + rec.id + " has no mask");
    LoadedRecord loaded = load_record(rec);
    Sample s{rec.id, resize_bilinear(loaded.image, image_size, image_size),
             resize_nearest(*loaded.mask, image_size, image_size)};
    rec.cached_shadow_ratio = shadow_ratio(s.mask);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace svl
