// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "svl/image.hpp"
#include "svl/trainer.hpp"

namespace svl {

struct DatasetRecord {
  std::string id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  std::optional<double> cached_shadow_ratio;
};

/// Scans `root/images/*.{png,jpg,jpeg}` and `root/masks/*.png`, pairing by
/// file stem. Records come back sorted by id. With `require_masks`, images
/// missing a mask raise InputError listing every such stem.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& root, bool require_masks);

/// Loads images and masks at their original resolution.
struct LoadedRecord {
  std::string id;
  Image image;
  std::optional<Mask> mask;
};
LoadedRecord load_record(const DatasetRecord& record);

/// Loads and resizes every record to `image_size` (bilinear image, nearest
/// mask). Records must have masks. Fills cached_shadow_ratio.
std::vector<Sample> load_samples(std::vector<DatasetRecord>& records, int image_size);

}  // namespace svl
