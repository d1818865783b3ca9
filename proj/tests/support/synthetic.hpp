// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svl/image.hpp"
#include "svl/rng.hpp"
#include "svl/trainer.hpp"

namespace svl::testing {

Image random_image(int height, int width, Rng& rng);
Mask random_mask(int height, int width, double p_shadow, Rng& rng);

/// Textured bright background, tinted dark shadow blobs (mask 1) and
/// uniformly dark distractor blobs (mask 0).
struct BlobScene {
  Image image;
  Mask mask;
};
BlobScene make_blob_scene(int size, std::uint64_t seed);
std::vector<Sample> make_blob_samples(int count, int size, std::uint64_t seed);

/// Writes `images/<id>.png` and `masks/<id>.png` under root.
void write_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace svl::testing
