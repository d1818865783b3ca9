// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "svl/types.hpp"

namespace svl {

/// Interleaved RGB image with channel values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * height;
  }
  double& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const noexcept { return pixel_count() == 0; }
};

/// Binary mask, one byte per pixel holding 0 or 1, row-major.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t pixel_count() const noexcept { return data.size(); }
  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// HSV value channel, V = max(R, G, B), as a height x width matrix.
Matrix brightness(const Image& image);

/// Returns the out x in matrix U such that U * v resamples a length-`in`
/// signal to length `out` with half-pixel centers (align_corners = false).
/// Source coordinates below zero clamp to the first sample.
Matrix bilinear_weights(int out, int in);

/// Bilinear resampling of a single-channel grid.
Matrix resize_bilinear(const Matrix& grid, int out_height, int out_width);
Image resize_bilinear(const Image& image, int out_height, int out_width);
Mask resize_nearest(const Mask& mask, int out_height, int out_width);

/// Thresholds a probability map: value > threshold is shadow.
Mask threshold_map(const Matrix& probability, double threshold = 0.5);

// File I/O. PNG and JPEG are read; PNG is written. PFM holds lossless floats.
Image load_image(const std::filesystem::path& path);
/// Reads an 8-bit mask and binarizes it at pixel value > 127.
Mask load_mask(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const Mask& mask);
/// 8-bit quantized single-channel export, round(p * 255) after clamping to [0,1].
void save_probability_png(const std::filesystem::path& path, const Matrix& probability);
void save_image_png(const std::filesystem::path& path, const Image& image);

void save_pfm(const std::filesystem::path& path, const Matrix& grid);
Matrix load_pfm(const std::filesystem::path& path);
/// Three-channel PFM ("PF"), used to hand images to external encoders.
void save_pfm(const std::filesystem::path& path, const Image& image);

}  // namespace svl
