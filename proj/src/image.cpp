// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "svl/error.hpp"

namespace svl {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, std::uint32_t format,
                                   int& width, int& height) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  width = static_cast<int>(img.width);
  height = static_cast<int>(img.height);
  return buffer;
}

void write_png(const std::filesystem::path& path, std::uint32_t format, int width, int height,
               const std::vector<std::uint8_t>& buffer) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// Decodes into `out` as 8-bit RGB. Returns an empty string on success, the
// libjpeg message otherwise. Kept free of C++ objects with destructors so the
// longjmp path is well defined.
std::string decode_jpeg(std::FILE* file, std::vector<std::uint8_t>& out, int& width, int& height) {
  jpeg_decompress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    return err.message;
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file);
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  width = static_cast<int>(info.output_width);
  height = static_cast<int>(info.output_height);
  out.resize(static_cast<std::size_t>(width) * height * 3);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = out.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return {};
}

std::vector<std::uint8_t> read_jpeg(const std::filesystem::path& path, int& width, int& height) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> rgb;
  const std::string message = decode_jpeg(file.get(), rgb, width, height);
  if (!message.empty()) throw IoError("cannot decode JPEG " + path.string() + ": " + message);
  return rgb;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_pfm(const std::filesystem::path& path, const char* tag, int width, int height,
               const std::vector<float>& rows_bottom_up) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << tag << '\n' << width << ' ' << height << "\n-1.0\n";
  out.write(reinterpret_cast<const char*>(rows_bottom_up.data()),
            static_cast<std::streamsize>(rows_bottom_up.size() * sizeof(float)));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

Matrix brightness(const Image& image) {
  Matrix v(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      v(y, x) = std::max({image.at(y, x, 0), image.at(y, x, 1), image.at(y, x, 2)});
    }
  }
  return v;
}

Matrix bilinear_weights(int out, int in) {
  Matrix u = Matrix::Zero(out, in);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double src = std::max(0.0, (i + 0.5) * scale - 0.5);
    const int i0 = std::min(static_cast<int>(src), in - 1);
    const int i1 = std::min(i0 + 1, in - 1);
    const double w1 = src - i0;
    u(i, i0) += 1.0 - w1;
    u(i, i1) += w1;
  }
  return u;
}

Matrix resize_bilinear(const Matrix& grid, int out_height, int out_width) {
  if (grid.rows() == out_height && grid.cols() == out_width) return grid;
  const Matrix uy = bilinear_weights(out_height, static_cast<int>(grid.rows()));
  const Matrix ux = bilinear_weights(out_width, static_cast<int>(grid.cols()));
  return uy * grid * ux.transpose();
}

Image resize_bilinear(const Image& image, int out_height, int out_width) {
  if (image.height == out_height && image.width == out_width) return image;
  const Matrix uy = bilinear_weights(out_height, image.height);
  const Matrix ux = bilinear_weights(out_width, image.width);
  Image out(out_width, out_height);
  Matrix channel(image.height, image.width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) channel(y, x) = image.at(y, x, c);
    const Matrix resized = uy * channel * ux.transpose();
    for (int y = 0; y < out_height; ++y)
      for (int x = 0; x < out_width; ++x) out.at(y, x, c) = resized(y, x);
  }
  return out;
}

Mask resize_nearest(const Mask& mask, int out_height, int out_width) {
  if (mask.height == out_height && mask.width == out_width) return mask;
  Mask out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const int sy = std::min(mask.height - 1, static_cast<int>((y + 0.5) * mask.height / out_height));
    for (int x = 0; x < out_width; ++x) {
      const int sx = std::min(mask.width - 1, static_cast<int>((x + 0.5) * mask.width / out_width));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Mask threshold_map(const Matrix& probability, double threshold) {
  Mask mask(static_cast<int>(probability.cols()), static_cast<int>(probability.rows()));
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) mask.at(y, x) = probability(y, x) > threshold ? 1 : 0;
  return mask;
}

Image load_image(const std::filesystem::path& path) {
  int width = 0;
  int height = 0;
  const std::string ext = lower_extension(path);
  std::vector<std::uint8_t> rgb;
  if (ext == ".png") {
    rgb = read_png(path, PNG_FORMAT_RGB, width, height);
  } else if (ext == ".jpg" || ext == ".jpeg") {
    rgb = read_jpeg(path, width, height);
  } else {
    throw IoError("unsupported image format: " + path.string());
  }
  Image image(width, height);
  for (std::size_t i = 0; i < rgb.size(); ++i) image.pixels[i] = rgb[i] / 255.0;
  return image;
}

Mask load_mask(const std::filesystem::path& path) {
  int width = 0;
  int height = 0;
  const auto gray = read_png(path, PNG_FORMAT_GRAY, width, height);
  Mask mask(width, height);
  for (std::size_t i = 0; i < gray.size(); ++i) mask.data[i] = gray[i] > 127 ? 1 : 0;
  return mask;
}

void save_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> gray(mask.data.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.data[i] ? 255 : 0;
  write_png(path, PNG_FORMAT_GRAY, mask.width, mask.height, gray);
}

void save_probability_png(const std::filesystem::path& path, const Matrix& probability) {
  const int h = static_cast<int>(probability.rows());
  const int w = static_cast<int>(probability.cols());
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) gray[static_cast<std::size_t>(y) * w + x] = quantize(probability(y, x));
  write_png(path, PNG_FORMAT_GRAY, w, h, gray);
}

void save_image_png(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> rgb(image.pixels.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = quantize(image.pixels[i]);
  write_png(path, PNG_FORMAT_RGB, image.width, image.height, rgb);
}

void save_pfm(const std::filesystem::path& path, const Matrix& grid) {
  const int h = static_cast<int>(grid.rows());
  const int w = static_cast<int>(grid.cols());
  std::vector<float> rows(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      rows[static_cast<std::size_t>(h - 1 - y) * w + x] = static_cast<float>(grid(y, x));
  write_pfm(path, "Pf", w, h, rows);
}

void save_pfm(const std::filesystem::path& path, const Image& image) {
  std::vector<float> rows(image.pixels.size());
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c)
        rows[(static_cast<std::size_t>(image.height - 1 - y) * image.width + x) * 3 + c] =
            static_cast<float>(image.at(y, x, c));
  write_pfm(path, "PF", image.width, image.height, rows);
}

Matrix load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string tag;
  int w = 0;
  int h = 0;
  double scale = 0.0;
  in >> tag >> w >> h >> scale;
  in.get();
  if (tag != "Pf" || w <= 0 || h <= 0 || scale >= 0.0) {
    throw IoError("expected little-endian single-channel PFM: " + path.string());
  }
  std::vector<float> rows(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(float)));
  if (!in) throw IoError("truncated PFM: " + path.string());
  Matrix grid(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) grid(y, x) = rows[static_cast<std::size_t>(h - 1 - y) * w + x];
  return grid;
}

}  // namespace svl
