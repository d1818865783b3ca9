// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/backbone.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string_view>
#include <unistd.h>

#include "svl/error.hpp"
#include "svl/rng.hpp"

namespace svl {
namespace {

std::uint64_t hash_doubles(const double* data, std::size_t n, std::uint64_t hash) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(data), n * sizeof(double)), hash);
}

Matrix gaussian_matrix(int rows, int cols, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  return m;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void check_pyramid(const TokenPyramid& pyramid, const BackboneConfig& config) {
  const auto n = static_cast<Eigen::Index>(config.num_patches());
  const auto d = static_cast<Eigen::Index>(config.feature_dim);
  if (static_cast<int>(pyramid.levels.size()) != config.num_levels()) {
    throw ConfigError("encoder returned " + std::to_string(pyramid.levels.size()) +
                      " levels, expected " + std::to_string(config.num_levels()));
  }
  for (const auto& level : pyramid.levels) {
    if (level.cls.size() != d || level.patches.rows() != n || level.patches.cols() != d) {
      throw ConfigError("encoder level shape does not match N=" + std::to_string(n) +
                        ", D=" + std::to_string(d));
    }
    if (!level.cls.allFinite() || !all_finite(level.patches)) {
      throw InputError("encoder produced non-finite tokens");
    }
  }
  if (pyramid.shallow_patches.rows() != n || pyramid.shallow_patches.cols() != d) {
    throw ConfigError("shallow patch grid shape does not match N x D");
  }
  if (!all_finite(pyramid.shallow_patches)) throw InputError("encoder produced non-finite tokens");
}

// -- binary helpers for the exec adapter --------------------------------------

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated file: " + path.string());
  return value;
}

void put_row_major(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
}

Matrix get_row_major(std::istream& in, std::uint32_t rows, std::uint32_t cols,
                     const std::filesystem::path& path) {
  Matrix m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = get<double>(in, path);
  return m;
}

void expect_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic) throw IoError("bad magic in " + path.string());
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::filesystem::path scratch_path(const std::string& stem) {
  static std::atomic<unsigned> counter{0};
  return std::filesystem::temp_directory_path() /
         ("svl_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + stem);
}

void run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status != 0) throw IoError("adapter command failed (status " + std::to_string(status) + "): " + command);
}

// Runs `<command> vision <weights> <image.pfm> <out>` and
// `<command> text <weights> <prompts.txt> <out>`.
EncoderAdapter make_exec_adapter(const BackboneConfig&, const EncoderSource& source) {
  if (source.command.empty()) throw ConfigError("exec adapter requires backbone.adapter_command");
  EncoderAdapter adapter;
  adapter.vision = [source](const Image& image) {
    const auto in = scratch_path("image.pfm");
    const auto out = scratch_path("pyramid.bin");
    save_pfm(in, image);
    run_command(source.command + " vision " + shell_quote(source.vision_weights) + " " +
                shell_quote(in.string()) + " " + shell_quote(out.string()));
    TokenPyramid pyramid = read_token_pyramid(out);
    std::filesystem::remove(in);
    std::filesystem::remove(out);
    return pyramid;
  };
  adapter.text = [source](const std::vector<std::string>& prompts) {
    const auto in = scratch_path("prompts.txt");
    const auto out = scratch_path("text.bin");
    {
      std::ofstream f(in);
      for (const auto& p : prompts) f << p << '\n';
    }
    run_command(source.command + " text " + shell_quote(source.text_weights) + " " +
                shell_quote(in.string()) + " " + shell_quote(out.string()));
    Vector embedding = read_text_embedding(out);
    std::filesystem::remove(in);
    std::filesystem::remove(out);
    return embedding;
  };
  return adapter;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, AdapterFactory>& registry() {
  static std::map<std::string, AdapterFactory> r{{"exec", make_exec_adapter}};
  return r;
}

class AdapterVisionEncoder final : public VisionEncoder {
 public:
  AdapterVisionEncoder(BackboneConfig config, EncoderAdapter adapter)
      : config_(std::move(config)), adapter_(std::move(adapter)) {}
  const BackboneConfig& config() const noexcept override { return config_; }
  TokenPyramid encode(const Image& image) const override { return adapter_.vision(image); }
  std::uint64_t checksum() const override {
    return adapter_.fingerprint ? adapter_.fingerprint() : 0;
  }

 private:
  BackboneConfig config_;
  EncoderAdapter adapter_;
};

class AdapterTextEncoder final : public TextEncoder {
 public:
  AdapterTextEncoder(int dim, EncoderAdapter adapter) : dim_(dim), adapter_(std::move(adapter)) {}
  int dim() const noexcept override { return dim_; }
  Vector encode(const std::vector<std::string>& prompts) const override {
    Vector e = adapter_.text(prompts);
    if (e.size() != dim_) {
      throw ConfigError("text adapter returned dim " + std::to_string(e.size()) + ", expected " +
                        std::to_string(dim_));
    }
    return e;
  }
  std::uint64_t checksum() const override {
    return adapter_.fingerprint ? adapter_.fingerprint() : 0;
  }

 private:
  int dim_;
  EncoderAdapter adapter_;
};

}  // namespace

void BackboneConfig::validate() const {
  if (patch_size <= 0 || image_size <= 0 || image_size % patch_size != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) +
                      " must be a positive multiple of patch_size " + std::to_string(patch_size));
  }
  if (feature_dim <= 0 || text_dim <= 0) throw ConfigError("feature_dim and text_dim must be positive");
  if (selected_layers.empty()) throw ConfigError("selected_layers must not be empty");
  for (std::size_t i = 1; i < selected_layers.size(); ++i) {
    if (selected_layers[i] <= selected_layers[i - 1]) {
      throw ConfigError("selected_layers must be strictly increasing");
    }
  }
  if (shallow_layer < 0 || shallow_layer >= selected_layers.front()) {
    throw ConfigError("shallow_layer must be non-negative and below every selected layer");
  }
}

ToyVisionEncoder::ToyVisionEncoder(BackboneConfig config) : config_(std::move(config)) {
  config_.validate();
  for (int layer : config_.selected_layers) levels_.push_back(make_layer(layer));
  shallow_ = make_layer(config_.shallow_layer);
}

ToyVisionEncoder::LayerWeights ToyVisionEncoder::make_layer(int layer) const {
  const int in = config_.patch_size * config_.patch_size * 3;
  const int d = config_.feature_dim;
  const std::uint64_t layer_seed = mix_seed(config_.seed, static_cast<std::uint64_t>(layer));
  return {gaussian_matrix(d, in, 1.0 / std::sqrt(static_cast<double>(in)), mix_seed(layer_seed, 1)),
          gaussian_matrix(d, d, 1.0 / std::sqrt(static_cast<double>(d)), mix_seed(layer_seed, 2))};
}

TokenLevel ToyVisionEncoder::encode_level(const Matrix& blocks, const LayerWeights& w) const {
  TokenLevel level;
  level.patches = blocks * w.patch_map.transpose();
  level.cls = w.cls_map * level.patches.colwise().mean().transpose();
  return level;
}

TokenPyramid ToyVisionEncoder::encode(const Image& image) const {
  const int p = config_.patch_size;
  const int g = config_.grid_side();
  Matrix blocks(g * g, p * p * 3);
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const int row = gy * g + gx;
      int col = 0;
      for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x)
          for (int c = 0; c < 3; ++c) blocks(row, col++) = image.at(gy * p + y, gx * p + x, c);
    }
  }
  TokenPyramid pyramid;
  for (const auto& w : levels_) pyramid.levels.push_back(encode_level(blocks, w));
  pyramid.shallow_patches = blocks * shallow_.patch_map.transpose();
  return pyramid;
}

std::uint64_t ToyVisionEncoder::checksum() const {
  std::uint64_t h = fnv1a("toy-vision");
  auto mix = [&h](const Matrix& m) { h = hash_doubles(m.data(), static_cast<std::size_t>(m.size()), h); };
  for (const auto& w : levels_) {
    mix(w.patch_map);
    mix(w.cls_map);
  }
  mix(shallow_.patch_map);
  mix(shallow_.cls_map);
  return h;
}

Vector ToyTextEncoder::prompt_vector(const std::string& prompt) const {
  Rng rng(mix_seed(seed_, fnv1a(prompt)));
  Vector v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = rng.normal();
  return v / v.norm();
}

Vector ToyTextEncoder::encode(const std::vector<std::string>& prompts) const {
  if (prompts.empty()) throw InputError("prompt list is empty");
  Vector sum = Vector::Zero(dim_);
  for (const auto& p : prompts) sum += prompt_vector(p);
  const Vector mean = sum / static_cast<double>(prompts.size());
  const double norm = mean.norm();
  if (norm <= 1e-12) throw InputError("prompt vectors cancel to a zero embedding");
  return mean / norm;
}

std::uint64_t ToyTextEncoder::checksum() const {
  return mix_seed(fnv1a("toy-text"), mix_seed(seed_, static_cast<std::uint64_t>(dim_)));
}

void register_adapter(const std::string& name, AdapterFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

bool has_adapter(const std::string& name) {
  std::lock_guard lock(registry_mutex());
  return registry().count(name) > 0;
}

FrozenEncoders make_encoders(const BackboneConfig& config, const EncoderSource& source) {
  config.validate();
  if (source.kind == "toy") {
    return {std::make_shared<ToyVisionEncoder>(config),
            std::make_shared<ToyTextEncoder>(config.text_dim, mix_seed(config.seed, 0x7e47))};
  }
  if (source.kind != "adapter") throw ConfigError("unknown backbone.kind: " + source.kind);
  for (const auto& [key, path] : {std::pair{"backbone.weights", source.vision_weights},
                                      std::pair{"text_encoder.weights", source.text_weights}}) {
    if (path.empty()) throw AssetMissingError(std::string(key) + " is not set");
    if (!std::filesystem::exists(path)) {
      throw AssetMissingError("missing weight file for " + std::string(key) + ": " + path);
    }
  }
  AdapterFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(source.adapter);
    if (it == registry().end()) throw AssetMissingError("no encoder adapter registered as '" + source.adapter + "'");
    factory = it->second;
  }
  EncoderAdapter adapter = factory(config, source);
  return {std::make_shared<AdapterVisionEncoder>(config, adapter),
          std::make_shared<AdapterTextEncoder>(config.text_dim, adapter)};
}

TokenPyramid extract_token_pyramid(const Image& image, const VisionEncoder& encoder) {
  const auto& config = encoder.config();
  if (image.width != config.image_size || image.height != config.image_size) {
    throw ConfigError("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                      ", encoder expects " + std::to_string(config.image_size) + "x" +
                      std::to_string(config.image_size));
  }
  for (double v : image.pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("pixel values must lie in [0, 1]");
  }
  TokenPyramid pyramid = encoder.encode(image);
  check_pyramid(pyramid, config);
  return pyramid;
}

TokenPyramid toy_encode(const Image& image, const BackboneConfig& config) {
  return extract_token_pyramid(image, ToyVisionEncoder(config));
}

TextReference encode_text(const std::vector<std::string>& prompts, const TextEncoder& encoder) {
  if (prompts.empty()) throw InputError("prompt list is empty");
  TextReference ref{prompts, encoder.encode(prompts)};
  if (!ref.embedding.allFinite()) throw InputError("text embedding is not finite");
  return ref;
}

const std::vector<std::string>& default_prompts() {
  // Stand-in wording; the reference set for real runs is configured via `prompts`.
  static const std::vector<std::string> prompts{
      "a photo of a shadow",
      "a dark cast shadow on the ground",
      "the shadow region of the image",
  };
  return prompts;
}

void write_token_pyramid(const std::filesystem::path& path, const TokenPyramid& pyramid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("SVLTPYR1", 8);
  const auto k = static_cast<std::uint32_t>(pyramid.levels.size());
  const auto n = static_cast<std::uint32_t>(pyramid.shallow_patches.rows());
  const auto d = static_cast<std::uint32_t>(pyramid.shallow_patches.cols());
  put(out, k);
  put(out, n);
  put(out, d);
  for (const auto& level : pyramid.levels) {
    for (Eigen::Index i = 0; i < level.cls.size(); ++i) put(out, level.cls(i));
    put_row_major(out, level.patches);
  }
  put_row_major(out, pyramid.shallow_patches);
}

TokenPyramid read_token_pyramid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, "SVLTPYR1", path);
  const auto k = get<std::uint32_t>(in, path);
  const auto n = get<std::uint32_t>(in, path);
  const auto d = get<std::uint32_t>(in, path);
  TokenPyramid pyramid;
  for (std::uint32_t l = 0; l < k; ++l) {
    TokenLevel level;
    level.cls.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) level.cls(i) = get<double>(in, path);
    level.patches = get_row_major(in, n, d, path);
    pyramid.levels.push_back(std::move(level));
  }
  pyramid.shallow_patches = get_row_major(in, n, d, path);
  return pyramid;
}

void write_text_embedding(const std::filesystem::path& path, const Vector& embedding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("SVLTEXT1", 8);
  put(out, static_cast<std::uint32_t>(embedding.size()));
  for (Eigen::Index i = 0; i < embedding.size(); ++i) put(out, embedding(i));
}

Vector read_text_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, "SVLTEXT1", path);
  const auto d = get<std::uint32_t>(in, path);
  Vector e(d);
  for (std::uint32_t i = 0; i < d; ++i) e(i) = get<double>(in, path);
  return e;
}

}  // namespace svl
