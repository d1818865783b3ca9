// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svl/image.hpp"
#include "svl/types.hpp"

namespace svl {

struct BackboneConfig {
  int image_size = 64;
  int patch_size = 8;
  int feature_dim = 32;
  int text_dim = 24;
  std::vector<int> selected_layers{1, 2, 3, 4};
  int shallow_layer = 0;
  std::uint64_t seed = 0;

  int grid_side() const noexcept { return image_size / patch_size; }
  int num_patches() const noexcept { return grid_side() * grid_side(); }
  int num_levels() const noexcept { return static_cast<int>(selected_layers.size()); }

  /// Throws ConfigError when the geometry or layer selection is inconsistent.
  void validate() const;
};

struct TokenLevel {
  Vector cls;      // D
  Matrix patches;  // N x D, patches in row-major grid order
};

struct TokenPyramid {
  std::vector<TokenLevel> levels;
  Matrix shallow_patches;  // N x D
};

struct TextReference {
  std::vector<std::string> prompts;
  Vector embedding;  // D_t
};

/// Frozen image encoder. Implementations expose no mutable state.
class VisionEncoder {
 public:
  virtual ~VisionEncoder() = default;
  virtual const BackboneConfig& config() const noexcept = 0;
  virtual TokenPyramid encode(const Image& image) const = 0;
  /// Hash over every frozen weight; unchanged for the encoder's lifetime.
  virtual std::uint64_t checksum() const = 0;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual int dim() const noexcept = 0;
  virtual Vector encode(const std::vector<std::string>& prompts) const = 0;
  virtual std::uint64_t checksum() const = 0;
};

/// Seeded, bias-free linear patch encoder for desk-scale runs.
///
/// Every layer index l gets its own patch map A_l : R^{p*p*3} -> R^D and
/// class-token map B_l : R^D -> R^D. A level's patch token is A_l applied to
/// the flattened patch block (row-major, RGB interleaved) and its class token
/// is B_l applied to the mean patch token.
class ToyVisionEncoder final : public VisionEncoder {
 public:
  explicit ToyVisionEncoder(BackboneConfig config);

  const BackboneConfig& config() const noexcept override { return config_; }
  TokenPyramid encode(const Image& image) const override;
  std::uint64_t checksum() const override;

 private:
  struct LayerWeights {
    Matrix patch_map;  // D x (p*p*3)
    Matrix cls_map;    // D x D
  };
  LayerWeights make_layer(int layer) const;
  TokenLevel encode_level(const Matrix& blocks, const LayerWeights& w) const;

  BackboneConfig config_;
  std::vector<LayerWeights> levels_;
  LayerWeights shallow_;
};

/// Hashes each prompt to a seeded unit vector; a prompt list maps to the
/// renormalized mean of its prompt vectors.
class ToyTextEncoder final : public TextEncoder {
 public:
  ToyTextEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

  int dim() const noexcept override { return dim_; }
  Vector encode(const std::vector<std::string>& prompts) const override;
  std::uint64_t checksum() const override;

  Vector prompt_vector(const std::string& prompt) const;

 private:
  int dim_;
  std::uint64_t seed_;
};

/// Contract for real pretrained encoders. Weight loading, preprocessing and
/// resizing live behind these callables.
struct EncoderAdapter {
  std::function<TokenPyramid(const Image&)> vision;
  std::function<Vector(const std::vector<std::string>&)> text;
  /// Optional: fingerprint of the loaded weights, reported as the checksum.
  std::function<std::uint64_t()> fingerprint;
};

struct EncoderSource {
  std::string kind = "toy";            // toy | adapter
  std::string adapter = "exec";        // registered adapter name
  std::string vision_weights;          // backbone.weights
  std::string text_weights;            // text_encoder.weights
  std::string command;                 // only used by the exec adapter
};

using AdapterFactory = std::function<EncoderAdapter(const BackboneConfig&, const EncoderSource&)>;

/// Registers a named adapter. Re-registering a name replaces the factory.
void register_adapter(const std::string& name, AdapterFactory factory);
bool has_adapter(const std::string& name);

struct FrozenEncoders {
  std::shared_ptr<const VisionEncoder> vision;
  std::shared_ptr<const TextEncoder> text;
};

/// Builds the encoder pair. For adapters, both weight files must exist;
/// otherwise AssetMissingError names the missing path.
FrozenEncoders make_encoders(const BackboneConfig& config, const EncoderSource& source);

/// Validates the image against the encoder's config and the pyramid it returns.
TokenPyramid extract_token_pyramid(const Image& image, const VisionEncoder& encoder);
TokenPyramid toy_encode(const Image& image, const BackboneConfig& config);
TextReference encode_text(const std::vector<std::string>& prompts, const TextEncoder& encoder);

// Exchange formats for the exec adapter (little-endian):
//   token pyramid: "SVLTPYR1", u32 K, u32 N, u32 D, then per level D doubles
//   (class token) and N*D doubles (patch tokens, row-major), then N*D doubles
//   for the shallow patch grid.
//   text embedding: "SVLTEXT1", u32 D_t, then D_t doubles.
void write_token_pyramid(const std::filesystem::path& path, const TokenPyramid& pyramid);
TokenPyramid read_token_pyramid(const std::filesystem::path& path);
void write_text_embedding(const std::filesystem::path& path, const Vector& embedding);
Vector read_text_embedding(const std::filesystem::path& path);

/// Placeholder shadow prompts shipped with the default configuration.
const std::vector<std::string>& default_prompts();

}  // namespace svl
