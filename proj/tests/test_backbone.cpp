// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "synthetic.hpp"
#include "svl/backbone.hpp"
#include "svl/error.hpp"

namespace svl {
namespace {

Image constant_image(int size, double v) {
  Image img(size, size);
  std::fill(img.pixels.begin(), img.pixels.end(), v);
  return img;
}

bool same_pyramid(const TokenPyramid& a, const TokenPyramid& b) {
  if (a.levels.size() != b.levels.size()) return false;
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    if (a.levels[l].cls != b.levels[l].cls || a.levels[l].patches != b.levels[l].patches) return false;
  }
  return a.shallow_patches == b.shallow_patches;
}

TEST(BackboneConfig, Validation) {
  BackboneConfig c;
  EXPECT_NO_THROW(c.validate());
  c.image_size = 60;
  EXPECT_THROW(c.validate(), ConfigError);
  c = BackboneConfig{};
  c.selected_layers = {1, 1, 3};
  EXPECT_THROW(c.validate(), ConfigError);
  c = BackboneConfig{};
  c.shallow_layer = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ToyEncoder, PyramidShapes) {
  BackboneConfig c;
  Rng rng(1);
  const TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), c);
  ASSERT_EQ(p.levels.size(), 4u);
  for (const auto& level : p.levels) {
    EXPECT_EQ(level.cls.size(), 32);
    EXPECT_EQ(level.patches.rows(), 64);
    EXPECT_EQ(level.patches.cols(), 32);
  }
  EXPECT_EQ(p.shallow_patches.rows(), 64);
  EXPECT_EQ(p.shallow_patches.cols(), 32);
}

TEST(ToyEncoder, Deterministic) {
  BackboneConfig c;
  Rng rng(2);
  const Image img = testing::random_image(64, 64, rng);
  EXPECT_TRUE(same_pyramid(toy_encode(img, c), toy_encode(img, c)));
  EXPECT_EQ(ToyVisionEncoder(c).checksum(), ToyVisionEncoder(c).checksum());
}

TEST(ToyEncoder, ZerosAndOnesDiffer) {
  BackboneConfig c;
  EXPECT_FALSE(same_pyramid(toy_encode(constant_image(64, 0.0), c), toy_encode(constant_image(64, 1.0), c)));
}

TEST(ToyEncoder, ConstantImageGivesIdenticalTokens) {
  BackboneConfig c;
  const TokenPyramid p = toy_encode(constant_image(64, 0.5), c);
  for (const auto& level : p.levels) {
    for (int i = 1; i < level.patches.rows(); ++i) {
      EXPECT_EQ(level.patches.row(i), level.patches.row(0));
    }
  }
}

TEST(ToyEncoder, SeedChangesPyramid) {
  BackboneConfig a, b;
  b.seed = 1;
  Rng rng(3);
  const Image img = testing::random_image(64, 64, rng);
  EXPECT_FALSE(same_pyramid(toy_encode(img, a), toy_encode(img, b)));
  EXPECT_NE(ToyVisionEncoder(a).checksum(), ToyVisionEncoder(b).checksum());
}

TEST(ToyEncoder, LinearInIntensity) {
  BackboneConfig c;
  const TokenPyramid lo = toy_encode(constant_image(64, 0.2), c);
  const TokenPyramid hi = toy_encode(constant_image(64, 0.4), c);
  for (std::size_t l = 0; l < lo.levels.size(); ++l) {
    EXPECT_LE((hi.levels[l].patches - 2.0 * lo.levels[l].patches).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((hi.levels[l].cls - 2.0 * lo.levels[l].cls).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ToyEncoder, ClsIsMappedMeanPatch) {
  BackboneConfig c;
  Rng rng(4);
  const Image img = testing::random_image(64, 64, rng);
  const TokenPyramid a = toy_encode(img, c);
  // Linearity of the mean: cls(img) is cls_map * mean(patches). Averaging two
  // images must average their cls tokens.
  const Image img2 = testing::random_image(64, 64, rng);
  Image mid(64, 64);
  for (std::size_t i = 0; i < mid.pixels.size(); ++i) mid.pixels[i] = 0.5 * (img.pixels[i] + img2.pixels[i]);
  const TokenPyramid b = toy_encode(img2, c);
  const TokenPyramid m = toy_encode(mid, c);
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    EXPECT_LE((m.levels[l].cls - 0.5 * (a.levels[l].cls + b.levels[l].cls)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ToyEncoder, LevelsUseDistinctWeights) {
  BackboneConfig c;
  Rng rng(5);
  const TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), c);
  for (std::size_t l = 1; l < p.levels.size(); ++l) EXPECT_NE(p.levels[l].patches, p.levels[0].patches);
  EXPECT_NE(p.shallow_patches, p.levels[0].patches);
}

TEST(ExtractTokenPyramid, RejectsWrongSize) {
  BackboneConfig c;
  ToyVisionEncoder enc(c);
  EXPECT_THROW(extract_token_pyramid(constant_image(32, 0.5), enc), ConfigError);
}

TEST(ExtractTokenPyramid, RejectsOutOfRangePixels) {
  BackboneConfig c;
  ToyVisionEncoder enc(c);
  Image img = constant_image(64, 0.5);
  img.pixels[7] = 1.5;
  EXPECT_THROW(extract_token_pyramid(img, enc), InputError);
}

TEST(TextEncoder, Deterministic) {
  ToyTextEncoder enc(24, 7);
  EXPECT_EQ(enc.encode({"shadow"}), enc.encode({"shadow"}));
  EXPECT_NEAR(enc.encode({"shadow"}).norm(), 1.0, 1e-12);
}

TEST(TextEncoder, DuplicatePromptIsIdempotent) {
  ToyTextEncoder enc(24, 7);
  EXPECT_LE((enc.encode({"a", "a"}) - enc.encode({"a"})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TextEncoder, EnsembleIsRenormalizedMean) {
  ToyTextEncoder enc(24, 7);
  const Vector ea = enc.prompt_vector("a");
  const Vector eb = enc.prompt_vector("b");
  const Vector mean = 0.5 * (ea + eb);
  const Vector expected = mean / mean.norm();
  const Vector got = enc.encode({"a", "b"});
  EXPECT_NEAR(got.norm(), 1.0, 1e-12);
  EXPECT_LE((got - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TextEncoder, EmptyPromptListRejected) {
  ToyTextEncoder enc(24, 7);
  EXPECT_THROW(enc.encode({}), InputError);
  EXPECT_THROW(encode_text({}, enc), InputError);
}

TEST(Adapters, MissingWeightsNamed) {
  BackboneConfig c;
  EncoderSource src;
  src.kind = "adapter";
  src.vision_weights = "/nonexistent/vitl16.bin";
  src.text_weights = "/nonexistent/clip_text.bin";
  try {
    make_encoders(c, src);
    FAIL() << "expected AssetMissingError";
  } catch (const AssetMissingError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/vitl16.bin"), std::string::npos);
  }
}

TEST(Adapters, RegisteredAdapterIsUsed) {
  BackboneConfig c;
  const auto dir = testing::temp_dir("adapter_weights");
  std::ofstream(dir / "v.bin") << "x";
  std::ofstream(dir / "t.bin") << "x";
  register_adapter("test_toy", [](const BackboneConfig& cfg, const EncoderSource&) {
    auto toy = std::make_shared<ToyVisionEncoder>(cfg);
    auto text = std::make_shared<ToyTextEncoder>(cfg.text_dim, 3);
    return EncoderAdapter{[toy](const Image& im) { return toy->encode(im); },
                          [text](const std::vector<std::string>& p) { return text->encode(p); },
                          [] { return std::uint64_t{42}; }};
  });
  EXPECT_TRUE(has_adapter("test_toy"));
  EncoderSource src;
  src.kind = "adapter";
  src.adapter = "test_toy";
  src.vision_weights = (dir / "v.bin").string();
  src.text_weights = (dir / "t.bin").string();
  const FrozenEncoders enc = make_encoders(c, src);
  EXPECT_EQ(enc.vision->checksum(), 42u);
  Rng rng(6);
  const Image img = testing::random_image(64, 64, rng);
  EXPECT_TRUE(same_pyramid(extract_token_pyramid(img, *enc.vision), toy_encode(img, c)));
  src.adapter = "not_registered";
  EXPECT_THROW(make_encoders(c, src), AssetMissingError);
}

TEST(ExchangeFormats, RoundTrip) {
  BackboneConfig c;
  Rng rng(7);
  const TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), c);
  const auto dir = testing::temp_dir("exchange");
  write_token_pyramid(dir / "p.bin", p);
  EXPECT_TRUE(same_pyramid(read_token_pyramid(dir / "p.bin"), p));
  const Vector t = ToyTextEncoder(24, 1).encode({"x"});
  write_text_embedding(dir / "t.bin", t);
  EXPECT_EQ(read_text_embedding(dir / "t.bin"), t);
}

}  // namespace
}  // namespace svl

namespace svl {
namespace {

TEST(Adapters, ExecAdapterRoundTrip) {
  BackboneConfig c;
  const auto dir = testing::temp_dir("exec_adapter");
  std::ofstream(dir / "vision.txt") << "4 64 32";
  std::ofstream(dir / "text.txt") << "24";
  EncoderSource src;
  src.kind = "adapter";
  src.adapter = "exec";
  src.vision_weights = (dir / "vision.txt").string();
  src.text_weights = (dir / "text.txt").string();
  src.command = std::string("python3 ") + SVL_FIXTURE_DIR + "/stub_adapter.py";
  const FrozenEncoders enc = make_encoders(c, src);
  Image img(64, 64);
  std::fill(img.pixels.begin(), img.pixels.end(), 0.5);
  const TokenPyramid p = extract_token_pyramid(img, *enc.vision);
  ASSERT_EQ(p.levels.size(), 4u);
  EXPECT_NEAR(p.levels[0].cls(0), 0.5 * 64 * 64 * 3 / 64.0, 1e-9);
  EXPECT_EQ(p.levels[2].patches(8, 2), 1.0 + 2.0 + 1.0);
  const TextReference t = encode_text({"a", "b"}, *enc.text);
  EXPECT_EQ(t.embedding.size(), 24);
}

}  // namespace
}  // namespace svl
