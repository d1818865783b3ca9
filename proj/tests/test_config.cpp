// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "synthetic.hpp"
#include "svl/config.hpp"
#include "svl/error.hpp"

namespace svl {
namespace {

TEST(RunConfig, ToyDefaults) {
  const RunConfig c = RunConfig::toy();
  EXPECT_EQ(c.backbone.image_size, 64);
  EXPECT_EQ(c.backbone.patch_size, 8);
  EXPECT_EQ(c.backbone.selected_layers, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(c.train.total_iters, 500);
  EXPECT_EQ(c.train.batch_size, 4);
  EXPECT_EQ(c.head_hidden, 16);
  EXPECT_FALSE(c.prompts.empty());
  EXPECT_NO_THROW(c.validate(false));
}

TEST(RunConfig, RealDefaults) {
  const RunConfig c = RunConfig::real();
  EXPECT_EQ(c.backbone.feature_dim, 1024);
  EXPECT_EQ(c.backbone.text_dim, 768);
  EXPECT_EQ(c.backbone.selected_layers, (std::vector<int>{5, 11, 17, 23}));
  EXPECT_EQ(c.backbone.shallow_layer, 2);
  EXPECT_EQ(c.train.total_iters, 10000);
  EXPECT_EQ(c.train.batch_size, 16);
  EXPECT_EQ(c.train.base_lr, 5e-3);
  EXPECT_EQ(c.head_hidden, 64);
  EXPECT_EQ(c.encoders.kind, "adapter");
  EXPECT_GT(c.frozen_params(), 0u);
}

TEST(ParseRunConfig, KeysCommentsAndPreset) {
  const RunConfig c = parse_run_config(
      "# comment line\n"
      "train.total_iters = 7   # trailing comment\n"
      "preset = toy\n"
      "backbone.selected_layers = 2, 4\n"
      "prompts = dark region | cast shadow\n"
      "loss.kappa=0.75\n",
      false);
  EXPECT_EQ(c.train.total_iters, 7);
  EXPECT_EQ(c.loss.total_iters, 7);
  EXPECT_EQ(c.backbone.selected_layers, (std::vector<int>{2, 4}));
  EXPECT_EQ(c.prompts, (std::vector<std::string>{"dark region", "cast shadow"}));
  EXPECT_EQ(c.loss.kappa, 0.75);
}

TEST(ParseRunConfig, UnknownKeyRejected) {
  try {
    parse_run_config("train.total_iters = 5\ntrain.learning_rate = 0.1\n", false);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.learning_rate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseRunConfig, TypedValues) {
  EXPECT_THROW(parse_run_config("train.batch_size = four\n", false), ConfigError);
  EXPECT_THROW(parse_run_config("train.base_lr = 1e-3x\n", false), ConfigError);
  EXPECT_THROW(parse_run_config("preset = huge\n", false), ConfigError);
  EXPECT_THROW(parse_run_config("head.hidden = 0\n", false), ConfigError);
  EXPECT_THROW(parse_run_config("just a line\n", false), ConfigError);
}

TEST(ParseRunConfig, PathsMustExist) {
  EXPECT_THROW(parse_run_config("data.train_root = /no/such/dir\n", true), ConfigError);
  EXPECT_NO_THROW(parse_run_config("data.train_root = /no/such/dir\n", false));
  EXPECT_THROW(parse_run_config("preset = real\n", true), AssetMissingError);
  const auto dir = testing::temp_dir("config_paths");
  EXPECT_NO_THROW(parse_run_config("data.train_root = " + dir.string() + "\n", true));
}

TEST(ConfigText, RoundTrip) {
  RunConfig c = RunConfig::toy();
  c.train.base_lr = 0.1 + 0.2;
  c.loss.delta = 1.0 / 3.0;
  c.prompts = {"a", "b c"};
  c.output_dir = "/tmp/x";
  const std::string text = to_config_text(c);
  const RunConfig back = parse_run_config(text, false);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(back.train.base_lr, c.train.base_lr);
  EXPECT_EQ(back.loss.delta, c.loss.delta);
  EXPECT_EQ(back.prompts, c.prompts);
}

TEST(ConfigText, ListsEveryKey) {
  const std::string text = to_config_text(RunConfig::toy());
  std::set<std::string> names;
  for (const auto& k : config_keys()) {
    EXPECT_TRUE(names.insert(k.key).second) << "duplicate key " << k.key;
    EXPECT_FALSE(k.description.empty()) << k.key;
    EXPECT_NE(text.find(k.key + " = "), std::string::npos) << k.key;
  }
}

TEST(ApplyOverride, SetsValue) {
  RunConfig c = RunConfig::toy();
  apply_override(c, "train.total_iters=0");
  EXPECT_EQ(c.train.total_iters, 0);
  EXPECT_EQ(c.loss.total_iters, 0);
  EXPECT_THROW(apply_override(c, "nope=1"), ConfigError);
}

TEST(LoadRunConfig, MissingFile) {
  EXPECT_THROW(load_run_config("/no/such/config.txt"), ConfigError);
}

}  // namespace
}  // namespace svl
