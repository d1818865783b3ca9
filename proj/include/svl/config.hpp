// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svl/backbone.hpp"
#include "svl/objectives.hpp"
#include "svl/trainer.hpp"

namespace svl {

struct RunConfig {
  std::string preset = "toy";
  BackboneConfig backbone;
  EncoderSource encoders;
  std::uint64_t frozen_vision_params = 0;
  std::uint64_t frozen_text_params = 0;
  int head_hidden = 16;
  LossConfig loss;
  TrainConfig train;
  std::string train_root;
  std::string eval_root;
  std::string output_dir = "runs/default";
  std::string postproc = "none";
  double threshold = 0.5;
  std::vector<std::string> prompts;

  /// Desk-scale defaults: toy encoder, 64 px images, 500 iterations.
  static RunConfig toy();
  /// Full-size defaults for a ViT-L image encoder paired with a 768-wide
  /// text encoder, loaded through an adapter.
  static RunConfig real();

  std::uint64_t frozen_params() const noexcept { return frozen_vision_params + frozen_text_params; }

  /// Range checks; with `check_paths` also requires referenced paths to exist.
  void validate(bool check_paths) const;
};

struct ConfigKeyDoc {
  std::string key;
  std::string description;
};

/// Every accepted key, in file order.
const std::vector<ConfigKeyDoc>& config_keys();

/// Parses `key = value` lines; `#` starts a comment. A `preset` line selects
/// the defaults the remaining keys override. Unknown keys are errors.
RunConfig parse_run_config(const std::string& text, bool check_paths = true);
RunConfig load_run_config(const std::filesystem::path& path, bool check_paths = true);

/// Applies one `key=value` override.
void apply_override(RunConfig& config, const std::string& assignment);

/// Canonical text form listing every key; parse_run_config inverts it.
std::string to_config_text(const RunConfig& config);

}  // namespace svl
