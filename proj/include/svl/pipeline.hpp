// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "svl/backbone.hpp"
#include "svl/config.hpp"
#include "svl/dataset.hpp"
#include "svl/hardcase.hpp"
#include "svl/metrics.hpp"
#include "svl/model.hpp"

namespace svl {

/// Maps an image-sized probability map to another one of the same size.
using Postprocessor = std::function<Matrix(const Matrix&)>;

/// "none" (or empty) is the identity. Anything else is a command run as
/// `CMD <in.pfm> <out.pfm>` through the shell; it reads the probability map
/// and must write one of the same shape.
Postprocessor make_postprocessor(const std::string& command);

struct InferenceResult {
  Matrix probability;  // original image size
  Mask mask;
};

/// A trained detector: the run config it was trained with, its frozen
/// encoders, the encoded prompts and the trainable parameters.
class Detector {
 public:
  Detector(RunConfig config, const ModelParams& params);

  /// Rebuilds a detector from a checkpoint's config snapshot. When
  /// `expected` is given, every model-shaping key must agree with the
  /// snapshot or VersionError is raised.
  static Detector from_checkpoint(const std::filesystem::path& path, const RunConfig* expected = nullptr);

  const RunConfig& config() const noexcept { return config_; }
  const ModelParams& params() const noexcept { return params_; }
  const VisionEncoder& vision() const noexcept { return *encoders_.vision; }
  const TextReference& text() const noexcept { return text_; }

  /// Shadow probability at the image's own resolution, rounded to float32.
  Matrix probability(const Image& image) const;
  InferenceResult infer(const Image& image, const Postprocessor& postproc) const;

 private:
  RunConfig config_;
  FrozenEncoders encoders_;
  TextReference text_;
  ModelParams params_;
};

/// Throws VersionError naming the first model-shaping key that differs.
void check_compatible(const RunConfig& snapshot, const RunConfig& expected);

/// Runs the detector over every masked record at original resolution and
/// pools the confusion counts.
DatasetReport evaluate_detector(const Detector& detector, const std::vector<DatasetRecord>& records,
                                const Postprocessor& postproc, const EvalOptions& options);

/// Scores precomputed prediction masks `pred_dir/<id>.png` against the records.
DatasetReport evaluate_prediction_dir(const std::filesystem::path& pred_dir,
                                      const std::vector<DatasetRecord>& records,
                                      const EvalOptions& options);

HardCaseRanking hardcase_from_dataset(const std::vector<DatasetRecord>& records,
                                      const std::vector<double>& percentiles, double fraction);

/// Loads data.train_root, initializes from train.seed and runs fit, writing
/// into output.dir.
FitResult run_training(const RunConfig& config);

}  // namespace svl
