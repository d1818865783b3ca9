// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "svl/checkpoint.hpp"
#include "svl/error.hpp"
#include "svl/objectives.hpp"
#include "svl/rng.hpp"

namespace svl {
namespace fs = std::filesystem;
namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

fs::path scratch_dir() {
  static std::uint64_t counter = 0;
  const std::uint64_t tag = mix_seed(static_cast<std::uint64_t>(::getpid()), ++counter);
  fs::path dir = fs::temp_directory_path() / ("svl_postproc_" + std::to_string(tag));
  fs::create_directories(dir);
  return dir;
}

Matrix round_to_float(const Matrix& m) {
  return m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

}  // namespace

Postprocessor make_postprocessor(const std::string& command) {
  if (command.empty() || command == "none") {
    return [](const Matrix& p) { return p; };
  }
  return [command](const Matrix& p) {
    const fs::path dir = scratch_dir();
    const fs::path in = dir / "in.pfm";
    const fs::path out = dir / "out.pfm";
    save_pfm(in, p);
    const std::string cmd = command + " " + shell_quote(in.string()) + " " + shell_quote(out.string());
    const int status = std::system(cmd.c_str());
    if (status != 0) {
      fs::remove_all(dir);
      throw IoError("postproc command failed with status " + std::to_string(status) + ": " + command);
    }
    Matrix result;
    try {
      result = load_pfm(out);
    } catch (...) {
      fs::remove_all(dir);
      throw;
    }
    fs::remove_all(dir);
    if (result.rows() != p.rows() || result.cols() != p.cols()) {
      throw InputError("postproc output shape differs from its input");
    }
    if (!result.allFinite()) throw NonFiniteError("postproc output contains non-finite values");
    return result;
  };
}

Detector::Detector(RunConfig config, const ModelParams& params)
    : config_(std::move(config)), params_(params) {
  encoders_ = make_encoders(config_.backbone, config_.encoders);
  text_ = encode_text(config_.prompts, *encoders_.text);
}

void check_compatible(const RunConfig& snapshot, const RunConfig& expected) {
  const auto& a = snapshot.backbone;
  const auto& b = expected.backbone;
  auto fail = [](const char* key) {
    throw VersionError(std::string("checkpoint was trained with a different ") + key);
  };
  if (a.image_size != b.image_size) fail("backbone.image_size");
  if (a.patch_size != b.patch_size) fail("backbone.patch_size");
  if (a.feature_dim != b.feature_dim) fail("backbone.feature_dim");
  if (a.text_dim != b.text_dim) fail("backbone.text_dim");
  if (a.selected_layers != b.selected_layers) fail("backbone.selected_layers");
  if (a.shallow_layer != b.shallow_layer) fail("backbone.shallow_layer");
  if (a.seed != b.seed) fail("backbone.seed");
  if (snapshot.encoders.kind != expected.encoders.kind) fail("backbone.kind");
  if (snapshot.head_hidden != expected.head_hidden) fail("head.hidden");
  if (snapshot.prompts != expected.prompts) fail("prompts");
}

Detector Detector::from_checkpoint(const fs::path& path, const RunConfig* expected) {
  const Checkpoint ckpt = read_checkpoint(path);
  RunConfig snapshot;
  try {
    snapshot = parse_run_config(ckpt.config_text, /*check_paths=*/false);
  } catch (const ConfigError& e) {
    throw VersionError(std::string("checkpoint config snapshot is unreadable: ") + e.what());
  }
  if (expected) check_compatible(snapshot, *expected);
  TrainState state = TrainState::initialize(snapshot.backbone, snapshot.head_hidden, snapshot.train.seed);
  restore_state(ckpt, state);
  return Detector(std::move(snapshot), state.params);
}

Matrix Detector::probability(const Image& image) const {
  const int size = config_.backbone.image_size;
  const Image resized = (image.width == size && image.height == size)
                            ? image
                            : resize_bilinear(image, size, size);
  const TokenPyramid pyramid = extract_token_pyramid(resized, *encoders_.vision);
  const PredictionBundle bundle = forward(params_, pyramid, text_, size);
  Matrix prob = bundle.final_logits.unaryExpr([](double x) { return sigmoid(x); });
  if (image.width != size || image.height != size) prob = resize_bilinear(prob, image.height, image.width);
  return round_to_float(prob);
}

InferenceResult Detector::infer(const Image& image, const Postprocessor& postproc) const {
  InferenceResult out;
  out.probability = postproc(probability(image));
  out.mask = threshold_map(out.probability, config_.threshold);
  return out;
}

DatasetReport evaluate_detector(const Detector& detector, const std::vector<DatasetRecord>& records,
                                const Postprocessor& postproc, const EvalOptions& options) {
  std::vector<Mask> preds, gts;
  std::vector<Image> images;
  for (const auto& rec : records) {
    if (!rec.mask_path) continue;
    LoadedRecord loaded = load_record(rec);
    preds.push_back(detector.infer(loaded.image, postproc).mask);
    gts.push_back(std::move(*loaded.mask));
    if (options.dark_fraction) images.push_back(std::move(loaded.image));
  }
  if (gts.empty()) throw InputError("no records with masks to evaluate");
  return evaluate_dataset(preds, gts, images, options);
}

DatasetReport evaluate_prediction_dir(const fs::path& pred_dir, const std::vector<DatasetRecord>& records,
                                      const EvalOptions& options) {
  std::vector<Mask> preds, gts;
  std::vector<Image> images;
  for (const auto& rec : records) {
    if (!rec.mask_path) continue;
    const fs::path pred_path = pred_dir / (rec.id + ".png");
    if (!fs::exists(pred_path)) throw InputError("missing prediction " + pred_path.string());
    LoadedRecord loaded = load_record(rec);
    Mask pred = load_mask(pred_path);
    if (pred.width != loaded.mask->width || pred.height != loaded.mask->height) {
      throw InputError("prediction size does not match mask for " + rec.id);
    }
    preds.push_back(std::move(pred));
    gts.push_back(std::move(*loaded.mask));
    if (options.dark_fraction) images.push_back(std::move(loaded.image));
  }
  if (gts.empty()) throw InputError("no records with masks to evaluate");
  return evaluate_dataset(preds, gts, images, options);
}

HardCaseRanking hardcase_from_dataset(const std::vector<DatasetRecord>& records,
                                      const std::vector<double>& percentiles, double fraction) {
  std::vector<HardCaseImage> images;
  images.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.mask_path) throw InputError("hard-case selection needs a mask for " + rec.id);
    LoadedRecord loaded = load_record(rec);
    images.push_back({rec.id, brightness(loaded.image), std::move(*loaded.mask)});
  }
  return rank_and_select(images, percentiles, fraction);
}

FitResult run_training(const RunConfig& config) {
  if (config.train_root.empty()) throw ConfigError("data.train_root is required for training");
  config.validate(/*check_paths=*/true);
  auto records = load_dataset(config.train_root, /*require_masks=*/true);
  if (records.empty()) throw InputError("training set is empty: " + config.train_root);
  const std::vector<Sample> samples = load_samples(records, config.backbone.image_size);

  const FrozenEncoders encoders = make_encoders(config.backbone, config.encoders);
  const TextReference text = encode_text(config.prompts, *encoders.text);
  TrainContext ctx{*encoders.vision, text, config.loss, config.train};

  const std::string config_text = to_config_text(config);
  FitOptions options;
  options.output_dir = config.output_dir;
  options.config_text = config_text;
  const std::int64_t every = std::max<std::int64_t>(1, config.train.total_iters / 20);
  options.on_step = [every](const LossLogEntry& e) {
    if (e.iter % every == 0) {
      spdlog::info("iter {} lr {:.3e} total {:.5f} final {:.5f}", e.iter, e.lr, e.report.total,
                   e.report.l_final);
    }
  };
  fs::create_directories(config.output_dir);
  {
    std::ofstream cfg(fs::path(config.output_dir) / "config.txt");
    cfg << config_text;
  }
  TrainState init = TrainState::initialize(config.backbone, config.head_hidden, config.train.seed);
  return fit(ctx, samples, std::move(init), options);
}

}  // namespace svl
