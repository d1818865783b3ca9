// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "svl/error.hpp"

namespace svl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int<int>(key, trim(item)));
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::string> split_prompts(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, '|')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_prompts(const std::vector<std::string>& prompts) {
  std::string out;
  for (std::size_t i = 0; i < prompts.size(); ++i) out += (i ? " | " : "") + prompts[i];
  return out;
}

struct KeyHandler {
  ConfigKeyDoc doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SVL_INT_KEY(name, field, type, desc)                                        \
  KeyHandler {                                                                      \
    {name, desc}, [](RunConfig& c, const std::string& v) { c.field = parse_int<type>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                  \
  }
#define SVL_DOUBLE_KEY(name, field, desc)                                           \
  KeyHandler {                                                                      \
    {name, desc}, [](RunConfig& c, const std::string& v) { c.field = parse_double(name, v); }, \
        [](const RunConfig& c) { return fmt_double(c.field); }                      \
  }
#define SVL_STRING_KEY(name, field, desc)                                           \
  KeyHandler {                                                                      \
    {name, desc}, [](RunConfig& c, const std::string& v) { c.field = v; },          \
        [](const RunConfig& c) { return c.field; }                                  \
  }

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table{
      KeyHandler{{"preset", "defaults to start from: toy | real"},
                 [](RunConfig& c, const std::string& v) {
                   if (v == "toy") c = RunConfig::toy();
                   else if (v == "real") c = RunConfig::real();
                   else throw ConfigError("preset: expected toy or real, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return c.preset; }},
      SVL_STRING_KEY("backbone.kind", encoders.kind, "toy | adapter"),
      SVL_STRING_KEY("backbone.adapter", encoders.adapter, "registered adapter name (built-in: exec)"),
      SVL_STRING_KEY("backbone.adapter_command", encoders.command, "executable used by the exec adapter"),
      SVL_STRING_KEY("backbone.weights", encoders.vision_weights, "image encoder weight file"),
      SVL_STRING_KEY("text_encoder.weights", encoders.text_weights, "text encoder weight file"),
      SVL_INT_KEY("backbone.image_size", backbone.image_size, int, "square model input size in pixels"),
      SVL_INT_KEY("backbone.patch_size", backbone.patch_size, int, "patch size in pixels"),
      SVL_INT_KEY("backbone.feature_dim", backbone.feature_dim, int, "visual token width D"),
      SVL_INT_KEY("backbone.text_dim", backbone.text_dim, int, "text embedding width D_t"),
      KeyHandler{{"backbone.selected_layers", "comma-separated, strictly increasing layer indices"},
                 [](RunConfig& c, const std::string& v) {
                   c.backbone.selected_layers = parse_int_list("backbone.selected_layers", v);
                 },
                 [](const RunConfig& c) { return join_ints(c.backbone.selected_layers); }},
      SVL_INT_KEY("backbone.shallow_layer", backbone.shallow_layer, int, "layer feeding the skip connection"),
      SVL_INT_KEY("backbone.seed", backbone.seed, std::uint64_t, "toy encoder seed"),
      SVL_INT_KEY("backbone.frozen_params", frozen_vision_params, std::uint64_t,
                  "frozen image encoder parameter count"),
      SVL_INT_KEY("text_encoder.frozen_params", frozen_text_params, std::uint64_t,
                  "frozen text encoder parameter count"),
      SVL_INT_KEY("head.hidden", head_hidden, int, "refinement head hidden width"),
      SVL_DOUBLE_KEY("loss.beta_back", loss.beta_back, "global BCE scale"),
      SVL_DOUBLE_KEY("loss.eps", loss.eps, "log stabilizer"),
      SVL_DOUBLE_KEY("loss.delta", loss.delta, "ratio-loss weight offset"),
      SVL_DOUBLE_KEY("loss.kappa", loss.kappa, "ratio-loss weight exponent"),
      SVL_DOUBLE_KEY("loss.lambda_ratio", loss.lambda_ratio, "ratio-loss coefficient"),
      SVL_DOUBLE_KEY("loss.smooth_l1_beta", loss.smooth_l1_beta, "Smooth-L1 transition point"),
      SVL_DOUBLE_KEY("loss.omega_min", loss.omega_min, "class-balance weight lower clamp"),
      SVL_DOUBLE_KEY("loss.omega_max", loss.omega_max, "class-balance weight upper clamp"),
      SVL_INT_KEY("train.total_iters", train.total_iters, std::int64_t, "iteration budget"),
      SVL_INT_KEY("train.batch_size", train.batch_size, int, "images per step"),
      SVL_DOUBLE_KEY("train.base_lr", train.base_lr, "initial learning rate"),
      SVL_DOUBLE_KEY("train.lr_power", train.lr_power, "polynomial decay power"),
      SVL_DOUBLE_KEY("train.momentum", train.momentum, "SGD momentum"),
      SVL_DOUBLE_KEY("train.weight_decay", train.weight_decay, "L2 weight decay"),
      SVL_INT_KEY("train.seed", train.seed, std::uint64_t, "initialization and sampling seed"),
      SVL_INT_KEY("train.checkpoint_every", train.checkpoint_every, std::int64_t,
                  "periodic checkpoint interval, 0 disables"),
      SVL_STRING_KEY("data.train_root", train_root, "training dataset root (images/, masks/)"),
      SVL_STRING_KEY("data.eval_root", eval_root, "evaluation dataset root"),
      SVL_STRING_KEY("output.dir", output_dir, "directory for checkpoints and logs"),
      SVL_STRING_KEY("postproc", postproc, "none, or a command run as CMD <in.pfm> <out.pfm>"),
      SVL_DOUBLE_KEY("infer.threshold", threshold, "probability threshold for the binary mask"),
      KeyHandler{{"prompts", "shadow prompts separated by '|'"},
                 [](RunConfig& c, const std::string& v) { c.prompts = split_prompts(v); },
                 [](const RunConfig& c) { return join_prompts(c.prompts); }},
  };
  return table;
}

#undef SVL_INT_KEY
#undef SVL_DOUBLE_KEY
#undef SVL_STRING_KEY

const KeyHandler& find_handler(const std::string& key) {
  for (const auto& h : handlers()) {
    if (h.doc.key == key) return h;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::pair<std::string, std::string> split_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + line + "'");
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

}  // namespace

RunConfig RunConfig::toy() {
  RunConfig c;
  c.preset = "toy";
  c.prompts = default_prompts();
  c.loss.total_iters = c.train.total_iters;
  return c;
}

RunConfig RunConfig::real() {
  RunConfig c;
  c.preset = "real";
  c.backbone.image_size = 512;
  c.backbone.patch_size = 16;
  c.backbone.feature_dim = 1024;
  c.backbone.text_dim = 768;
  c.backbone.selected_layers = {5, 11, 17, 23};
  c.backbone.shallow_layer = 2;
  c.encoders.kind = "adapter";
  // Parameter counts of the frozen ViT-L/16 image encoder and the ViT-L/14
  // CLIP text tower.
  c.frozen_vision_params = 300'000'000;
  c.frozen_text_params = 123'000'000;
  c.head_hidden = 64;
  c.train.total_iters = 10'000;
  c.train.batch_size = 16;
  c.train.checkpoint_every = 1'000;
  c.loss.total_iters = c.train.total_iters;
  c.prompts = default_prompts();
  return c;
}

void RunConfig::validate(bool check_paths) const {
  backbone.validate();
  loss.validate();
  train.validate();
  if (head_hidden <= 0) throw ConfigError("head.hidden must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("infer.threshold must lie in (0, 1)");
  if (prompts.empty()) throw ConfigError("prompts must list at least one prompt");
  if (encoders.kind != "toy" && encoders.kind != "adapter") {
    throw ConfigError("backbone.kind must be toy or adapter");
  }
  if (!check_paths) return;
  for (const auto& [key, path] : {std::pair{"data.train_root", train_root}, std::pair{"data.eval_root", eval_root}}) {
    if (!path.empty() && !std::filesystem::exists(path)) {
      throw ConfigError(std::string(key) + " does not exist: " + path);
    }
  }
  if (encoders.kind == "adapter") {
    for (const auto& [key, path] : {std::pair{"backbone.weights", encoders.vision_weights},
                                        std::pair{"text_encoder.weights", encoders.text_weights}}) {
      if (path.empty() || !std::filesystem::exists(path)) {
        throw AssetMissingError("missing weight file for " + std::string(key) + ": " + path);
      }
    }
  }
}

const std::vector<ConfigKeyDoc>& config_keys() {
  static const std::vector<ConfigKeyDoc> keys = [] {
    std::vector<ConfigKeyDoc> out;
    for (const auto& h : handlers()) out.push_back(h.doc);
    return out;
  }();
  return keys;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto [key, value] = split_assignment(assignment);
  find_handler(key).set(config, value);
  config.loss.total_iters = config.train.total_iters;
}

RunConfig parse_run_config(const std::string& text, bool check_paths) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      entries.push_back(split_assignment(line));
      find_handler(entries.back().first);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }

  RunConfig config = RunConfig::toy();
  for (const auto& [key, value] : entries) {
    if (key == "preset") find_handler(key).set(config, value);
  }
  for (const auto& [key, value] : entries) {
    if (key != "preset") find_handler(key).set(config, value);
  }
  config.loss.total_iters = config.train.total_iters;
  config.validate(check_paths);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), check_paths);
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& h : handlers()) out += h.doc.key + " = " + h.get(config) + "\n";
  return out;
}

}  // namespace svl
