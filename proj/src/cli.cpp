// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/cli.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svl/checkpoint.hpp"
#include "svl/config.hpp"
#include "svl/dataset.hpp"
#include "svl/error.hpp"
#include "svl/hardcase.hpp"
#include "svl/metrics.hpp"
#include "svl/pipeline.hpp"

namespace svl {
namespace fs = std::filesystem;
namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<double> parse_percentiles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad percentile list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty percentile list");
  return out;
}

void print_tables(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << format_ber_table(reports);
  const MetricReport* all = nullptr;
  const MetricReport* dark = nullptr;
  for (const auto& r : reports) {
    if (r.region == "all") all = &r;
    else if (r.region.rfind("darkest_", 0) == 0) dark = &r;
  }
  if (all && dark) out << "\n" << format_hardcase_table(*all, *dark);
}

std::vector<MetricReport> report_rows(const DatasetReport& report) {
  std::vector<MetricReport> rows{report.all};
  if (report.dark) rows.push_back(*report.dark);
  return rows;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
};

struct EvalArgs {
  std::string ckpt;
  std::string pred;
  std::string data;
  double dark_frac = 0.0;
  std::string out;
  std::string postproc;
};

struct InferArgs {
  std::string ckpt;
  std::string image;
  std::string out;
  std::string postproc;
};

struct HardcaseArgs {
  std::string data;
  std::string out;
  double frac = 0.2;
  std::string percentiles = "5,10,15";
};

struct ReportArgs {
  std::string in;
  std::string format = "table";
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig config = load_run_config(a.config, /*check_paths=*/false);
  for (const auto& o : a.overrides) apply_override(config, o);
  config.validate(/*check_paths=*/true);
  const FitResult result = run_training(config);
  out << "trained " << result.state.iteration << " iterations, checkpoint "
      << (fs::path(config.output_dir) / "final.svlckpt").string() << "\n";
  return 0;
}

int cmd_eval(const EvalArgs& a, bool has_dark, std::ostream& out) {
  if (a.ckpt.empty() == a.pred.empty()) throw InputError("eval needs exactly one of --ckpt or --pred");
  EvalOptions options;
  if (has_dark) {
    if (!(a.dark_frac > 0.0 && a.dark_frac <= 1.0)) throw InputError("--dark-frac must lie in (0, 1]");
    options.dark_fraction = a.dark_frac;
  }
  const auto records = load_dataset(a.data, /*require_masks=*/true);
  DatasetReport report;
  if (!a.ckpt.empty()) {
    const Detector detector = Detector::from_checkpoint(a.ckpt);
    const std::string command = a.postproc.empty() ? detector.config().postproc : a.postproc;
    report = evaluate_detector(detector, records, make_postprocessor(command), options);
  } else {
    report = evaluate_prediction_dir(a.pred, records, options);
  }
  const auto rows = report_rows(report);
  if (!a.out.empty()) write_text(a.out, format_report_csv(rows));
  print_tables(out, rows);
  return 0;
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const Detector detector = Detector::from_checkpoint(a.ckpt);
  const std::string command = a.postproc.empty() ? detector.config().postproc : a.postproc;
  const Image image = load_image(a.image);
  const InferenceResult result = detector.infer(image, make_postprocessor(command));

  const fs::path mask_path(a.out);
  if (mask_path.has_parent_path()) fs::create_directories(mask_path.parent_path());
  const fs::path stem = mask_path.parent_path() / mask_path.stem();
  save_mask_png(mask_path, result.mask);
  save_probability_png(stem.string() + "_prob.png", result.probability);
  save_pfm(stem.string() + "_prob.pfm", result.probability);
  out << "wrote " << mask_path.string() << "\n";
  return 0;
}

int cmd_hardcase(const HardcaseArgs& a, std::ostream& out) {
  const auto records = load_dataset(a.data, /*require_masks=*/true);
  const HardCaseRanking ranking = hardcase_from_dataset(records, parse_percentiles(a.percentiles), a.frac);
  const fs::path csv(a.out);
  write_text(csv, format_hardcase_csv(ranking));
  const fs::path ids = csv.parent_path() / (csv.stem().string() + "_selected.txt");
  write_text(ids, format_selected_ids(ranking));
  out << "selected " << ranking.selected_ids.size() << " of " << ranking.entries.size() << " images\n";
  return 0;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto rows = parse_report_csv(read_text(a.in));
  if (a.format == "csv") out << format_report_csv(rows);
  else print_tables(out, rows);
  return 0;
}

int cmd_keys(std::ostream& out) {
  for (const auto& k : config_keys()) out << k.key << "\t" << k.description << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frozen-backbone shadow detection: train, evaluate, infer, select hard cases"};
  app.name("svl");
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the trainable heads");
  train_cmd->add_option("--config", train.config, "key=value run config")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--set", train.overrides, "override one key, key=value (repeatable)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint or prediction masks on a dataset");
  eval_cmd->add_option("--ckpt", eval.ckpt, "checkpoint file");
  eval_cmd->add_option("--pred", eval.pred, "directory of prediction masks <id>.png");
  eval_cmd->add_option("--data", eval.data, "dataset root")->required();
  auto* dark_opt = eval_cmd->add_option("--dark-frac", eval.dark_frac, "also score the darkest fraction of pixels");
  eval_cmd->add_option("--out", eval.out, "write the report as CSV");
  eval_cmd->add_option("--postproc", eval.postproc, "none, or CMD <in.pfm> <out.pfm>");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Predict a shadow mask for one image");
  infer_cmd->add_option("--ckpt", infer.ckpt, "checkpoint file")->required();
  infer_cmd->add_option("--image", infer.image, "input image")->required();
  infer_cmd->add_option("--out", infer.out, "output mask PNG")->required();
  infer_cmd->add_option("--postproc", infer.postproc, "none, or CMD <in.pfm> <out.pfm>");

  HardcaseArgs hard;
  auto* hard_cmd = app.add_subcommand("hardcase", "Rank images by dark non-shadow content");
  hard_cmd->add_option("--data", hard.data, "dataset root")->required();
  hard_cmd->add_option("--out", hard.out, "output CSV")->required();
  hard_cmd->add_option("--frac", hard.frac, "fraction of images to select")->check(CLI::Range(0.0, 1.0));
  hard_cmd->add_option("--percentiles", hard.percentiles, "comma-separated brightness percentiles");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Re-emit a CSV report");
  report_cmd->add_option("--in", report.in, "report CSV")->required();
  report_cmd->add_option("--format", report.format, "csv or table")->check(CLI::IsMember({"csv", "table"}));

  auto* keys_cmd = app.add_subcommand("keys", "List every config key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(train, out);
    if (*eval_cmd) return cmd_eval(eval, dark_opt->count() > 0, out);
    if (*infer_cmd) return cmd_infer(infer, out);
    if (*hard_cmd) return cmd_hardcase(hard, out);
    if (*report_cmd) return cmd_report(report, out);
    if (*keys_cmd) return cmd_keys(out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace svl
