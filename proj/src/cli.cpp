// Copyright 2026 The SFM Pose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sfm/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sfm/checkpoint.hpp"
#include "sfm/complexity.hpp"
#include "sfm/errors.hpp"
#include "sfm/executor.hpp"
#include "sfm/train.hpp"

namespace sfm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
}

// Creates the output directory and snapshots the effective config.
fs::path prepare_out(const CommandOptions& opts, const RunConfig& config) {
  if (opts.out_dir.empty()) throw ConfigError("--out is required");
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  write_text(dir / "config.txt", config.to_doc().str());
  return dir;
}

TrainHooks stderr_hooks(std::ostream& err) {
  TrainHooks h;
  h.log = [&err](const std::string& msg) { err << msg << "\n"; };
  return h;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

json prediction_record(const Prediction& p) {
  json kps = json::array(), hm = json::array();
  for (std::size_t j = 0; j < p.kps.size(); ++j) {
    kps.push_back({p.kps[j].x, p.kps[j].y, p.confidence[j]});
    hm.push_back({p.heatmap_kps[j].x, p.heatmap_kps[j].y, p.confidence[j]});
  }
  return {{"image_id", p.image_id}, {"keypoints", kps}, {"heatmap_keypoints", hm}};
}

void write_report(const fs::path& dir, const EvalReport& report) {
  write_text(dir / "report.json", report.to_json());
  write_text(dir / "report.txt", report.to_text());
}

Checkpoint require_checkpoint(const CommandOptions& opts) {
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  return load_checkpoint(opts.checkpoint);
}

}  // namespace

RunConfig effective_config(const CommandOptions& opts) {
  if (opts.device != "cpu") {
    throw ConfigError("device '" + opts.device + "' is not available (cpu only)");
  }
  try {
    return RunConfig::load(opts.config_path, opts.overrides);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

int run_make_fixture(const CommandOptions& opts, std::ostream& out,
                     std::ostream&) {
  RunConfig config = effective_config(opts);
  const fs::path dir = prepare_out(opts, config);
  FixtureSpec spec;
  spec.n_samples = config.data.fixture_samples;
  spec.image_size = config.model.input_size;
  spec.n_joints = config.model.num_joints;
  spec.blob_sigma = config.data.fixture_blob_sigma;
  spec.seed = opts.seed;
  const Fixture fx = make_fixture(spec, dir.string());
  out << "wrote " << fx.samples.size() << " samples to " << fx.annotations_path
      << "\n";
  return kExitOk;
}

int run_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const RunConfig config = effective_config(opts);
  const fs::path dir = prepare_out(opts, config);
  const Dataset train_set = load_train_set(config, opts.seed);
  const auto val_set = load_val_set(config);
  std::optional<TrainState> resume;
  if (!opts.checkpoint.empty()) {
    resume = from_checkpoint(load_checkpoint(opts.checkpoint), config);
    err << "resuming at step " << resume->step << "\n";
  }
  const TrainResult result =
      train(config, train_set, val_set ? &*val_set : nullptr, opts.seed,
            dir.string(), std::move(resume), stderr_hooks(err));
  if (!result.evals.empty()) {
    const EvalReport& last = result.evals.back().second;
    write_report(dir, last);
    out << last.to_text();
  }
  out << "steps " << result.state.step << ", checkpoint "
      << (dir / "last.ckpt").string() << "\n";
  return kExitOk;
}

int run_eval(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  const RunConfig config = effective_config(opts);
  const Checkpoint ckpt = require_checkpoint(opts);
  const fs::path dir = prepare_out(opts, config);
  auto data = load_val_set(config);
  if (!data) data = load_train_set(config, opts.seed);
  if (ckpt.config.num_joints != data->info.num_joints()) {
    throw ConfigError("checkpoint predicts " +
                      std::to_string(ckpt.config.num_joints) +
                      " joints, dataset has " +
                      std::to_string(data->info.num_joints()));
  }
  const ModelGraph graph = build_graph(ckpt.config);
  const auto params = model_params(ckpt, graph);
  const auto preds = predict(graph, params, *data, config.train.flip_test);
  std::ostringstream dump;
  for (const auto& p : preds) dump << prediction_record(p).dump() << "\n";
  write_text(dir / "predictions.jsonl", dump.str());
  const EvalReport report = evaluate_predictions(*data, preds);
  write_report(dir, report);
  out << report.to_text();
  return kExitOk;
}

int run_infer(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const RunConfig config = effective_config(opts);
  if (opts.images.empty()) throw ConfigError("infer needs at least one image");
  const Checkpoint ckpt = require_checkpoint(opts);
  const fs::path dir = prepare_out(opts, config);
  fs::create_directories(dir / "overlays");
  const DatasetInfo info = dataset_info(config.data.format, ckpt.config.num_joints);
  const ModelGraph graph = build_graph(ckpt.config);
  const auto params = model_params(ckpt, graph);

  std::ostringstream dump;
  int ok = 0;
  for (const auto& path : opts.images) {
    Image image;
    try {
      image = load_image(path);
    } catch (const Error& e) {
      err << "warning: skipping '" << path << "': " << e.what() << "\n";
      continue;
    }
    // The whole image, centred and padded to a square, becomes the crop.
    Dataset one;
    one.info = info;
    Sample s;
    s.image_id = fs::path(path).filename().string();
    s.image = std::make_shared<Image>(image);
    s.image_width = image.width;
    s.image_height = image.height;
    s.center_x = (image.width - 1) / 2.0;
    s.center_y = (image.height - 1) / 2.0;
    s.box_scale = std::max(image.width, image.height);
    s.kps.assign(ckpt.config.num_joints, Keypoint{});
    one.samples.push_back(std::move(s));
    const auto preds = predict(graph, params, one, config.train.flip_test, 1);
    dump << prediction_record(preds.front()).dump() << "\n";
    Image overlay = image;
    draw_keypoints(overlay, preds.front().kps, info.skeleton);
    save_image(overlay,
               (dir / "overlays" / (fs::path(path).stem().string() + ".png"))
                   .string());
    ++ok;
  }
  write_text(dir / "predictions.jsonl", dump.str());
  out << "predicted " << ok << " of " << opts.images.size() << " images\n";
  return ok == 0 ? kExitRuntime : kExitOk;
}

int run_complexity(const CommandOptions& opts, std::ostream& out,
                   std::ostream&) {
  const RunConfig config = effective_config(opts);
  const ComplexityReport report = count_complexity(build_graph(config.model));
  out << report.to_text();
  if (!opts.out_dir.empty()) {
    const fs::path dir = prepare_out(opts, config);
    write_text(dir / "complexity.json", report.to_json());
    write_text(dir / "complexity.txt", report.to_text());
  }
  return kExitOk;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> v{
      {"cascaded_pyramid", false, false},
      {"sfm_without_hsa", true, false},
      {"sfm", true, true}};
  return v;
}

int run_ablate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const RunConfig base = effective_config(opts);
  const fs::path dir = prepare_out(opts, base);
  const Dataset train_set = load_train_set(base, opts.seed);
  const auto val_set = load_val_set(base);

  json rows = json::array();
  std::set<Edge> previous;
  bool failed = false;
  std::ostringstream table;
  table << "variant            bridges  hsa    params(M)  GFLOPs  edges  metric\n";
  const auto persist = [&] {
    json doc = {{"seed", opts.seed}, {"variants", rows}};
    write_text(dir / "ablation.json", doc.dump(2) + "\n");
    write_text(dir / "ablation.txt", table.str());
  };
  for (const auto& v : ablation_variants()) {
    RunConfig config = base;
    config.model.bridges_enabled = v.bridges;
    config.model.hsa_enabled = v.hsa;
    const ModelGraph graph = build_graph(config.model);
    const ComplexityReport cx = count_complexity(graph);
    const std::set<Edge> edges(graph.edges().begin(), graph.edges().end());
    const bool superset =
        std::includes(edges.begin(), edges.end(), previous.begin(), previous.end());
    previous = edges;
    json row = {{"name", v.name},
                {"bridges_enabled", v.bridges},
                {"hsa_enabled", v.hsa},
                {"params", cx.params},
                {"flops", cx.flops},
                {"edges", edges.size()},
                {"contains_previous_edges", superset}};
    try {
      const fs::path vdir = dir / v.name;
      fs::create_directories(vdir);
      write_text(vdir / "config.txt", config.to_doc().str());
      err << "== " << v.name << "\n";
      const TrainResult r =
          train(config, train_set, val_set ? &*val_set : nullptr, opts.seed,
                vdir.string(), std::nullopt, stderr_hooks(err));
      const EvalReport& report = r.evals.back().second;
      write_report(vdir, report);
      row["metric"] = report.primary_name();
      row["value"] = report.primary();
      row["status"] = "ok";
    } catch (const Error& e) {
      failed = true;
      row["status"] = std::string("failed: ") + e.what();
      err << "variant " << v.name << " failed: " << e.what() << "\n";
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %-8s %-6s %9.4f  %6.3f  %5zu  %s\n",
                  v.name.c_str(), v.bridges ? "on" : "off", v.hsa ? "on" : "off",
                  cx.params / 1e6, cx.flops / 1e9, edges.size(),
                  row.contains("value")
                      ? fmt("%.1f", 100.0 * row["value"].get<double>()).c_str()
                      : "failed");
    table << line;
    rows.push_back(row);
    persist();
  }
  out << table.str();
  return failed ? kExitRuntime : kExitOk;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{
      "make-fixture", "train", "eval", "infer", "complexity", "ablate"};
  return names;
}

int run_command(const std::string& name, const CommandOptions& opts,
                std::ostream& out, std::ostream& err) {
  try {
    if (name == "make-fixture") return run_make_fixture(opts, out, err);
    if (name == "train") return run_train(opts, out, err);
    if (name == "eval") return run_eval(opts, out, err);
    if (name == "infer") return run_infer(opts, out, err);
    if (name == "complexity") return run_complexity(opts, out, err);
    if (name == "ablate") return run_ablate(opts, out, err);
    err << "unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace sfm
