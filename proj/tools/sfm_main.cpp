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

// Command-line entry point: sfm <command> [flags].

#include <iostream>

#include "CLI11.hpp"
#include "sfm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SFM pose estimation: fixtures, training, evaluation, "
               "inference and complexity reports"};
  app.require_subcommand(1);

  sfm::CommandOptions opts;
  auto add_common = [&opts](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--set", opts.overrides, "KEY=VALUE override (repeatable)")
        ->take_all();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "seed for every random stream")
        ->default_val(0);
    cmd->add_option("--device", opts.device, "compute device")
        ->default_val("cpu");
  };

  auto* fixture = app.add_subcommand("make-fixture", "write the synthetic fixture");
  auto* train = app.add_subcommand("train", "train a model");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* infer = app.add_subcommand("infer", "predict keypoints on images");
  auto* complexity = app.add_subcommand("complexity", "parameter and FLOP counts");
  auto* ablate = app.add_subcommand("ablate", "bridge/HSA ablation");
  for (auto* cmd : {fixture, train, eval, infer, complexity, ablate}) {
    add_common(cmd);
  }
  train->add_option("--checkpoint", opts.checkpoint, "resume from checkpoint");
  eval->add_option("--checkpoint", opts.checkpoint, "checkpoint to evaluate");
  infer->add_option("--checkpoint", opts.checkpoint, "checkpoint to run");
  infer->add_option("images", opts.images, "input images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sfm::kExitOk : sfm::kExitUsage;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return sfm::run_command(name, opts, std::cout, std::cerr);
}
