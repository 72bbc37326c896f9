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

#ifndef SFM_CLI_HPP_
#define SFM_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sfm/run_config.hpp"

namespace sfm {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct CommandOptions {
  std::string config_path;             // optional key = value file
  std::vector<std::string> overrides;  // KEY=VALUE
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string device = "cpu";
  std::string checkpoint;
  std::vector<std::string> images;  // infer inputs
};

// Config file plus overrides; unknown keys, bad values and unsupported
// devices raise ConfigError.
RunConfig effective_config(const CommandOptions& opts);

// Each command returns an exit code and reports on `out` / `err`.
// Outputs written under out_dir:
//   make-fixture  config.txt, images/*.png, annotations.json
//   train         config.txt, train_log.jsonl, eval_log.jsonl, last.ckpt,
//                 best.ckpt, report.json, report.txt
//   eval          config.txt, predictions.jsonl, report.json, report.txt
//   infer         config.txt, predictions.jsonl, overlays/<name>.png
//   complexity    config.txt, complexity.json, complexity.txt
//   ablate        config.txt, <variant>/ (as train), ablation.json,
//                 ablation.txt
int run_make_fixture(const CommandOptions& opts, std::ostream& out,
                     std::ostream& err);
int run_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_infer(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_complexity(const CommandOptions& opts, std::ostream& out,
                   std::ostream& err);
int run_ablate(const CommandOptions& opts, std::ostream& out, std::ostream& err);

// Dispatches by name and maps exceptions to exit codes.
int run_command(const std::string& name, const CommandOptions& opts,
                std::ostream& out, std::ostream& err);

const std::vector<std::string>& command_names();

// The three ablation variants in report order.
struct AblationVariant {
  std::string name;
  bool bridges = false;
  bool hsa = false;
};
const std::vector<AblationVariant>& ablation_variants();

}  // namespace sfm

#endif  // SFM_CLI_HPP_
