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

#ifndef SFM_RUN_CONFIG_HPP_
#define SFM_RUN_CONFIG_HPP_

#include <string>
#include <vector>

#include "sfm/augment.hpp"
#include "sfm/datasets.hpp"
#include "sfm/kv_config.hpp"
#include "sfm/model_graph.hpp"

namespace sfm {

struct TrainSchedule {
  double initial_lr = 1e-3;
  std::vector<int> milestones{180, 260};  // epochs
  double decay_factor = 0.1;
  int total_epochs = 300;
  int batch_size = 32;

  void validate() const;
  bool operator==(const TrainSchedule&) const = default;
};

// Piecewise constant: initial_lr * decay_factor^(milestones passed).
double lr_at(int epoch, const TrainSchedule& schedule);

struct TrainOptions {
  TrainSchedule schedule;
  long max_steps = 0;      // 0: run the whole schedule
  int eval_interval = 10;  // epochs
  double sigma = 2.0;      // target Gaussian, heatmap pixels
  double bn_momentum = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool flip_test = true;

  void validate() const;
  bool operator==(const TrainOptions&) const = default;
};

struct DataOptions {
  DatasetTag format = DatasetTag::kFixture;
  std::string train;  // annotation file; for fixtures, an output directory
  std::string val;    // empty: evaluate on the training set
  std::string image_root;
  int fixture_samples = 32;
  double fixture_blob_sigma = 4.0;

  void validate() const;
  bool operator==(const DataOptions&) const = default;
};

// Everything a command needs besides the seed. Serialized as a flat
// "key = value" document with model., train., augment. and data. keys.
struct RunConfig {
  ModelConfig model;
  TrainOptions train;
  AugmentPolicy augment;
  DataOptions data;

  void validate() const;
  KeyValueDoc to_doc() const;
  static RunConfig from_doc(const KeyValueDoc& doc);
  // Optional file, then KEY=VALUE overrides; unknown keys are rejected.
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides = {});
  static std::vector<std::string> keys();
  bool operator==(const RunConfig&) const = default;
};

}  // namespace sfm

#endif  // SFM_RUN_CONFIG_HPP_
