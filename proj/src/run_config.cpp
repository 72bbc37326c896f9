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

#include "sfm/run_config.hpp"

#include <algorithm>

#include "sfm/errors.hpp"

namespace sfm {

void TrainSchedule::validate() const {
  if (!(initial_lr >= 0)) throw ConfigError("train.initial_lr must be >= 0");
  if (total_epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] < 1 || milestones[i] >= total_epochs ||
        (i > 0 && milestones[i] <= milestones[i - 1])) {
      throw ConfigError(
          "train.milestones must be strictly increasing and inside (0, epochs)");
    }
  }
  if (!(decay_factor > 0 && decay_factor < 1)) {
    throw ConfigError("train.decay_factor must lie in (0, 1)");
  }
}

double lr_at(int epoch, const TrainSchedule& schedule) {
  double lr = schedule.initial_lr;
  for (int m : schedule.milestones) {
    if (epoch >= m) lr *= schedule.decay_factor;
  }
  return lr;
}

void TrainOptions::validate() const {
  schedule.validate();
  if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
  if (eval_interval < 1) throw ConfigError("train.eval_interval must be >= 1");
  if (!(sigma > 0)) throw ConfigError("train.sigma must be positive");
  if (!(bn_momentum >= 0 && bn_momentum <= 1)) {
    throw ConfigError("train.bn_momentum must lie in [0, 1]");
  }
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 &&
        adam_beta2 < 1)) {
    throw ConfigError("train.adam_beta1/adam_beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ConfigError("train.adam_eps must be positive");
}

void DataOptions::validate() const {
  if (format == DatasetTag::kFixture) {
    if (fixture_samples < 1) throw ConfigError("data.fixture_samples must be >= 1");
    if (!(fixture_blob_sigma > 0)) {
      throw ConfigError("data.fixture_blob_sigma must be positive");
    }
  }
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  augment.validate();
  data.validate();
}

namespace {

const std::vector<std::string>& train_keys() {
  static const std::vector<std::string> k{
      "train.initial_lr",  "train.milestones",    "train.decay_factor",
      "train.epochs",      "train.batch_size",    "train.max_steps",
      "train.eval_interval", "train.sigma",       "train.bn_momentum",
      "train.adam_beta1",  "train.adam_beta2",    "train.adam_eps",
      "train.flip_test"};
  return k;
}

const std::vector<std::string>& data_keys() {
  static const std::vector<std::string> k{
      "data.format",          "data.train",
      "data.val",             "data.image_root",
      "data.fixture_samples", "data.fixture_blob_sigma"};
  return k;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (int x : v) {
    if (!out.empty()) out += ",";
    out += std::to_string(x);
  }
  return out;
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> k = ModelConfig::keys();
  for (const auto* group : {&train_keys(), &AugmentPolicy::keys(), &data_keys()}) {
    k.insert(k.end(), group->begin(), group->end());
  }
  return k;
}

KeyValueDoc RunConfig::to_doc() const {
  KeyValueDoc d = model.to_doc();
  const auto& s = train.schedule;
  d.set("train.initial_lr", format_double(s.initial_lr));
  d.set("train.milestones", join_ints(s.milestones));
  d.set("train.decay_factor", format_double(s.decay_factor));
  d.set("train.epochs", std::to_string(s.total_epochs));
  d.set("train.batch_size", std::to_string(s.batch_size));
  d.set("train.max_steps", std::to_string(train.max_steps));
  d.set("train.eval_interval", std::to_string(train.eval_interval));
  d.set("train.sigma", format_double(train.sigma));
  d.set("train.bn_momentum", format_double(train.bn_momentum));
  d.set("train.adam_beta1", format_double(train.adam_beta1));
  d.set("train.adam_beta2", format_double(train.adam_beta2));
  d.set("train.adam_eps", format_double(train.adam_eps));
  d.set("train.flip_test", train.flip_test ? "true" : "false");
  const KeyValueDoc aug = augment.to_doc();
  for (const auto& [k, v] : aug.items()) d.set(k, v);
  d.set("data.format", dataset_tag_name(data.format));
  d.set("data.train", data.train);
  d.set("data.val", data.val);
  d.set("data.image_root", data.image_root);
  d.set("data.fixture_samples", std::to_string(data.fixture_samples));
  d.set("data.fixture_blob_sigma", format_double(data.fixture_blob_sigma));
  return d;
}

RunConfig RunConfig::from_doc(const KeyValueDoc& doc) {
  const auto known = keys();
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  RunConfig c;
  c.model = ModelConfig::from_doc(doc);
  c.augment = AugmentPolicy::from_doc(doc);
  auto& t = c.train;
  auto& s = t.schedule;
  for (const auto& [key, value] : doc.items()) {
    if (key == "train.initial_lr") s.initial_lr = parse_double(key, value);
    if (key == "train.milestones") s.milestones = parse_int_list(key, value);
    if (key == "train.decay_factor") s.decay_factor = parse_double(key, value);
    if (key == "train.epochs") s.total_epochs = parse_int(key, value);
    if (key == "train.batch_size") s.batch_size = parse_int(key, value);
    if (key == "train.max_steps") t.max_steps = parse_int(key, value);
    if (key == "train.eval_interval") t.eval_interval = parse_int(key, value);
    if (key == "train.sigma") t.sigma = parse_double(key, value);
    if (key == "train.bn_momentum") t.bn_momentum = parse_double(key, value);
    if (key == "train.adam_beta1") t.adam_beta1 = parse_double(key, value);
    if (key == "train.adam_beta2") t.adam_beta2 = parse_double(key, value);
    if (key == "train.adam_eps") t.adam_eps = parse_double(key, value);
    if (key == "train.flip_test") t.flip_test = parse_bool(key, value);
    if (key == "data.format") c.data.format = parse_dataset_tag(value);
    if (key == "data.train") c.data.train = value;
    if (key == "data.val") c.data.val = value;
    if (key == "data.image_root") c.data.image_root = value;
    if (key == "data.fixture_samples") {
      c.data.fixture_samples = parse_int(key, value);
    }
    if (key == "data.fixture_blob_sigma") {
      c.data.fixture_blob_sigma = parse_double(key, value);
    }
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  KeyValueDoc doc = path.empty() ? KeyValueDoc() : KeyValueDoc::load(path);
  doc.apply_overrides(overrides, keys());
  return from_doc(doc);
}

}  // namespace sfm
