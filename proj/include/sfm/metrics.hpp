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

#ifndef SFM_METRICS_HPP_
#define SFM_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "sfm/codec.hpp"

namespace sfm {

struct GroundTruthInstance {
  std::string image_id;
  KeypointSet kps;
  double head_size = 0.0;  // PCKh normalizer
  double area = 0.0;       // OKS scale (s^2)
};

// 0.6 x the diagonal of an axis-aligned head box.
double head_size_from_box(double x1, double y1, double x2, double y2);

struct PckhReport {
  double tau = 0.5;
  std::vector<double> per_joint;  // correct fraction, 0 when count is 0
  std::vector<int> joint_counts;
  double mean = 0.0;  // pooled over all evaluated joints
  int count = 0;
  bool empty = true;  // nothing evaluable
};

// Matched prediction / ground-truth lists. A labeled joint (v > 0) of an
// instance with head_size > 0 is correct iff its distance is at most
// tau * head_size.
PckhReport pckh(const std::vector<KeypointSet>& preds,
                const std::vector<GroundTruthInstance>& gts, double tau);

// Mean over labeled joints of exp(-d^2 / (2 area k^2)); nullopt when the
// instance has no labeled joints or area <= 0.
std::optional<double> oks(const KeypointSet& pred, const KeypointSet& gt,
                          double area, const std::vector<double>& k);

struct Detection {
  std::string image_id;
  KeypointSet kps;
  double score = 0.0;
};

// One image: detection scores and their OKS against each ground truth.
struct OksTable {
  std::vector<double> scores;
  std::vector<std::vector<double>> oks;  // [detection][ground truth]
  int num_gt = 0;
};

struct ApReport {
  std::vector<double> thresholds;
  std::vector<double> per_threshold;
  double ap = 0.0;
  double ap50 = 0.0;
  int num_gt = 0;
  int num_detections = 0;
  bool undefined = true;  // no ground truth
};

std::vector<double> oks_thresholds();  // 0.50, 0.55, ..., 0.95

// Per threshold t and image, detections are visited by descending score
// (stable) and each takes the unmatched ground truth with the highest OKS
// among those with OKS >= t (lowest index on ties). Precision is averaged at
// 101 recall points after the usual monotone envelope.
ApReport average_precision(const std::vector<OksTable>& images);

// Builds OKS tables by image id. Ground truths without labeled joints are
// ignored; detections on images without ground truth count as false
// positives.
ApReport average_precision(const std::vector<Detection>& detections,
                           const std::vector<GroundTruthInstance>& gts,
                           const std::vector<double>& k);

// PCKh at each tau and/or an AP summary.
struct EvalReport {
  std::vector<PckhReport> pckh;
  std::optional<ApReport> ap;
  std::vector<std::string> joint_names;

  // PCKh@0.5 mean when present, otherwise AP.
  double primary() const;
  std::string primary_name() const;
  std::string to_json() const;
  std::string to_text() const;
};

}  // namespace sfm

#endif  // SFM_METRICS_HPP_
