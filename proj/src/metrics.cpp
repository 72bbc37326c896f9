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

#include "sfm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sfm/errors.hpp"

namespace sfm {

double head_size_from_box(double x1, double y1, double x2, double y2) {
  return 0.6 * std::hypot(x2 - x1, y2 - y1);
}

PckhReport pckh(const std::vector<KeypointSet>& preds,
                const std::vector<GroundTruthInstance>& gts, double tau) {
  if (preds.size() != gts.size()) {
    throw ShapeError("pckh: " + std::to_string(preds.size()) +
                     " predictions for " + std::to_string(gts.size()) +
                     " ground truths");
  }
  if (!(tau > 0)) throw ConfigError("pckh: tau must be positive");
  std::size_t joints = 0;
  for (const auto& g : gts) joints = std::max(joints, g.kps.size());
  PckhReport r;
  r.tau = tau;
  r.per_joint.assign(joints, 0.0);
  r.joint_counts.assign(joints, 0);
  std::vector<int> correct(joints, 0);
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const auto& g = gts[i];
    if (!(g.head_size > 0)) continue;
    if (preds[i].size() != g.kps.size()) {
      throw ShapeError("pckh: joint count mismatch at instance " +
                       std::to_string(i));
    }
    const double thr = tau * g.head_size;
    for (std::size_t j = 0; j < g.kps.size(); ++j) {
      if (g.kps[j].v <= 0) continue;
      const double d =
          std::hypot(preds[i][j].x - g.kps[j].x, preds[i][j].y - g.kps[j].y);
      ++r.joint_counts[j];
      if (d <= thr) ++correct[j];
    }
  }
  int total_correct = 0;
  for (std::size_t j = 0; j < joints; ++j) {
    if (r.joint_counts[j] > 0) {
      r.per_joint[j] = static_cast<double>(correct[j]) / r.joint_counts[j];
    }
    r.count += r.joint_counts[j];
    total_correct += correct[j];
  }
  r.empty = r.count == 0;
  if (!r.empty) r.mean = static_cast<double>(total_correct) / r.count;
  return r;
}

std::optional<double> oks(const KeypointSet& pred, const KeypointSet& gt,
                          double area, const std::vector<double>& k) {
  if (pred.size() != gt.size() || k.size() != gt.size()) {
    throw ShapeError("oks: prediction, ground truth and constants differ in "
                     "joint count");
  }
  if (!(area > 0)) return std::nullopt;
  double sum = 0.0;
  int n = 0;
  for (std::size_t j = 0; j < gt.size(); ++j) {
    if (gt[j].v <= 0) continue;
    const double dx = pred[j].x - gt[j].x;
    const double dy = pred[j].y - gt[j].y;
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * k[j] * k[j]));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::vector<double> oks_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

namespace {

double ap_at(const std::vector<OksTable>& images, double t, int num_gt) {
  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> all;
  for (const auto& img : images) {
    std::vector<std::size_t> order(img.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return img.scores[a] > img.scores[b];
    });
    std::vector<bool> taken(img.num_gt, false);
    for (auto d : order) {
      int best = -1;
      double best_oks = t;
      for (int g = 0; g < img.num_gt; ++g) {
        if (taken[g]) continue;
        const double o = img.oks[d][g];
        if (o >= best_oks && (best < 0 || o > best_oks)) {
          best = g;
          best_oks = o;
        }
      }
      if (best >= 0) taken[best] = true;
      all.push_back({img.scores[d], best >= 0});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Scored& a, const Scored& b) {
                     return a.score > b.score;
                   });
  std::vector<double> recall(all.size()), precision(all.size());
  int tp = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    tp += all[i].tp ? 1 : 0;
    recall[i] = static_cast<double>(tp) / num_gt;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = all.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

}  // namespace

ApReport average_precision(const std::vector<OksTable>& images) {
  ApReport r;
  r.thresholds = oks_thresholds();
  for (const auto& img : images) {
    if (img.oks.size() != img.scores.size()) {
      throw ShapeError("average_precision: OKS rows must match detections");
    }
    for (const auto& row : img.oks) {
      if (static_cast<int>(row.size()) != img.num_gt) {
        throw ShapeError("average_precision: OKS columns must match ground "
                         "truths");
      }
    }
    r.num_gt += img.num_gt;
    r.num_detections += static_cast<int>(img.scores.size());
  }
  r.undefined = r.num_gt == 0;
  if (r.undefined) {
    r.per_threshold.assign(r.thresholds.size(), 0.0);
    return r;
  }
  for (double t : r.thresholds) {
    r.per_threshold.push_back(ap_at(images, t, r.num_gt));
  }
  r.ap = std::accumulate(r.per_threshold.begin(), r.per_threshold.end(), 0.0) /
         static_cast<double>(r.per_threshold.size());
  r.ap50 = r.per_threshold.front();
  return r;
}

ApReport average_precision(const std::vector<Detection>& detections,
                           const std::vector<GroundTruthInstance>& gts,
                           const std::vector<double>& k) {
  std::map<std::string, std::vector<const GroundTruthInstance*>> gt_by_image;
  std::map<std::string, std::vector<const Detection*>> det_by_image;
  for (const auto& g : gts) {
    const bool labeled = std::any_of(g.kps.begin(), g.kps.end(),
                                     [](const Keypoint& p) { return p.v > 0; });
    if (labeled && g.area > 0) gt_by_image[g.image_id].push_back(&g);
  }
  for (const auto& d : detections) det_by_image[d.image_id].push_back(&d);
  std::vector<std::string> ids;
  for (const auto& [id, _] : gt_by_image) ids.push_back(id);
  for (const auto& [id, _] : det_by_image) {
    if (!gt_by_image.count(id)) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<OksTable> tables;
  for (const auto& id : ids) {
    OksTable t;
    const auto& g = gt_by_image[id];
    t.num_gt = static_cast<int>(g.size());
    for (const Detection* d : det_by_image[id]) {
      t.scores.push_back(d->score);
      std::vector<double> row;
      for (const GroundTruthInstance* gi : g) {
        row.push_back(oks(d->kps, gi->kps, gi->area, k).value_or(0.0));
      }
      t.oks.push_back(std::move(row));
    }
    tables.push_back(std::move(t));
  }
  return average_precision(tables);
}

double EvalReport::primary() const {
  for (const auto& p : pckh) {
    if (p.tau == 0.5) return p.mean;
  }
  if (ap) return ap->ap;
  return pckh.empty() ? 0.0 : pckh.front().mean;
}

std::string EvalReport::primary_name() const {
  for (const auto& p : pckh) {
    if (p.tau == 0.5) return "PCKh@0.5";
  }
  if (ap) return "AP";
  return pckh.empty() ? "none" : "PCKh";
}

namespace {

std::string tau_label(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "PCKh@%g", tau);
  return buf;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["primary"] = primary_name();
  j["primary_value"] = primary();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : pckh) {
    nlohmann::ordered_json e;
    e["tau"] = p.tau;
    e["mean"] = p.mean;
    e["count"] = p.count;
    e["empty"] = p.empty;
    auto joints = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < p.per_joint.size(); ++i) {
      nlohmann::ordered_json je;
      je["joint"] = i < joint_names.size() ? joint_names[i] : std::to_string(i);
      je["accuracy"] = p.per_joint[i];
      je["count"] = p.joint_counts[i];
      joints.push_back(je);
    }
    e["per_joint"] = joints;
    arr.push_back(e);
  }
  j["pckh"] = arr;
  if (ap) {
    nlohmann::ordered_json a;
    a["ap"] = ap->ap;
    a["ap50"] = ap->ap50;
    a["thresholds"] = ap->thresholds;
    a["per_threshold"] = ap->per_threshold;
    a["num_gt"] = ap->num_gt;
    a["num_detections"] = ap->num_detections;
    a["undefined"] = ap->undefined;
    j["ap"] = a;
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char buf[128];
  if (!pckh.empty()) {
    os << "joint";
    for (const auto& p : pckh) os << "  " << tau_label(p.tau);
    os << "\n";
    const std::size_t joints = pckh.front().per_joint.size();
    for (std::size_t i = 0; i < joints; ++i) {
      os << (i < joint_names.size() ? joint_names[i] : std::to_string(i));
      for (const auto& p : pckh) {
        std::snprintf(buf, sizeof(buf), "  %6.1f", 100.0 * p.per_joint[i]);
        os << buf;
      }
      os << "\n";
    }
    os << "mean";
    for (const auto& p : pckh) {
      std::snprintf(buf, sizeof(buf), "  %6.1f%s", 100.0 * p.mean,
                    p.empty ? " (no evaluable joints)" : "");
      os << buf;
    }
    os << "\n";
  }
  if (ap) {
    if (ap->undefined) {
      os << "AP undefined (no ground truth)\n";
    } else {
      std::snprintf(buf, sizeof(buf), "AP %.1f  AP@0.5 %.1f  (%d gt, %d det)\n",
                    100.0 * ap->ap, 100.0 * ap->ap50, ap->num_gt,
                    ap->num_detections);
      os << buf;
    }
  }
  return os.str();
}

}  // namespace sfm
