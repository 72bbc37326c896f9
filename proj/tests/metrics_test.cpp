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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include "sfm/errors.hpp"
#include "sfm/metrics.hpp"
#include "sfm/random.hpp"

namespace sfm {
namespace {

using namespace oracle;

TEST(Pckh, PerfectPredictionsScoreOne) {
  Rng rng(1);
  const auto gts = random_gts(rng, 10, 16);
  std::vector<KeypointSet> preds;
  for (const auto& g : gts) preds.push_back(g.kps);
  const auto r = pckh(preds, gts, 0.5);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_FALSE(r.empty);
}

TEST(Pckh, ThresholdComparison) {
  GroundTruthInstance g;
  g.kps = {{10, 10, 2}};
  g.head_size = 50;
  const std::vector<KeypointSet> preds{{{10 + 0.4 * 50, 10, 2}}};
  EXPECT_EQ(pckh(preds, {g}, 0.5).mean, 1.0);
  EXPECT_EQ(pckh(preds, {g}, 0.1).mean, 0.0);
}

TEST(Pckh, EmptyEvaluableSetIsFlagged) {
  GroundTruthInstance g;
  g.kps = {{10, 10, 0}};
  g.head_size = 50;
  const auto r = pckh({{{0, 0, 2}}}, {g}, 0.5);
  EXPECT_TRUE(r.empty);
  EXPECT_EQ(r.count, 0);
}

TEST(Pckh, HeadSizeFromBox) {
  EXPECT_DOUBLE_EQ(head_size_from_box(0, 0, 30, 40), 0.6 * 50);
}

TEST(Pckh, MatchesBruteForceLoopAndIsMonotone) {
  Rng rng(2);
  const int joints = 16;
  const auto gts = random_gts(rng, 1000, joints);
  const auto preds = jitter(rng, gts, 8.0);
  for (double tau : {0.1, 0.2, 0.5}) {
    const auto r = pckh(preds, gts, tau);
    int total = 0, total_ok = 0;
    for (int j = 0; j < joints; ++j) {
      int n = 0, ok = 0;
      for (std::size_t i = 0; i < gts.size(); ++i) {
        if (gts[i].kps[j].v == 0) continue;
        ++n;
        const double dx = preds[i][j].x - gts[i].kps[j].x;
        const double dy = preds[i][j].y - gts[i].kps[j].y;
        if (std::sqrt(dx * dx + dy * dy) <= tau * gts[i].head_size) ++ok;
      }
      EXPECT_EQ(r.joint_counts[j], n);
      EXPECT_EQ(r.per_joint[j], n ? static_cast<double>(ok) / n : 0.0);
      total += n;
      total_ok += ok;
    }
    EXPECT_EQ(r.mean, static_cast<double>(total_ok) / total);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_gts(rng, 5, joints);
    const auto p = jitter(rng, g, 10.0);
    const auto lo = pckh(p, g, 0.1), hi = pckh(p, g, 0.5);
    EXPECT_LE(lo.mean, hi.mean);
    for (int j = 0; j < joints; ++j) EXPECT_LE(lo.per_joint[j], hi.per_joint[j]);
  }
}

TEST(Pckh, ScaleEquivariant) {
  Rng rng(3);
  auto gts = random_gts(rng, 50, 8);
  auto preds = jitter(rng, gts, 6.0);
  const auto before = pckh(preds, gts, 0.5);
  for (auto& g : gts) {
    g.head_size *= 4;
    for (auto& k : g.kps) {
      k.x *= 4;
      k.y *= 4;
    }
  }
  for (auto& p : preds) {
    for (auto& k : p) {
      k.x *= 4;
      k.y *= 4;
    }
  }
  const auto after = pckh(preds, gts, 0.5);
  EXPECT_EQ(before.per_joint, after.per_joint);
}

TEST(Pckh, MismatchedListsRejected) {
  EXPECT_THROW(pckh({}, {GroundTruthInstance{}}, 0.5), ShapeError);
}

TEST(Oks, PerfectIsOneAndClosedFormExponent) {
  const KeypointSet gt{{10, 10, 2}, {50, 50, 0}};
  EXPECT_DOUBLE_EQ(*oks(gt, gt, 100.0, {0.1, 0.1}), 1.0);
  // d^2 = 2 s^2 k^2 with s^2 = 100, k = 0.1 -> d^2 = 2.
  const KeypointSet pred{{10 + std::sqrt(2.0), 10, 2}, {0, 0, 2}};
  EXPECT_NEAR(*oks(pred, gt, 100.0, {0.1, 0.1}), std::exp(-1.0), 1e-12);
}

TEST(Oks, UndefinedWithoutLabeledJoints) {
  const KeypointSet gt{{10, 10, 0}};
  EXPECT_FALSE(oks(gt, gt, 100.0, {0.1}).has_value());
}

TEST(Oks, StrictlyDecreasingInDistance) {
  const KeypointSet gt{{10, 10, 2}, {20, 20, 2}};
  double last = 2.0;
  for (double d = 0; d < 20; d += 0.5) {
    const KeypointSet pred{{10 + d, 10, 2}, {20, 20, 2}};
    const double o = *oks(pred, gt, 400.0, {0.2, 0.2});
    EXPECT_LT(o, last);
    last = o;
  }
}

TEST(Ap, PerfectPredictionsScoreOne) {
  std::vector<OksTable> images;
  for (int i = 0; i < 5; ++i) images.push_back({{0.9}, {{1.0}}, 1});
  const auto r = average_precision(images);
  EXPECT_DOUBLE_EQ(r.ap, 1.0);
  EXPECT_DOUBLE_EQ(r.ap50, 1.0);
}

TEST(Ap, SingleMatchAtOksSixTenths) {
  const auto r = average_precision(std::vector<OksTable>{{{0.8}, {{0.6}}, 1}});
  ASSERT_EQ(r.per_threshold.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    // thresholds 0.50, 0.55, 0.60 match; above do not.
    EXPECT_DOUBLE_EQ(r.per_threshold[i], i <= 2 ? 1.0 : 0.0) << i;
  }
  EXPECT_DOUBLE_EQ(r.ap, 0.3);
}

TEST(Ap, NoGroundTruthIsUndefined) {
  EXPECT_TRUE(average_precision(std::vector<OksTable>{{{0.5}, {{}}, 0}}).undefined);
}

TEST(Ap, MatchesExhaustiveOracleOnSmallInstances) {
  Rng rng(4);
  std::uniform_int_distribution<int> nimg(1, 5), ninst(0, 3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<OksTable> images(nimg(rng));
    int num_gt = 0;
    for (auto& img : images) {
      img.num_gt = ninst(rng);
      num_gt += img.num_gt;
      const int dets = ninst(rng);
      for (int d = 0; d < dets; ++d) {
        img.scores.push_back(u(rng));
        std::vector<double> row;
        for (int g = 0; g < img.num_gt; ++g) row.push_back(0.3 + 0.7 * u(rng));
        img.oks.push_back(row);
      }
    }
    const auto r = average_precision(images);
    if (num_gt == 0) {
      EXPECT_TRUE(r.undefined);
      continue;
    }
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
      EXPECT_NEAR(r.per_threshold[i], oracle_ap_at(images, r.thresholds[i], num_gt),
                  1e-12)
          << trial;
    }
    EXPECT_LE(r.ap, r.ap50 + 1e-12);
  }
}

TEST(Ap, DetectionsAgainstInstances) {
  GroundTruthInstance a{"1", {{10, 10, 2}, {20, 20, 2}}, 0, 400};
  GroundTruthInstance b{"2", {{50, 50, 2}, {60, 60, 0}}, 0, 400};
  const std::vector<Detection> dets{{"1", a.kps, 0.9}, {"2", b.kps, 0.8}};
  const auto r = average_precision(dets, {a, b}, {0.1, 0.1});
  EXPECT_EQ(r.num_gt, 2);
  EXPECT_DOUBLE_EQ(r.ap, 1.0);
}

TEST(Report, JsonAndTextForms) {
  EvalReport rep;
  GroundTruthInstance g;
  g.kps = {{10, 10, 2}, {5, 5, 2}};
  g.head_size = 10;
  rep.pckh.push_back(pckh({{{10, 10, 2}, {50, 5, 2}}}, {g}, 0.5));
  rep.joint_names = {"a", "b"};
  EXPECT_EQ(rep.primary(), 0.5);
  EXPECT_NE(rep.to_json().find("\"per_joint\""), std::string::npos);
  EXPECT_NE(rep.to_text().find("mean"), std::string::npos);
}

}  // namespace
}  // namespace sfm
