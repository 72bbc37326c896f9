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

#ifndef SFM_TESTS_ORACLES_HPP_
#define SFM_TESTS_ORACLES_HPP_

// Brute-force references shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "sfm/codec.hpp"
#include "sfm/metrics.hpp"
#include "sfm/random.hpp"

namespace sfm::oracle {

using u64 = std::uint64_t;

// Closed-form costs used by the oracles below.
inline u64 conv_flops(u64 cout, u64 cin, u64 k, u64 h, u64 w) {
  return cout * cin * k * k * h * w;
}
inline u64 conv_params(u64 cout, u64 cin, u64 k, bool bias) {
  return cout * cin * k * k + (bias ? cout : 0);
}
struct Cost {
  u64 params = 0;
  u64 flops = 0;
};
// theta on a (c, s, s) map: pool (or duplicate), 7x7 conv 2->1, tanh.
inline Cost theta_cost(u64 c, u64 s) {
  const u64 pool = c == 1 ? 0 : 2 * c * s * s;
  return {conv_params(1, 2, 7, true), pool + conv_flops(1, 2, 7, s, s) + s * s};
}
inline Cost hsa_cost(u64 c, u64 s) {
  const Cost t1 = theta_cost(c, s), t2 = theta_cost(1, s);
  return {t1.params + t2.params, t1.flops + t2.flops + c * s * s};
}
// conv-bn-relu-conv-bn, residual add, relu.
inline Cost block_cost(u64 c, u64 s) {
  const u64 e = c * s * s;
  return {2 * conv_params(c, c, 3, false) + 4 * c,
          2 * conv_flops(c, c, 3, s, s) + 2 * e + e + e + e};
}

// Brute-force reading of the decoding rule on a given search map.
inline DecodedKeypoint decode_oracle(const float* raw, const std::vector<float>& search, int h,
                       int w) {
  int by = 0, bx = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (search[y * w + x] > search[by * w + bx]) {
        by = y;
        bx = x;
      }
    }
  }
  double x = bx, y = by;
  if (bx >= 1 && bx <= w - 2) {
    const float r = raw[by * w + bx + 1], l = raw[by * w + bx - 1];
    x += r > l ? 0.25 : r < l ? -0.25 : 0.0;
  }
  if (by >= 1 && by <= h - 2) {
    const float d = raw[(by + 1) * w + bx], u = raw[(by - 1) * w + bx];
    y += d > u ? 0.25 : d < u ? -0.25 : 0.0;
  }
  return {x, y, raw[by * w + bx]};
}

inline std::vector<GroundTruthInstance> random_gts(Rng& rng, int n, int joints) {
  std::uniform_real_distribution<double> u(0, 200), hs(5, 40);
  std::uniform_int_distribution<int> v(0, 2);
  std::vector<GroundTruthInstance> gts(n);
  for (auto& g : gts) {
    for (int j = 0; j < joints; ++j) g.kps.push_back({u(rng), u(rng), v(rng)});
    g.head_size = hs(rng);
  }
  return gts;
}

inline std::vector<KeypointSet> jitter(Rng& rng, const std::vector<GroundTruthInstance>& gts,
                                double spread) {
  std::normal_distribution<double> n(0, spread);
  std::vector<KeypointSet> preds;
  for (const auto& g : gts) {
    KeypointSet p = g.kps;
    for (auto& k : p) {
      k.x += n(rng);
      k.y += n(rng);
    }
    preds.push_back(p);
  }
  return preds;
}

// Direct reading of PCKh: pooled fraction of labeled joints within
// tau * head size.
inline double pckh_mean(const std::vector<KeypointSet>& preds,
                        const std::vector<GroundTruthInstance>& gts, double tau) {
  int n = 0, ok = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    for (std::size_t j = 0; j < gts[i].kps.size(); ++j) {
      if (gts[i].kps[j].v == 0) continue;
      ++n;
      const double dx = preds[i][j].x - gts[i].kps[j].x;
      const double dy = preds[i][j].y - gts[i].kps[j].y;
      if (std::sqrt(dx * dx + dy * dy) <= tau * gts[i].head_size) ++ok;
    }
  }
  return n ? static_cast<double>(ok) / n : 0.0;
}

// Exhaustive oracle: among all partial one-to-one assignments with
// OKS >= t, greedy matching is the lexicographically largest sequence of
// (oks, -gt index) taken in descending score order.
inline double oracle_ap_at(const std::vector<OksTable>& images, double t, int num_gt) {
  std::vector<std::pair<double, bool>> all;
  for (const auto& img : images) {
    std::vector<std::size_t> order(img.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return img.scores[a] > img.scores[b];
    });
    std::vector<int> assign(order.size(), -1), best;
    std::vector<std::pair<double, int>> best_key;
    std::vector<bool> used(img.num_gt, false);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == order.size()) {
        std::vector<std::pair<double, int>> key;
        for (std::size_t i = 0; i < order.size(); ++i) {
          key.push_back(assign[i] < 0 ? std::pair(-1.0, 0)
                                      : std::pair(img.oks[order[i]][assign[i]],
                                                  -assign[i]));
        }
        if (best.empty() || key > best_key) {
          best_key = key;
          best = assign;
        }
        return;
      }
      assign[k] = -1;
      rec(k + 1);
      for (int g = 0; g < img.num_gt; ++g) {
        if (used[g] || img.oks[order[k]][g] < t) continue;
        used[g] = true;
        assign[k] = g;
        rec(k + 1);
        used[g] = false;
        assign[k] = -1;
      }
    };
    rec(0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      all.push_back({img.scores[order[i]], best[i] >= 0});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](auto& a, auto& b) { return a.first > b.first; });
  // Precision envelope: for each recall level, the best precision at any
  // cut reaching it.
  double sum = 0;
  for (int r = 0; r <= 100; ++r) {
    double best_p = 0;
    int tp = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      tp += all[i].second;
      const double rec = static_cast<double>(tp) / num_gt;
      if (rec >= r / 100.0) best_p = std::max(best_p, tp / double(i + 1));
    }
    sum += best_p;
  }
  return sum / 101;
}

}  // namespace sfm::oracle

#endif  // SFM_TESTS_ORACLES_HPP_
