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

#include "sfm/codec.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sfm/errors.hpp"

namespace sfm {

void FlipPairs::validate(int joints) const {
  std::set<int> seen;
  for (const auto& [a, b] : pairs_) {
    for (int idx : {a, b}) {
      if (idx < 0 || idx >= joints) {
        throw ValidationError("flip pair index " + std::to_string(idx) +
                              " outside [0, " + std::to_string(joints) + ")");
      }
      if (!seen.insert(idx).second) {
        throw ValidationError("flip pair index " + std::to_string(idx) +
                              " appears more than once");
      }
    }
  }
}

std::vector<int> FlipPairs::permutation(int joints) const {
  validate(joints);
  std::vector<int> perm(joints);
  for (int j = 0; j < joints; ++j) perm[j] = j;
  for (const auto& [a, b] : pairs_) {
    perm[a] = b;
    perm[b] = a;
  }
  return perm;
}

EncodedTargets encode(const KeypointSet& kps, double sigma, int size) {
  if (!(sigma > 0)) throw ConfigError("encode: sigma must be positive");
  if (kps.empty()) throw ConfigError("encode: empty keypoint set");
  const int joints = static_cast<int>(kps.size());
  EncodedTargets t;
  t.maps = HeatmapStack(1, joints, size, size);
  t.weights.assign(joints, 0.0f);
  t.flagged.assign(joints, false);
  const double denom = 2.0 * sigma * sigma;
  for (int j = 0; j < joints; ++j) {
    const Keypoint& k = kps[j];
    if (k.v <= 0) continue;
    const double cx = std::floor(k.x + 0.5);
    const double cy = std::floor(k.y + 0.5);
    if (!std::isfinite(k.x) || !std::isfinite(k.y) || cx < 0 || cy < 0 ||
        cx >= size || cy >= size) {
      t.flagged[j] = true;
      continue;
    }
    t.weights[j] = 1.0f;
    float* map = t.maps.plane(0, j);
    // Row and column factors are computed once; the product is exact at
    // the centre (1 * 1).
    std::vector<double> gx(size), gy(size);
    for (int i = 0; i < size; ++i) {
      gx[i] = std::exp(-(i - cx) * (i - cx) / denom);
      gy[i] = std::exp(-(i - cy) * (i - cy) / denom);
    }
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        map[y * size + x] = static_cast<float>(gy[y] * gx[x]);
      }
    }
  }
  return t;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-(i - r) * (i - r) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

// Edge replication. Mirrored padding would add a mirrored copy of a
// near-border peak and drag the blurred argmax onto the border pixel.
int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

std::vector<float> gaussian_blur(const float* plane, int height, int width,
                                 int size, double sigma) {
  const auto k = gaussian_kernel(size, sigma);
  const int r = size / 2;
  std::vector<double> tmp(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = 0; i < size; ++i) {
        acc += k[i] * plane[y * width + clamp_index(x + i - r, width)];
      }
      tmp[y * width + x] = acc;
    }
  }
  std::vector<float> out(tmp.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = 0; i < size; ++i) {
        acc += k[i] * tmp[clamp_index(y + i - r, height) * width + x];
      }
      out[y * width + x] = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<DecodedKeypoint> decode(const HeatmapStack& hm,
                                    const DecodeOptions& options) {
  const int h = hm.h();
  const int w = hm.w();
  std::vector<DecodedKeypoint> out(hm.c());
  for (int j = 0; j < hm.c(); ++j) {
    const float* raw = hm.plane(0, j);
    bool all_zero = true;
    for (std::size_t i = 0; i < hm.shape().plane(); ++i) {
      if (!std::isfinite(raw[i])) {
        throw ValidationError("decode: heatmap holds non-finite values");
      }
      if (raw[i] != 0.0f) all_zero = false;
    }
    if (all_zero) {
      out[j] = DecodedKeypoint{static_cast<double>(w / 2),
                               static_cast<double>(h / 2), 0.0};
      continue;
    }
    std::vector<float> blurred;
    const float* search = raw;
    if (options.blur) {
      blurred = gaussian_blur(raw, h, w, options.blur_size, options.blur_sigma);
      search = blurred.data();
    }
    int best = 0;
    for (int i = 1; i < h * w; ++i) {
      if (search[i] > search[best]) best = i;
    }
    const int px = best % w;
    const int py = best / w;
    double x = px;
    double y = py;
    if (px > 0 && px < w - 1) {
      const float d = raw[py * w + px + 1] - raw[py * w + px - 1];
      if (d > 0) x += 0.25;
      if (d < 0) x -= 0.25;
    }
    if (py > 0 && py < h - 1) {
      const float d = raw[(py + 1) * w + px] - raw[(py - 1) * w + px];
      if (d > 0) y += 0.25;
      if (d < 0) y -= 0.25;
    }
    out[j] = DecodedKeypoint{x, y, raw[best]};
  }
  return out;
}

HeatmapStack flip_heatmaps(const HeatmapStack& hm, const FlipPairs& pairs) {
  const auto perm = pairs.permutation(hm.c());
  HeatmapStack out(hm.shape());
  for (int n = 0; n < hm.n(); ++n) {
    for (int j = 0; j < hm.c(); ++j) {
      const float* src = hm.plane(n, j);
      float* dst = out.plane(n, perm[j]);
      for (int y = 0; y < hm.h(); ++y) {
        for (int x = 0; x < hm.w(); ++x) {
          dst[y * hm.w() + (hm.w() - 1 - x)] = src[y * hm.w() + x];
        }
      }
    }
  }
  return out;
}

HeatmapStack flip_merge(const HeatmapStack& hm, const HeatmapStack& hm_flipped,
                        const FlipPairs& pairs) {
  if (!(hm.shape() == hm_flipped.shape())) {
    throw ShapeError("flip_merge: shapes differ " + hm.shape().str() + " vs " +
                     hm_flipped.shape().str());
  }
  HeatmapStack out = flip_heatmaps(hm_flipped, pairs);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = 0.5f * (hm.data()[i] + out.data()[i]);
  }
  return out;
}

}  // namespace sfm
