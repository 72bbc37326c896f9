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

#include "sfm/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sfm/errors.hpp"

namespace sfm {

AugmentPolicy AugmentPolicy::none() {
  AugmentPolicy p;
  p.p_rotate = 0.0;
  p.p_scale = 0.0;
  p.p_flip = 0.0;
  p.p_half_body = 0.0;
  return p;
}

void AugmentPolicy::validate() const {
  auto prob = [](double p, const char* key) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(std::string(key) + " must lie in [0, 1]");
    }
  };
  prob(p_rotate, "augment.p_rotate");
  prob(p_scale, "augment.p_scale");
  prob(p_flip, "augment.p_flip");
  prob(p_half_body, "augment.p_half_body");
  if (max_rotation < 0) throw ConfigError("augment.max_rotation must be >= 0");
  if (!(scale_min > 0 && scale_min <= scale_max)) {
    throw ConfigError("augment.scale_min/scale_max must satisfy 0 < min <= max");
  }
  if (half_body_min_joints < 0) {
    throw ConfigError("augment.half_body_min_joints must be >= 0");
  }
  if (!(half_body_padding > 0)) {
    throw ConfigError("augment.half_body_padding must be positive");
  }
}

const std::vector<std::string>& AugmentPolicy::keys() {
  static const std::vector<std::string> k{
      "augment.p_rotate",    "augment.max_rotation",
      "augment.p_scale",     "augment.scale_min",
      "augment.scale_max",   "augment.p_flip",
      "augment.p_half_body", "augment.half_body_min_joints",
      "augment.half_body_padding"};
  return k;
}

KeyValueDoc AugmentPolicy::to_doc() const {
  KeyValueDoc d;
  d.set("augment.p_rotate", format_double(p_rotate));
  d.set("augment.max_rotation", format_double(max_rotation));
  d.set("augment.p_scale", format_double(p_scale));
  d.set("augment.scale_min", format_double(scale_min));
  d.set("augment.scale_max", format_double(scale_max));
  d.set("augment.p_flip", format_double(p_flip));
  d.set("augment.p_half_body", format_double(p_half_body));
  d.set("augment.half_body_min_joints", std::to_string(half_body_min_joints));
  d.set("augment.half_body_padding", format_double(half_body_padding));
  return d;
}

AugmentPolicy AugmentPolicy::from_doc(const KeyValueDoc& doc) {
  AugmentPolicy p;
  const auto& known = keys();
  for (const auto& [key, value] : doc.items()) {
    if (key.rfind("augment.", 0) != 0) continue;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (key == "augment.p_rotate") p.p_rotate = parse_double(key, value);
    if (key == "augment.max_rotation") p.max_rotation = parse_double(key, value);
    if (key == "augment.p_scale") p.p_scale = parse_double(key, value);
    if (key == "augment.scale_min") p.scale_min = parse_double(key, value);
    if (key == "augment.scale_max") p.scale_max = parse_double(key, value);
    if (key == "augment.p_flip") p.p_flip = parse_double(key, value);
    if (key == "augment.p_half_body") p.p_half_body = parse_double(key, value);
    if (key == "augment.half_body_min_joints") {
      p.half_body_min_joints = parse_int(key, value);
    }
    if (key == "augment.half_body_padding") {
      p.half_body_padding = parse_double(key, value);
    }
  }
  p.validate();
  return p;
}

AugmentParams sample_params(Rng& rng, const AugmentPolicy& policy) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentParams p;
  // Gates are always drawn so the stream layout does not depend on the
  // policy values.
  const double rot_gate = unit(rng);
  const double rot = unit(rng);
  const double scale_gate = unit(rng);
  const double scale = unit(rng);
  const double flip_gate = unit(rng);
  if (rot_gate < policy.p_rotate) {
    p.rotation = policy.max_rotation * (2.0 * rot - 1.0);
  }
  if (scale_gate < policy.p_scale) {
    p.scale = policy.scale_min + (policy.scale_max - policy.scale_min) * scale;
  }
  p.flip = flip_gate < policy.p_flip;
  return p;
}

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  if (det == 0.0) throw ConfigError("affine transform is singular");
  const auto& m = m_;
  const double a = m[4] / det;
  const double b = -m[1] / det;
  const double d = -m[3] / det;
  const double e = m[0] / det;
  return AffineTransform(
      {a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])});
}

AffineTransform AffineTransform::compose(const AffineTransform& o) const {
  const auto& a = m_;
  const auto& b = o.m_;
  return AffineTransform({a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4],
                          a[0] * b[2] + a[1] * b[5] + a[2],
                          a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4],
                          a[3] * b[2] + a[4] * b[5] + a[5]});
}

AffineTransform build_affine(const AugmentParams& params, int out_size) {
  if (!(params.box_scale > 0) || !(params.scale > 0)) {
    throw ConfigError("build_affine: box scale must be positive");
  }
  const double s = out_size / (params.box_scale * params.scale);
  const double rad = params.rotation * std::numbers::pi / 180.0;
  const double c = std::cos(rad) * s;
  const double sn = std::sin(rad) * s;
  const double half = out_size / 2.0;
  // [c -sn; sn c] * (p - centre) + half
  return AffineTransform(
      {c, -sn, half - (c * params.center_x - sn * params.center_y), sn, c,
       half - (sn * params.center_x + c * params.center_y)});
}

KeypointSet flip_keypoints(const KeypointSet& kps, const FlipPairs& pairs,
                           int width) {
  const auto perm = pairs.permutation(static_cast<int>(kps.size()));
  KeypointSet out(kps.size());
  for (std::size_t j = 0; j < kps.size(); ++j) {
    Keypoint k = kps[j];
    k.x = width - 1 - k.x;
    out[perm[j]] = k;
  }
  return out;
}

WarpedSample apply(const Image& image, const KeypointSet& kps,
                   const AffineTransform& t, bool flip, const FlipPairs& pairs,
                   int out_size) {
  const AffineTransform inv = t.inverse();
  WarpedSample out;
  out.image = Image(out_size, out_size);
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      const auto [sx, sy] = inv.apply(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        out.image.at(x, y, ch) = image.sample(sx, sy, ch);
      }
    }
  }
  out.kps.resize(kps.size());
  for (std::size_t j = 0; j < kps.size(); ++j) {
    const auto [x, y] = t.apply(kps[j].x, kps[j].y);
    Keypoint k{x, y, kps[j].v};
    if (k.v > 1 && !(x >= 0 && y >= 0 && x < out_size && y < out_size)) {
      k.v = 1;
    }
    out.kps[j] = k;
  }
  if (flip) {
    out.image = flip_image(out.image);
    out.kps = flip_keypoints(out.kps, pairs, out_size);
  }
  return out;
}

std::optional<PersonBox> body_part_box(const KeypointSet& kps,
                                       const std::vector<int>& upper_joints,
                                       BodyPart part, double padding) {
  std::vector<bool> is_upper(kps.size(), false);
  for (int j : upper_joints) {
    if (j >= 0 && j < static_cast<int>(kps.size())) is_upper[j] = true;
  }
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int count = 0;
  for (std::size_t j = 0; j < kps.size(); ++j) {
    if (kps[j].v <= 0) continue;
    if (is_upper[j] != (part == BodyPart::kUpper)) continue;
    if (count == 0) {
      x0 = x1 = kps[j].x;
      y0 = y1 = kps[j].y;
    } else {
      x0 = std::min(x0, kps[j].x);
      x1 = std::max(x1, kps[j].x);
      y0 = std::min(y0, kps[j].y);
      y1 = std::max(y1, kps[j].y);
    }
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double side = std::max(x1 - x0, y1 - y0) * padding;
  if (!(side > 0)) return std::nullopt;
  return PersonBox{(x0 + x1) / 2, (y0 + y1) / 2, side};
}

std::optional<PersonBox> half_body(const KeypointSet& kps, Rng& rng,
                                   const AugmentPolicy& policy,
                                   const std::vector<int>& upper_joints) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double gate = unit(rng);
  const double coin = unit(rng);
  const int labeled = static_cast<int>(std::count_if(
      kps.begin(), kps.end(), [](const Keypoint& k) { return k.v > 0; }));
  if (gate >= policy.p_half_body || labeled < policy.half_body_min_joints) {
    return std::nullopt;
  }
  const BodyPart first = coin < 0.5 ? BodyPart::kUpper : BodyPart::kLower;
  const BodyPart second =
      first == BodyPart::kUpper ? BodyPart::kLower : BodyPart::kUpper;
  if (auto box = body_part_box(kps, upper_joints, first,
                               policy.half_body_padding)) {
    return box;
  }
  return body_part_box(kps, upper_joints, second, policy.half_body_padding);
}

}  // namespace sfm
