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

#ifndef SFM_AUGMENT_HPP_
#define SFM_AUGMENT_HPP_

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "sfm/codec.hpp"
#include "sfm/image.hpp"
#include "sfm/kv_config.hpp"
#include "sfm/random.hpp"

namespace sfm {

struct AugmentPolicy {
  double p_rotate = 0.6;
  double max_rotation = 30.0;  // degrees, symmetric range
  double p_scale = 1.0;
  double scale_min = 0.75;
  double scale_max = 1.25;
  double p_flip = 0.5;
  double p_half_body = 0.3;
  int half_body_min_joints = 8;
  double half_body_padding = 1.5;

  // Every probability set to zero: crops are taken as annotated.
  static AugmentPolicy none();

  void validate() const;
  KeyValueDoc to_doc() const;  // "augment." keys
  static AugmentPolicy from_doc(const KeyValueDoc& doc);
  static const std::vector<std::string>& keys();
  bool operator==(const AugmentPolicy&) const = default;
};

struct AugmentParams {
  double rotation = 0.0;  // degrees
  double scale = 1.0;
  bool flip = false;
  bool half_body = false;
  double center_x = 0.0;
  double center_y = 0.0;
  double box_scale = 0.0;  // side of the square person box, source pixels
};

// Draws rotation, scale and flip. Centre and box are filled by the caller
// from the sample (and possibly replaced by half_body).
AugmentParams sample_params(Rng& rng, const AugmentPolicy& policy);

// 2x3 matrix [a b c; d e f] mapping source (x, y) to crop coordinates.
class AffineTransform {
 public:
  AffineTransform() = default;
  explicit AffineTransform(std::array<double, 6> m) : m_(m) {}
  static AffineTransform identity() {
    return AffineTransform({1, 0, 0, 0, 1, 0});
  }

  std::pair<double, double> apply(double x, double y) const {
    return {m_[0] * x + m_[1] * y + m_[2], m_[3] * x + m_[4] * y + m_[5]};
  }
  double determinant() const { return m_[0] * m_[4] - m_[1] * m_[3]; }
  AffineTransform inverse() const;
  // (this * other)(p) = this(other(p)).
  AffineTransform compose(const AffineTransform& other) const;
  const std::array<double, 6>& matrix() const { return m_; }

 private:
  std::array<double, 6> m_{1, 0, 0, 0, 1, 0};
};

// translate(-centre) -> rotate -> scale so the box spans out_size ->
// translate(+out_size/2). Throws ConfigError for a non-positive box.
AffineTransform build_affine(const AugmentParams& params, int out_size = 256);

struct WarpedSample {
  Image image;
  KeypointSet kps;
};

// Bilinear warp plus the same mapping of keypoints; optional mirror of the
// crop with paired joints swapped. Visible joints that leave the crop are
// marked occluded (v = 1); the encoder then flags them.
WarpedSample apply(const Image& image, const KeypointSet& kps,
                   const AffineTransform& t, bool flip, const FlipPairs& pairs,
                   int out_size = 256);

// Mirrors crop-space keypoints and swaps pairs.
KeypointSet flip_keypoints(const KeypointSet& kps, const FlipPairs& pairs,
                           int width);

struct PersonBox {
  double center_x = 0.0;
  double center_y = 0.0;
  double box_scale = 0.0;
};

enum class BodyPart { kUpper, kLower };

// Box around the labeled joints of one body part, padded; nullopt when
// fewer than two such joints exist or they are coincident.
std::optional<PersonBox> body_part_box(const KeypointSet& kps,
                                       const std::vector<int>& upper_joints,
                                       BodyPart part, double padding);

// With probability p_half_body and at least half_body_min_joints labeled
// joints, re-centres the box on the upper or lower body (fair coin, falling
// back to the other part when the chosen one has fewer than two joints).
std::optional<PersonBox> half_body(const KeypointSet& kps, Rng& rng,
                                   const AugmentPolicy& policy,
                                   const std::vector<int>& upper_joints);

}  // namespace sfm

#endif  // SFM_AUGMENT_HPP_
