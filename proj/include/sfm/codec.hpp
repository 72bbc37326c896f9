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

#ifndef SFM_CODEC_HPP_
#define SFM_CODEC_HPP_

#include <utility>
#include <vector>

#include "sfm/tensor.hpp"

namespace sfm {

// Visibility follows the COCO convention: 0 unlabeled, 1 labeled but
// occluded, 2 visible. Anything > 0 is treated as labeled.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  int v = 0;
  bool operator==(const Keypoint&) const = default;
};

using KeypointSet = std::vector<Keypoint>;

// Left/right joint pairs swapped by horizontal mirroring.
class FlipPairs {
 public:
  FlipPairs() = default;
  explicit FlipPairs(std::vector<std::pair<int, int>> pairs)
      : pairs_(std::move(pairs)) {}

  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  // Throws ValidationError unless indices are distinct and in [0, joints).
  void validate(int joints) const;
  // perm[j] is the joint that j becomes after mirroring.
  std::vector<int> permutation(int joints) const;

 private:
  std::vector<std::pair<int, int>> pairs_;
};

// (1, J, H, W) per-joint response maps.
using HeatmapStack = Tensor<float>;

struct EncodedTargets {
  HeatmapStack maps;
  std::vector<float> weights;  // 1 for encoded joints, 0 otherwise
  std::vector<bool> flagged;   // labeled joint whose pixel fell off the map
};

// Gaussian targets centred on each labeled joint's nearest pixel, so every
// encoded map peaks at exactly 1 on that pixel.
EncodedTargets encode(const KeypointSet& kps, double sigma, int size);

struct DecodeOptions {
  bool blur = true;
  int blur_size = 5;
  double blur_sigma = 1.0;
};

struct DecodedKeypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

// Per joint: argmax of the blurred map (row-major first occurrence), then a
// quarter-pixel shift per axis toward the larger of the two raw neighbours
// (no shift on ties or at the border). Confidence is the raw value at the
// argmax. An all-zero map decodes to the centre pixel with confidence 0.
std::vector<DecodedKeypoint> decode(const HeatmapStack& hm,
                                    const DecodeOptions& options = {});

// Separable Gaussian blur of one H x W plane; border pixels are replicated
// (aaa|abcd).
std::vector<float> gaussian_blur(const float* plane, int height, int width,
                                 int size, double sigma);
std::vector<double> gaussian_kernel(int size, double sigma);

// Mirrors every map horizontally and swaps paired channels.
HeatmapStack flip_heatmaps(const HeatmapStack& hm, const FlipPairs& pairs);

// Average of hm and the un-flipped, channel-swapped hm_flipped.
HeatmapStack flip_merge(const HeatmapStack& hm, const HeatmapStack& hm_flipped,
                        const FlipPairs& pairs);

// Pixel-centre conversion between heatmap and network-input coordinates for
// an integer stride.
inline double heatmap_to_input(double u, int stride) {
  return (u + 0.5) * stride - 0.5;
}
inline double input_to_heatmap(double x, int stride) {
  return (x + 0.5) / stride - 0.5;
}

}  // namespace sfm

#endif  // SFM_CODEC_HPP_
