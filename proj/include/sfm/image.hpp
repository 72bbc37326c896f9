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

#ifndef SFM_IMAGE_HPP_
#define SFM_IMAGE_HPP_

#include <array>
#include <string>
#include <vector>

#include "sfm/codec.hpp"
#include "sfm/tensor.hpp"

namespace sfm {

// Interleaved RGB, values in [0, 1], row-major; pixel (x, y) has its centre
// at coordinate (x, y).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // height * width * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h * 3) {}

  float& at(int x, int y, int ch) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }
  float at(int x, int y, int ch) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }
  // Bilinear sample; zero outside the image.
  float sample(double x, double y, int ch) const;

  bool operator==(const Image&) const = default;
};

Image load_image(const std::string& path);
// Format chosen from the extension (.png, .jpg, ...).
void save_image(const Image& image, const std::string& path);

// Mean/std normalization used for network input, RGB order.
inline constexpr std::array<float, 3> kPixelMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kPixelStd{0.229f, 0.224f, 0.225f};

// Writes the normalized image into sample `index` of a (N,3,H,W) tensor.
void image_to_tensor(const Image& image, Tensor<float>& batch, int index);

Image flip_image(const Image& image);

// Draws joint markers (and skeleton segments between labeled joints) in
// place. Colors cycle per joint.
void draw_keypoints(Image& image, const KeypointSet& kps,
                    const std::vector<std::pair<int, int>>& skeleton);

}  // namespace sfm

#endif  // SFM_IMAGE_HPP_
