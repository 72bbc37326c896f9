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

#include "sfm/image.hpp"

#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sfm/errors.hpp"

namespace sfm {

float Image::sample(double x, double y, int ch) const {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= width || yi >= height) return 0.0;
    return at(xi, yi, ch);
  };
  const double top = px(x0, y0) * (1 - fx) + px(x0 + 1, y0) * fx;
  const double bottom = px(x0, y0 + 1) * (1 - fx) + px(x0 + 1, y0 + 1) * fx;
  return static_cast<float>(top * (1 - fy) + bottom * fy);
}

Image load_image(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error("cannot read image '" + path + "'");
  Image img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        img.at(x, y, ch) = row[x][2 - ch] / 255.0f;
      }
    }
  }
  return img;
}

void save_image(const Image& image, const std::string& path) {
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        const float v = std::clamp(image.at(x, y, ch), 0.0f, 1.0f);
        row[x][2 - ch] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  if (!cv::imwrite(path, bgr)) throw Error("cannot write image '" + path + "'");
}

void image_to_tensor(const Image& image, Tensor<float>& batch, int index) {
  if (batch.c() != 3 || batch.h() != image.height || batch.w() != image.width) {
    throw ShapeError("image does not fit batch slot");
  }
  for (int ch = 0; ch < 3; ++ch) {
    float* plane = batch.plane(index, ch);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        plane[y * image.width + x] =
            (image.at(x, y, ch) - kPixelMean[ch]) / kPixelStd[ch];
      }
    }
  }
}

Image flip_image(const Image& image) {
  Image out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(image.width - 1 - x, y, ch) = image.at(x, y, ch);
      }
    }
  }
  return out;
}

void draw_keypoints(Image& image, const KeypointSet& kps,
                    const std::vector<std::pair<int, int>>& skeleton) {
  cv::Mat canvas(image.height, image.width, CV_32FC3, image.pixels.data());
  auto color = [](int j) {
    const float hue = static_cast<float>((j * 47) % 360);
    cv::Mat3f hsv(1, 1, cv::Vec3f(hue, 1.0f, 1.0f));
    cv::Mat3f rgb;
    cv::cvtColor(hsv, rgb, cv::COLOR_HSV2RGB);
    const cv::Vec3f c = rgb(0, 0);
    return cv::Scalar(c[0], c[1], c[2]);
  };
  auto pt = [&](const Keypoint& k) {
    return cv::Point(static_cast<int>(std::lround(k.x)),
                     static_cast<int>(std::lround(k.y)));
  };
  for (const auto& [a, b] : skeleton) {
    if (a >= static_cast<int>(kps.size()) || b >= static_cast<int>(kps.size())) {
      continue;
    }
    if (kps[a].v > 0 && kps[b].v > 0) {
      cv::line(canvas, pt(kps[a]), pt(kps[b]), cv::Scalar(1, 1, 1), 1,
               cv::LINE_AA);
    }
  }
  for (std::size_t j = 0; j < kps.size(); ++j) {
    if (kps[j].v <= 0) continue;
    cv::circle(canvas, pt(kps[j]), 3, color(static_cast<int>(j)), 1,
               cv::LINE_AA);
  }
}

}  // namespace sfm
