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

#ifndef SFM_TENSOR_HPP_
#define SFM_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sfm/errors.hpp"

namespace sfm {

// NCHW extent. A single feature map is a tensor with n == 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

// Dense row-major NCHW array owning its storage.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
      throw ShapeError("tensor extents must be >= 1, got " + shape.str());
    }
  }
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  // Pointer to the H*W plane of (sample, channel).
  T* plane(int n, int c) {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) *
                              shape_.plane();
  }
  const T* plane(int n, int c) const {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) *
                              shape_.plane();
  }
  // Pointer to the C*H*W block of one sample.
  T* sample(int n) { return plane(n, 0); }
  const T* sample(int n) const { return plane(n, 0); }

  T& at(int n, int c, int y, int x) {
    return plane(n, c)[static_cast<std::size_t>(y) * shape_.w + x];
  }
  const T& at(int n, int c, int y, int x) const {
    return plane(n, c)[static_cast<std::size_t>(y) * shape_.w + x];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.data()[i] = static_cast<To>(t.data()[i]);
  }
  return out;
}

}  // namespace sfm

#endif  // SFM_TENSOR_HPP_
