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

#ifndef SFM_BLOCKS_HPP_
#define SFM_BLOCKS_HPP_

#include <string>

#include "sfm/params.hpp"
#include "sfm/program.hpp"
#include "sfm/tensor.hpp"

namespace sfm {

enum class FusionMode { kConcat, kAdd };

const char* fusion_name(FusionMode mode);

// Residual feature extractor that keeps channels and resolution:
// relu(x + bn(conv3x3(relu(bn(conv3x3(x)))))).
Value build_forward_block(ProgramBuilder& b, const std::string& name, Value x);

// Fuses the running feature x_l with a same-scale history feature.
// kAdd: elementwise sum (channels must agree).
// kConcat: channel concat followed by a biased 1x1 conv back to x_l's
// channel count.
// Never resamples: differing spatial sizes raise ShapeError.
Value build_fuse(ProgramBuilder& b, const std::string& name, Value x_l,
                 Value x_history, FusionMode mode);

// Attention map of a feature: channel mean and channel max (or the single
// channel duplicated), 7x7 conv to one channel, tanh.
Value build_theta(ProgramBuilder& b, const std::string& name, Value f);

struct HsaValues {
  Value attention;         // first-order map
  Value deeper_attention;  // map of the map
  Value output;
};

// Second-order spatial attention with shortcut:
//   m = theta1(f), m2 = theta2(m), out = f + f * (m + m * m2).
HsaValues build_hsa(ProgramBuilder& b, const std::string& name, Value f);

inline constexpr int kThetaKernel = 7;

// Programs wrapping a single block, with parameter prefixes "fuse",
// "theta" and "hsa". Useful for standalone evaluation and tests.
Program fuse_program(SlotShape x_l, SlotShape x_history, FusionMode mode);
Program theta_program(SlotShape f);
Program hsa_program(SlotShape f);
Program forward_block_program(SlotShape x);

// Standalone evaluations. Tensors may carry any batch size.
template <typename T>
Tensor<T> fuse(const Tensor<T>& x_l, const Tensor<T>& x_history,
               FusionMode mode, const ParameterStore<T>& params);

template <typename T>
Tensor<T> spatial_attention_theta(const Tensor<T>& f,
                                  const ParameterStore<T>& params);

template <typename T>
Tensor<T> hsa_forward(const Tensor<T>& f_in, const ParameterStore<T>& params);

}  // namespace sfm

#endif  // SFM_BLOCKS_HPP_
