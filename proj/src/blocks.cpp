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

#include "sfm/blocks.hpp"

#include <array>

#include "sfm/executor.hpp"

namespace sfm {

const char* fusion_name(FusionMode mode) {
  return mode == FusionMode::kConcat ? "concat" : "add";
}

Value build_forward_block(ProgramBuilder& b, const std::string& name,
                          Value x) {
  const int c = x.shape.c;
  Value y = b.conv(name + ".conv1", x, c, 3, 1, false);
  y = b.relu(b.batch_norm(name + ".bn1", y));
  y = b.conv(name + ".conv2", y, c, 3, 1, false);
  y = b.batch_norm(name + ".bn2", y);
  return b.relu(b.add(y, x));
}

Value build_fuse(ProgramBuilder& b, const std::string& name, Value x_l,
                 Value x_history, FusionMode mode) {
  if (x_l.shape.h != x_history.shape.h || x_l.shape.w != x_history.shape.w) {
    throw ShapeError("fuse '" + name + "': spatial sizes differ (" +
                     std::to_string(x_l.shape.h) + "x" +
                     std::to_string(x_l.shape.w) + " vs " +
                     std::to_string(x_history.shape.h) + "x" +
                     std::to_string(x_history.shape.w) + ")");
  }
  if (mode == FusionMode::kAdd) return b.add(x_l, x_history);
  Value cat = b.concat(x_l, x_history);
  return b.conv(name + ".conv", cat, x_l.shape.c, 1, 1, true);
}

Value build_theta(ProgramBuilder& b, const std::string& name, Value f) {
  Value pooled = f.shape.c == 1 ? b.duplicate(f) : b.channel_pool(f);
  Value logits = b.conv(name + ".conv", pooled, 1, kThetaKernel, 1, true);
  return b.tanh(logits);
}

HsaValues build_hsa(ProgramBuilder& b, const std::string& name, Value f) {
  HsaValues v;
  v.attention = build_theta(b, name + ".theta1", f);
  v.deeper_attention = build_theta(b, name + ".theta2", v.attention);
  v.output = b.attention_combine(f, v.attention, v.deeper_attention);
  return v;
}

Program fuse_program(SlotShape x_l, SlotShape x_history, FusionMode mode) {
  ProgramBuilder b(std::vector<SlotShape>{x_l, x_history});
  b.set_scope("fuse");
  Value out = build_fuse(b, "fuse", b.input(0), b.input(1), mode);
  return std::move(b).finish(out);
}

Program theta_program(SlotShape f) {
  ProgramBuilder b(std::vector<SlotShape>{f});
  b.set_scope("theta");
  Value out = build_theta(b, "theta", b.input());
  return std::move(b).finish(out);
}

Program hsa_program(SlotShape f) {
  ProgramBuilder b(std::vector<SlotShape>{f});
  b.set_scope("hsa");
  Value out = build_hsa(b, "hsa", b.input()).output;
  return std::move(b).finish(out);
}

Program forward_block_program(SlotShape x) {
  ProgramBuilder b(std::vector<SlotShape>{x});
  b.set_scope("block");
  Value out = build_forward_block(b, "block", b.input());
  return std::move(b).finish(out);
}

namespace {

SlotShape slot_of(const Shape& s) { return SlotShape{s.c, s.h, s.w}; }

}  // namespace

template <typename T>
Tensor<T> fuse(const Tensor<T>& x_l, const Tensor<T>& x_history,
               FusionMode mode, const ParameterStore<T>& params) {
  if (x_l.n() != x_history.n()) {
    throw ShapeError("fuse: batch sizes differ");
  }
  const Program p =
      fuse_program(slot_of(x_l.shape()), slot_of(x_history.shape()), mode);
  const std::array<Tensor<T>, 2> inputs{x_l, x_history};
  return forward<T>(p, params, std::span<const Tensor<T>>(inputs));
}

template <typename T>
Tensor<T> spatial_attention_theta(const Tensor<T>& f,
                                  const ParameterStore<T>& params) {
  return forward<T>(theta_program(slot_of(f.shape())), params, f);
}

template <typename T>
Tensor<T> hsa_forward(const Tensor<T>& f_in, const ParameterStore<T>& params) {
  return forward<T>(hsa_program(slot_of(f_in.shape())), params, f_in);
}

#define SFM_INSTANTIATE(T)                                                   \
  template Tensor<T> fuse<T>(const Tensor<T>&, const Tensor<T>&, FusionMode, \
                             const ParameterStore<T>&);                      \
  template Tensor<T> spatial_attention_theta<T>(const Tensor<T>&,            \
                                                const ParameterStore<T>&);   \
  template Tensor<T> hsa_forward<T>(const Tensor<T>&,                        \
                                    const ParameterStore<T>&);

SFM_INSTANTIATE(float)
SFM_INSTANTIATE(double)
#undef SFM_INSTANTIATE

}  // namespace sfm
