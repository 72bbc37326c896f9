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

#include <cstdint>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include "sfm/blocks.hpp"
#include "sfm/complexity.hpp"
#include "sfm/model_graph.hpp"

namespace sfm {
namespace {

using namespace oracle;

TEST(Complexity, SingleConvClosedForm) {
  ProgramBuilder b(3, 256, 256);
  const Program p = std::move(b).finish(b.conv("c", b.input(), 8, 3, 1, true));
  const auto r = count_complexity(p);
  EXPECT_EQ(r.params, 224u);
  EXPECT_EQ(r.flops, 14155776u);
}

TEST(Complexity, EmptyProgramIsZero) {
  ProgramBuilder b(3, 8, 8);
  const Program p = std::move(b).finish(b.input());
  const auto r = count_complexity(p);
  EXPECT_EQ(r.params, 0u);
  EXPECT_EQ(r.flops, 0u);
}

TEST(Complexity, StridedConvBnRelu) {
  ProgramBuilder b(3, 16, 16);
  Value x = b.conv("c", b.input(), 4, 3, 2, false);
  x = b.relu(b.batch_norm("bn", x));
  const auto r = count_complexity(std::move(b).finish(x));
  EXPECT_EQ(r.params, conv_params(4, 3, 3, false) + 8);
  EXPECT_EQ(r.flops, conv_flops(4, 3, 3, 8, 8) + 2 * 4 * 64);
}

TEST(Complexity, HsaBlock) {
  const auto r = count_complexity(hsa_program({4, 8, 8}));
  const Cost c = hsa_cost(4, 8);
  EXPECT_EQ(r.params, c.params);
  EXPECT_EQ(r.flops, c.flops);
}

TEST(Complexity, ConcatFuse) {
  const auto r =
      count_complexity(fuse_program({6, 10, 10}, {6, 10, 10}, FusionMode::kConcat));
  EXPECT_EQ(r.params, conv_params(6, 12, 1, true));
  EXPECT_EQ(r.flops, conv_flops(6, 12, 1, 10, 10));
}

TEST(Complexity, MinimalModelMatchesLayerSum) {
  ModelConfig c;
  c.levels = 1;
  c.columns = 1;
  c.channel_multipliers = {1};
  c.base_channels = 8;
  c.num_joints = 5;
  c.input_size = 64;
  c.output_size = 32;
  const u64 ch = 8, s = 32, j = 5;
  Cost total;
  total.params = conv_params(ch, 3, 3, false) + 2 * ch;
  total.flops = conv_flops(ch, 3, 3, s, s) + 2 * ch * s * s;
  const Cost blk = block_cost(ch, s), hsa = hsa_cost(ch, s);
  total.params += blk.params + hsa.params + conv_params(j, ch, 1, true);
  total.flops += blk.flops + hsa.flops + conv_flops(j, ch, 1, s, s);
  const auto r = count_complexity(build_graph(c));
  EXPECT_EQ(r.params, total.params);
  EXPECT_EQ(r.flops, total.flops);
}

TEST(Complexity, TotalsEqualBreakdownAndTrainableCount) {
  const ModelGraph g = build_graph(ModelConfig{});
  const auto r = count_complexity(g);
  u64 p = 0, f = 0;
  for (const auto& e : r.breakdown) {
    p += e.params;
    f += e.flops;
  }
  EXPECT_EQ(p, r.params);
  EXPECT_EQ(f, r.flops);
  u64 trainable = 0;
  for (const auto& s : g.param_specs()) {
    if (s.kind == ParamKind::kTrainable) trainable += s.count();
  }
  EXPECT_EQ(trainable, r.params);
}

TEST(Complexity, DefaultConfigInBand) {
  const auto r = count_complexity(build_graph(ModelConfig{}));
  EXPECT_GE(r.params, 1'200'000u);
  EXPECT_LE(r.params, 1'800'000u);
  EXPECT_GE(r.flops, 1'200'000'000u);
  EXPECT_LE(r.flops, 2'200'000'000u);
}

TEST(Complexity, JsonIsByteStable) {
  const auto a = count_complexity(build_graph(ModelConfig{})).to_json();
  const auto b = count_complexity(build_graph(ModelConfig{})).to_json();
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace sfm
