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

#include <cstring>

#include <gtest/gtest.h>

#include "sfm/checkpoint.hpp"
#include "sfm/errors.hpp"
#include "test_util.hpp"

namespace sfm {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.levels = 2;
  c.columns = 2;
  c.num_joints = 3;
  c.base_channels = 4;
  c.channel_multipliers = {1, 2};
  c.input_size = 16;
  c.output_size = 8;
  return c;
}

Checkpoint sample_checkpoint() {
  const auto g = build_graph(small_config());
  Checkpoint ck;
  ck.config = small_config();
  ck.epoch = 3;
  ck.step = 17;
  ck.arrays = init_params<float>(g, 5);
  testing::randomize(ck.arrays, 6, 0.5);
  ck.arrays.add(ParamSpec{"adam.m/x", {2, 2}, ParamKind::kOptimizer},
                {1.f, -2.f, 3.5f, 0.f});
  return ck;
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto ck = sample_checkpoint();
  const auto bytes = encode_checkpoint(ck);
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.epoch, 3u);
  EXPECT_EQ(back.step, 17u);
  EXPECT_TRUE(back.arrays == ck.arrays);
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto ck = sample_checkpoint();
  const auto path = testing::temp_dir("ckpt") + "/a.ckpt";
  save_checkpoint(ck, path);
  const auto back = load_checkpoint(path);
  EXPECT_TRUE(back.arrays == ck.arrays);
}

TEST(Checkpoint, BadMagicRejected) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), ParseError);
}

TEST(Checkpoint, BadVersionRejected) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  const std::uint32_t v = kCheckpointVersion + 1;
  std::memcpy(bytes.data() + 8, &v, 4);
  EXPECT_THROW(decode_checkpoint(bytes), ParseError);
}

TEST(Checkpoint, TruncationRejectedAtEveryLength) {
  const auto bytes = encode_checkpoint(sample_checkpoint());
  for (std::size_t len = 0; len < bytes.size(); len += 97) {
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, len)), ParseError) << len;
  }
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)),
               ParseError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), ParseError);
}

TEST(Checkpoint, MissingFileIsAnError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), Error);
}

TEST(Checkpoint, ModelParamsDropsOptimizerState) {
  const auto ck = sample_checkpoint();
  const auto g = build_graph(ck.config);
  const auto p = model_params(ck, g);
  EXPECT_FALSE(p.contains("adam.m/x"));
  EXPECT_EQ(p.size(), ck.arrays.size() - 1);
  EXPECT_NO_THROW(check_params(g.program(), p));
}

TEST(Checkpoint, ModelParamsNeedsEveryArray) {
  auto ck = sample_checkpoint();
  ParameterStore<float> partial;
  for (const auto& e : ck.arrays.entries()) {
    if (e.spec.name != "head.conv.bias") partial.add(e.spec, e.values);
  }
  ck.arrays = partial;
  EXPECT_THROW(model_params(ck, build_graph(ck.config)), ConfigError);
}

}  // namespace
}  // namespace sfm
