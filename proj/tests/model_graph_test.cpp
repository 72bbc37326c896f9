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

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "sfm/errors.hpp"
#include "sfm/executor.hpp"
#include "sfm/model_graph.hpp"
#include "test_util.hpp"

namespace sfm {
namespace {

using testing::gradient_check;
using testing::random_tensor;
using testing::randomize;

ModelConfig tiny(int levels, int columns) {
  ModelConfig c;
  c.levels = levels;
  c.columns = columns;
  c.num_joints = 3;
  c.base_channels = 4;
  c.channel_multipliers.clear();
  for (int l = 0; l < levels; ++l) c.channel_multipliers.push_back(1 << l);
  c.input_size = 16;
  c.output_size = 8;
  return c;
}

TEST(ModelGraph, DefaultHasBridgesAndFourHsaBlocks) {
  const ModelGraph g = build_graph(ModelConfig{});
  EXPECT_GT(g.count_edges(EdgeKind::kBridge), 0u);
  EXPECT_EQ(g.hsa_nodes().size(), 4u);
  EXPECT_EQ(g.output_node(), (NodeId{1, 4}));
  EXPECT_EQ(g.program().output_shape(1), (Shape{1, 16, 128, 128}));
  EXPECT_EQ(g.nodes().size(), 16u);
}

TEST(ModelGraph, DefaultPlacementsAreDeepestAndOutputNodes) {
  const auto p = default_hsa_placements(4, 4);
  const std::vector<NodeId> expected{{1, 2}, {1, 4}, {4, 1}, {4, 3}};
  EXPECT_EQ(p, expected);
}

TEST(ModelGraph, EdgeInvariants) {
  const ModelGraph g = build_graph(ModelConfig{});
  for (const auto& e : g.edges()) {
    switch (e.kind) {
      case EdgeKind::kForward:
        EXPECT_EQ(e.src.level, e.dst.level);
        EXPECT_EQ(e.src.column + 1, e.dst.column);
        break;
      case EdgeKind::kDownsample:
        EXPECT_EQ(e.src.level + 1, e.dst.level);
        EXPECT_EQ(e.src.column, e.dst.column);
        break;
      case EdgeKind::kUpsample:
        EXPECT_EQ(e.src.level - 1, e.dst.level);
        EXPECT_EQ(e.src.column, e.dst.column);
        break;
      case EdgeKind::kBridge:
        EXPECT_EQ(e.src.level, e.dst.level);
        EXPECT_LT(e.src.column, e.dst.column);
        break;
    }
  }
}

TEST(ModelGraph, AblationEdgesAreStrictSubset) {
  ModelConfig off;
  off.bridges_enabled = false;
  off.hsa_enabled = false;
  const ModelGraph base = build_graph(off);
  const ModelGraph sfm = build_graph(ModelConfig{});
  const std::set<Edge> a(base.edges().begin(), base.edges().end());
  const std::set<Edge> b(sfm.edges().begin(), sfm.edges().end());
  EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  EXPECT_LT(a.size(), b.size());
  EXPECT_EQ(base.nodes(), sfm.nodes());
  EXPECT_EQ(base.count_edges(EdgeKind::kBridge), 0u);
  // The cascade is two plain down-up pyramids linked at level 1.
  for (const auto& e : b) {
    if (!a.count(e)) EXPECT_EQ(e.kind, EdgeKind::kBridge);
  }
}

TEST(ModelGraph, BridgeAdaptersAreTheOnlyParamDifference) {
  ModelConfig with;
  with.hsa_enabled = false;
  ModelConfig without = with;
  without.bridges_enabled = false;
  const auto pa = build_graph(with).program().param_specs();
  const auto pb = build_graph(without).program().param_specs();
  std::size_t adapter = 0, na = 0, nb = 0;
  for (const auto& s : pa) {
    if (s.kind != ParamKind::kTrainable) continue;
    na += s.count();
    if (s.name.find(".adapter.") != std::string::npos) adapter += s.count();
  }
  for (const auto& s : pb) {
    if (s.kind == ParamKind::kTrainable) nb += s.count();
  }
  EXPECT_EQ(na - nb, adapter);
}

TEST(ModelGraph, MinimalGridIsStemBlockHead) {
  ModelConfig c = tiny(1, 1);
  const ModelGraph g = build_graph(c);
  EXPECT_TRUE(g.edges().empty());
  EXPECT_EQ(g.nodes().size(), 1u);
  EXPECT_EQ(g.program().output_shape(2), (Shape{2, 3, 8, 8}));
}

TEST(ModelGraph, RejectsMismatchedFusionSizes) {
  ModelConfig c = tiny(3, 2);
  c.input_size = 20;
  c.output_size = 10;  // 10 -> 5 -> 3: 3 upsampled is 6, not 5
  EXPECT_THROW(build_graph(c), ConfigError);
}

TEST(ModelGraph, RejectsInvalidConfigs) {
  ModelConfig c;
  c.output_size = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.columns = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.hsa_placements = std::vector<NodeId>{{5, 1}};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.channel_multipliers = {1, 2};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelGraph, ConfigDocumentRoundTrips) {
  ModelConfig c;
  c.num_joints = 17;
  c.hsa_placements = std::vector<NodeId>{{2, 1}, {1, 4}};
  c.bridges_enabled = false;
  const KeyValueDoc doc = c.to_doc();
  EXPECT_EQ(ModelConfig::from_doc(KeyValueDoc::parse(doc.str())), c);
  EXPECT_EQ(doc.items().front().first, "model.levels");
  EXPECT_NE(c.digest(), ModelConfig{}.digest());
}

TEST(ModelGraph, UnknownModelKeyRejected) {
  EXPECT_THROW(ModelConfig::from_doc(KeyValueDoc::parse("model.width = 3\n")),
               ConfigError);
}

TEST(ModelGraph, ForwardIsDeterministicAndShaped) {
  const ModelGraph g = build_graph(tiny(2, 4));
  const auto params = init_params<float>(g, 1);
  const auto x = random_tensor<float>({2, 3, 16, 16}, 2);
  const auto a = forward(g, params, x);
  const auto b = forward(g, params, x);
  EXPECT_EQ(a.shape(), (Shape{2, 3, 8, 8}));
  EXPECT_EQ(a, b);
  for (float v : a.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(ModelGraph, ZeroParamsGiveConstantChannels) {
  const ModelGraph g = build_graph(tiny(2, 4));
  auto params = ParameterStore<float>::zeros(g.param_specs());
  // Keep normalization well defined: unit running variance.
  for (auto& e : params.entries()) {
    if (e.spec.name.ends_with(".running_var")) {
      std::fill(e.values.begin(), e.values.end(), 1.0f);
    }
  }
  params.values("head.conv.bias") = {0.5f, -1.0f, 2.0f};
  const auto out = forward(g, params, random_tensor<float>({1, 3, 16, 16}, 3));
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 64; ++i) {
      EXPECT_EQ(out.plane(0, c)[i], params.values("head.conv.bias")[c]);
    }
  }
}

TEST(ModelGraph, ParamShapeMismatchIsConfigError) {
  const ModelGraph g = build_graph(tiny(2, 2));
  ModelConfig wider = tiny(2, 2);
  wider.base_channels += 1;
  const ModelGraph other = build_graph(wider);
  const auto params = init_params<float>(other, 1);
  EXPECT_THROW(forward(g, params, random_tensor<float>({1, 3, 16, 16}, 3)),
               ConfigError);
}

TEST(GradCheck, TwoLevelMiniGraph) {
  ModelConfig c = tiny(2, 4);
  c.base_channels = 3;
  const ModelGraph g = build_graph(c);
  auto params = init_params<double>(g, 4);
  randomize(params, 5, 0.3);
  const auto r = gradient_check(g.program(), params,
                                {random_tensor<double>({2, 3, 16, 16}, 6)},
                                Phase::kTrain);
  EXPECT_GE(r.pass_rate(), 0.99) << "worst " << r.worst << " over " << r.checked;
}

}  // namespace
}  // namespace sfm
