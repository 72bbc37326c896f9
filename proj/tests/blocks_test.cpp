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

#include <cmath>

#include <gtest/gtest.h>

#include "sfm/blocks.hpp"
#include "sfm/errors.hpp"
#include "sfm/executor.hpp"
#include "test_util.hpp"

namespace sfm {
namespace {

using testing::gradient_check;
using testing::random_tensor;
using testing::randomize;

TEST(Theta, ZeroParamsGiveZeroMap) {
  const Program p = theta_program({5, 6, 7});
  const auto params = ParameterStore<double>::zeros(p.param_specs());
  const auto f = random_tensor<double>({2, 5, 6, 7}, 1);
  const auto m = spatial_attention_theta(f, params);
  EXPECT_EQ(m.shape(), (Shape{2, 1, 6, 7}));
  for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(Theta, StaysInsideTanhRange) {
  const Program p = theta_program({4, 9, 9});
  auto params = ParameterStore<double>::zeros(p.param_specs());
  randomize(params, 3, 5.0);
  const auto f = random_tensor<double>({1, 4, 9, 9}, 4, -10, 10);
  const auto m = spatial_attention_theta(f, params);
  for (double v : m.values()) {
    EXPECT_LE(std::abs(v), 1.0);
  }
}

TEST(Theta, SinglePixelMatchesHandEvaluation) {
  const Program p = theta_program({3, 1, 1});
  auto params = ParameterStore<double>::zeros(p.param_specs());
  // Only the kernel centre overlaps a 1x1 input.
  auto& w = params.values("theta.conv.weight");
  ASSERT_EQ(w.size(), 2u * 49u);
  w[24] = 0.7;        // mean channel
  w[49 + 24] = -0.3;  // max channel
  w[0] = 100.0;       // off-centre taps see only padding
  params.values("theta.conv.bias")[0] = 0.1;
  Tensor<double> f(Shape{1, 3, 1, 1});
  f.at(0, 0, 0, 0) = 1.0;
  f.at(0, 1, 0, 0) = -2.0;
  f.at(0, 2, 0, 0) = 4.0;
  const double mean = 1.0, max = 4.0;
  const double expected = std::tanh(0.7 * mean - 0.3 * max + 0.1);
  EXPECT_NEAR(spatial_attention_theta(f, params).at(0, 0, 0, 0), expected,
              1e-15);
}

TEST(Hsa, ZeroTheta1IsBitwiseIdentity) {
  const Program p = hsa_program({6, 8, 8});
  auto params = ParameterStore<float>::zeros(p.param_specs());
  randomize(params, 5, 1.0);
  for (auto& e : params.entries()) {
    if (e.spec.name.rfind("hsa.theta1.", 0) == 0) {
      std::fill(e.values.begin(), e.values.end(), 0.0f);
    }
  }
  const auto f = random_tensor<float>({2, 6, 8, 8}, 6, -3, 3);
  EXPECT_EQ(hsa_forward(f, params), f);
}

TEST(Hsa, ScalarCaseWithForcedMaps) {
  const Program p = hsa_program({1, 1, 1});
  auto params = ParameterStore<double>::zeros(p.param_specs());
  params.values("hsa.theta1.conv.bias")[0] = std::atanh(0.5);
  params.values("hsa.theta2.conv.bias")[0] = std::atanh(0.25);
  Tensor<double> f({1, 1, 1, 1}, 2.0);
  EXPECT_NEAR(hsa_forward(f, params).at(0, 0, 0, 0), 3.25, 1e-12);
}

TEST(Hsa, AttentionCombineScalar) {
  ProgramBuilder b({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  const Program p =
      std::move(b).finish(b.attention_combine(b.input(0), b.input(1), b.input(2)));
  const ParameterStore<double> none;
  std::vector<Tensor<double>> in{Tensor<double>({1, 1, 1, 1}, 2.0),
                                 Tensor<double>({1, 1, 1, 1}, 0.5),
                                 Tensor<double>({1, 1, 1, 1}, 0.25)};
  const auto out =
      forward<double>(p, none, std::span<const Tensor<double>>(in));
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0, 0), 3.25);
}

TEST(Hsa, KeepsShapeAndBound) {
  const Program p = hsa_program({64, 16, 16});
  auto params = ParameterStore<double>::zeros(p.param_specs());
  randomize(params, 7, 1.0);
  const auto f = random_tensor<double>({1, 64, 16, 16}, 8);
  const auto out = hsa_forward(f, params);
  ASSERT_EQ(out.shape(), f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_LE(std::abs(out.data()[i]), 3.0 * std::abs(f.data()[i]) + 1e-12);
  }
}

TEST(Hsa, SeparateThetaWeights) {
  const Program p = hsa_program({4, 5, 5});
  const auto params = ParameterStore<float>::zeros(p.param_specs());
  EXPECT_TRUE(params.contains("hsa.theta1.conv.weight"));
  EXPECT_TRUE(params.contains("hsa.theta2.conv.weight"));
}

TEST(Fuse, AddIsElementwiseSum) {
  const auto params = ParameterStore<double>::zeros(
      fuse_program({3, 4, 4}, {3, 4, 4}, FusionMode::kAdd).param_specs());
  const auto a = random_tensor<double>({2, 3, 4, 4}, 9);
  const auto sum = fuse(a, a, FusionMode::kAdd, params);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(sum.data()[i], 2.0 * a.data()[i]);
  }
  EXPECT_EQ(fuse(a, Tensor<double>(a.shape()), FusionMode::kAdd, params), a);
}

TEST(Fuse, ConcatWithSelectingKernelReturnsFirstInput) {
  const Program p = fuse_program({8, 32, 32}, {8, 32, 32}, FusionMode::kConcat);
  auto params = ParameterStore<double>::zeros(p.param_specs());
  auto& w = params.values("fuse.conv.weight");
  ASSERT_EQ(w.size(), 8u * 16u);
  for (int o = 0; o < 8; ++o) w[o * 16 + o] = 1.0;
  const auto a = random_tensor<double>({1, 8, 32, 32}, 10);
  const auto h = random_tensor<double>({1, 8, 32, 32}, 11);
  EXPECT_EQ(fuse(a, h, FusionMode::kConcat, params), a);
}

TEST(Fuse, RejectsSpatialMismatch) {
  EXPECT_THROW(fuse_program({4, 8, 8}, {4, 4, 4}, FusionMode::kAdd), ShapeError);
  EXPECT_THROW(fuse_program({4, 8, 8}, {4, 8, 4}, FusionMode::kConcat),
               ShapeError);
}

TEST(Fuse, AddRejectsChannelMismatch) {
  EXPECT_THROW(fuse_program({4, 8, 8}, {3, 8, 8}, FusionMode::kAdd), ShapeError);
}

TEST(Backward, SingleConvScalarGradientIsInput) {
  ProgramBuilder b(1, 1, 1);
  const Program p = std::move(b).finish(b.conv("c", b.input(), 1, 1, 1, false));
  auto params = ParameterStore<double>::zeros(p.param_specs());
  params.values("c.weight")[0] = 0.3;
  const Tensor<double> x({1, 1, 1, 1}, 1.7);
  const auto trace = forward_trace<double>(p, params, x, Phase::kEval);
  const auto g = backward<double>(p, params, trace, Tensor<double>({1, 1, 1, 1}, 1.0));
  EXPECT_DOUBLE_EQ(g.params.values("c.weight")[0], 1.7);
  EXPECT_DOUBLE_EQ(g.inputs[0].at(0, 0, 0, 0), 0.3);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  const Program p = hsa_program({3, 6, 6});
  auto params = ParameterStore<double>::zeros(p.param_specs());
  randomize(params, 12, 0.5);
  const auto x = random_tensor<double>({2, 3, 6, 6}, 13);
  const auto trace = forward_trace<double>(p, params, x, Phase::kEval);
  const auto g = backward<double>(p, params, trace,
                                  Tensor<double>(trace.output().shape()));
  for (const auto& e : g.params.entries()) {
    for (double v : e.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(GradCheck, Hsa) {
  const Program p = hsa_program({4, 8, 8});
  auto params = ParameterStore<double>::zeros(p.param_specs());
  randomize(params, 14, 0.3);
  const auto r = gradient_check(p, params, {random_tensor<double>({2, 4, 8, 8}, 15)},
                                Phase::kTrain);
  EXPECT_GE(r.pass_rate(), 0.99) << "worst " << r.worst;
}

TEST(GradCheck, FuseConcat) {
  const Program p = fuse_program({3, 6, 6}, {3, 6, 6}, FusionMode::kConcat);
  auto params = ParameterStore<double>::zeros(p.param_specs());
  randomize(params, 16, 0.5);
  const auto r = gradient_check(
      p, params,
      {random_tensor<double>({2, 3, 6, 6}, 17), random_tensor<double>({2, 3, 6, 6}, 18)},
      Phase::kTrain);
  EXPECT_GE(r.pass_rate(), 0.99) << "worst " << r.worst;
}

TEST(GradCheck, FuseAdd) {
  const Program p = fuse_program({3, 6, 6}, {3, 6, 6}, FusionMode::kAdd);
  const auto params = ParameterStore<double>::zeros(p.param_specs());
  const auto r = gradient_check(
      p, params,
      {random_tensor<double>({2, 3, 6, 6}, 19), random_tensor<double>({2, 3, 6, 6}, 20)},
      Phase::kTrain);
  EXPECT_GE(r.pass_rate(), 0.99) << "worst " << r.worst;
}

TEST(GradCheck, ForwardBlockTrainPhase) {
  const Program p = forward_block_program({4, 6, 6});
  auto params = initialize_params<double>(p, 21);
  randomize(params, 22, 0.3);
  const auto r = gradient_check(p, params, {random_tensor<double>({3, 4, 6, 6}, 23)},
                                Phase::kTrain);
  EXPECT_GE(r.pass_rate(), 0.99) << "worst " << r.worst;
}

}  // namespace
}  // namespace sfm
