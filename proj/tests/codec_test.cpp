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
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include "sfm/codec.hpp"
#include "sfm/errors.hpp"
#include "test_util.hpp"

namespace sfm {
namespace {

using namespace oracle;

HeatmapStack random_stack(std::uint64_t seed, int joints = 4, int size = 32) {
  return testing::random_tensor<float>({1, joints, size, size}, seed, 0.0, 1.0);
}

TEST(Encode, PeakAndNeighbourValue) {
  const auto t = encode({{64, 64, 2}}, 2.0, 128);
  EXPECT_EQ(t.maps.at(0, 0, 64, 64), 1.0f);
  EXPECT_NEAR(t.maps.at(0, 0, 64, 65), std::exp(-0.125), 1e-7);
  float max = 0;
  for (float v : t.maps.values()) max = std::max(max, v);
  EXPECT_EQ(max, 1.0f);
}

TEST(Encode, InvisibleJointIsZero) {
  const auto t = encode({{10, 10, 0}, {20, 20, 2}}, 2.0, 64);
  for (int i = 0; i < 64 * 64; ++i) EXPECT_EQ(t.maps.plane(0, 0)[i], 0.0f);
  EXPECT_EQ(t.weights[0], 0.0f);
  EXPECT_EQ(t.weights[1], 1.0f);
  EXPECT_FALSE(t.flagged[0]);
}

TEST(Encode, OffMapJointIsZeroAndFlagged) {
  const auto t = encode({{-3, 10, 2}, {10, 200, 1}}, 2.0, 64);
  EXPECT_TRUE(t.flagged[0]);
  EXPECT_TRUE(t.flagged[1]);
  EXPECT_EQ(t.weights[0], 0.0f);
  for (float v : t.maps.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Encode, DeterministicAndValidated) {
  const KeypointSet k{{3.3, 7.9, 2}, {30, 1, 1}};
  EXPECT_EQ(encode(k, 2.0, 32).maps, encode(k, 2.0, 32).maps);
  EXPECT_THROW(encode(k, 0.0, 32), ConfigError);
}

TEST(Decode, QuarterOffsetTowardLargerNeighbour) {
  HeatmapStack hm(Shape{1, 1, 20, 20});
  hm.at(0, 0, 10, 10) = 1.0f;
  hm.at(0, 0, 10, 11) = 0.9f;
  hm.at(0, 0, 10, 9) = 0.1f;
  hm.at(0, 0, 9, 10) = 0.2f;  // above
  hm.at(0, 0, 11, 10) = 0.3f;  // below
  const auto d = decode(hm, DecodeOptions{.blur = false});
  EXPECT_DOUBLE_EQ(d[0].x, 10.25);
  EXPECT_DOUBLE_EQ(d[0].y, 10.25);
  EXPECT_FLOAT_EQ(d[0].confidence, 1.0f);
}

TEST(Decode, SymmetricPeakHasNoOffset) {
  HeatmapStack hm(Shape{1, 1, 9, 9});
  hm.at(0, 0, 4, 4) = 1.0f;
  hm.at(0, 0, 4, 3) = hm.at(0, 0, 4, 5) = 0.5f;
  hm.at(0, 0, 3, 4) = hm.at(0, 0, 5, 4) = 0.5f;
  const auto d = decode(hm);
  EXPECT_EQ(d[0].x, 4.0);
  EXPECT_EQ(d[0].y, 4.0);
}

TEST(Decode, AllZeroMapGivesCentreWithZeroConfidence) {
  const auto d = decode(HeatmapStack(Shape{1, 2, 128, 128}));
  EXPECT_EQ(d[1].x, 64.0);
  EXPECT_EQ(d[1].y, 64.0);
  EXPECT_EQ(d[1].confidence, 0.0);
}

TEST(Decode, ConfidenceIsPreBlurValue) {
  HeatmapStack hm(Shape{1, 1, 16, 16});
  hm.at(0, 0, 8, 8) = 0.8f;
  const auto d = decode(hm);
  EXPECT_FLOAT_EQ(d[0].confidence, 0.8f);
}

TEST(Blur, MatchesDirectTwoDimensionalConvolution) {
  const auto hm = random_stack(3, 1, 12);
  const auto fast = gaussian_blur(hm.plane(0, 0), 12, 12, 5, 1.0);
  auto edge = [](int i, int n) { return i < 0 ? 0 : i >= n ? n - 1 : i; };
  double norm = 0;
  for (int a = -2; a <= 2; ++a) norm += std::exp(-a * a / 2.0);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 12; ++x) {
      double acc = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          acc += std::exp(-(dx * dx + dy * dy) / 2.0) / (norm * norm) *
                 hm.at(0, 0, edge(y + dy, 12), edge(x + dx, 12));
        }
      }
      EXPECT_NEAR(fast[y * 12 + x], acc, 1e-6);
    }
  }
}

TEST(Decode, MatchesBruteForceOracleOnRandomStacks) {
  for (int trial = 0; trial < 1000; ++trial) {
    const auto hm = random_stack(1000 + trial, 2, 16);
    const bool blur = trial % 2 == 0;
    const auto d = decode(hm, DecodeOptions{.blur = blur});
    for (int j = 0; j < 2; ++j) {
      const float* raw = hm.plane(0, j);
      const auto search = blur ? gaussian_blur(raw, 16, 16, 5, 1.0)
                               : std::vector<float>(raw, raw + 256);
      const auto o = decode_oracle(raw, search, 16, 16);
      ASSERT_EQ(d[j].x, o.x) << trial;
      ASSERT_EQ(d[j].y, o.y) << trial;
      ASSERT_EQ(d[j].confidence, o.confidence) << trial;
    }
  }
}

TEST(Decode, OffsetNeverExceedsQuarterPixel) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto hm = random_stack(5000 + trial, 3, 16);
    const auto d = decode(hm, DecodeOptions{.blur = false});
    for (int j = 0; j < 3; ++j) {
      EXPECT_LE(std::abs(d[j].x - std::round(d[j].x)), 0.25);
      EXPECT_LE(std::abs(d[j].y - std::round(d[j].y)), 0.25);
    }
  }
}

TEST(Codec, RoundTripWithinHalfPixel) {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 127.5);
  for (int trial = 0; trial < 1000; ++trial) {
    KeypointSet kps(4);
    for (auto& k : kps) k = {u(rng), u(rng), 2};
    const auto d = decode(encode(kps, 2.0, 128).maps);
    for (std::size_t j = 0; j < kps.size(); ++j) {
      ASSERT_LE(std::abs(d[j].x - kps[j].x), 0.5) << trial;
      ASSERT_LE(std::abs(d[j].y - kps[j].y), 0.5) << trial;
    }
  }
}

TEST(Codec, BorderTargetsStayPut) {
  for (double c : {0.0, 1.0, 2.0, 125.0, 126.0, 127.0}) {
    const KeypointSet kps{{c, 64.0, 2}, {64.0, c, 2}};
    const auto d = decode(encode(kps, 2.0, 128).maps);
    EXPECT_EQ(d[0].x, c);
    EXPECT_EQ(d[1].y, c);
  }
}

TEST(FlipMerge, ConsistentFlipReturnsInput) {
  const FlipPairs pairs({{0, 1}, {2, 3}});
  const auto hm = random_stack(21, 5);
  EXPECT_EQ(flip_merge(hm, flip_heatmaps(hm, pairs), pairs), hm);
}

TEST(FlipMerge, ZeroFlippedHalvesInput) {
  const FlipPairs pairs({{0, 1}});
  const auto hm = random_stack(22, 3);
  const auto out = flip_merge(hm, HeatmapStack(hm.shape()), pairs);
  for (std::size_t i = 0; i < hm.size(); ++i) {
    EXPECT_EQ(out.data()[i], 0.5f * hm.data()[i]);
  }
}

TEST(FlipMerge, ArgmaxUnchangedUnderConsistentFlip) {
  const FlipPairs pairs({{1, 2}});
  for (int trial = 0; trial < 50; ++trial) {
    const auto hm = random_stack(100 + trial, 3, 16);
    const auto merged = flip_merge(hm, flip_heatmaps(hm, pairs), pairs);
    for (int j = 0; j < 3; ++j) {
      const float* a = hm.plane(0, j);
      const float* b = merged.plane(0, j);
      EXPECT_EQ(std::max_element(a, a + 256) - a, std::max_element(b, b + 256) - b);
    }
  }
}

TEST(FlipMerge, RejectsBadPairsAndShapes) {
  const auto hm = random_stack(23, 3);
  EXPECT_THROW(flip_merge(hm, hm, FlipPairs({{0, 3}})), ValidationError);
  EXPECT_THROW(flip_merge(hm, hm, FlipPairs({{0, 1}, {1, 2}})), ValidationError);
  EXPECT_THROW(flip_merge(hm, random_stack(24, 2), FlipPairs()), ShapeError);
}

TEST(Coordinates, PixelCentreConversionRoundTrips) {
  EXPECT_DOUBLE_EQ(heatmap_to_input(0.0, 2), 0.5);
  EXPECT_DOUBLE_EQ(input_to_heatmap(heatmap_to_input(37.25, 2), 2), 37.25);
}

}  // namespace
}  // namespace sfm
