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

#ifndef SFM_RANDOM_HPP_
#define SFM_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sfm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed of a named sub-stream. Streams derived from distinct (base, keys)
// tuples are independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Stable identifiers for the sub-streams used across the pipeline.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kAugment = 3,
  kFixture = 4,
};

inline Rng make_rng(std::uint64_t base, Stream stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(base, {static_cast<std::uint64_t>(stream), index}));
}

}  // namespace sfm

#endif  // SFM_RANDOM_HPP_
