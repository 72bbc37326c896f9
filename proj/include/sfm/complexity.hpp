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

#ifndef SFM_COMPLEXITY_HPP_
#define SFM_COMPLEXITY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sfm/model_graph.hpp"
#include "sfm/program.hpp"

namespace sfm {

// Counting rules, per sample:
//   conv           C_out * C_in * k^2 * H_out * W_out (bias adds not counted)
//   batch norm, relu, tanh, add, attention combine
//                  one per output element
//   channel pool   one per input element for each of mean and max
//   concat, duplicate, upsample
//                  zero (data movement only)
// Params count trainable scalars only; running statistics are excluded.
struct ComplexityEntry {
  std::string scope;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct ComplexityReport {
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::vector<ComplexityEntry> breakdown;  // first-appearance order

  // Machine-readable form; identical reports give identical bytes.
  std::string to_json() const;
  // Human-readable table.
  std::string to_text() const;
};

std::uint64_t instr_flops(const Instr& instr, const Program& program);

ComplexityReport count_complexity(const Program& program);
ComplexityReport count_complexity(const ModelGraph& graph);

}  // namespace sfm

#endif  // SFM_COMPLEXITY_HPP_
