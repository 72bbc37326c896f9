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

#ifndef SFM_EXECUTOR_HPP_
#define SFM_EXECUTOR_HPP_

#include <span>
#include <vector>

#include "sfm/params.hpp"
#include "sfm/program.hpp"
#include "sfm/tensor.hpp"

namespace sfm {

// kTrain normalizes with batch statistics, kEval with running statistics.
enum class Phase { kTrain, kEval };

// Every intermediate value of one forward pass plus the batch statistics
// needed to differentiate it.
template <typename T>
struct Trace {
  Phase phase = Phase::kEval;
  std::vector<Tensor<T>> values;      // indexed by slot
  std::vector<std::vector<T>> stats;  // per instruction; batch norm: mean, inv_std
  int output_slot = 0;

  const Tensor<T>& output() const { return values[output_slot]; }
};

template <typename T>
struct Gradients {
  ParameterStore<T> params;     // trainable arrays only, same order as program
  std::vector<Tensor<T>> inputs;  // one per program input
};

// Full forward pass keeping every intermediate (needed by backward).
template <typename T>
Trace<T> forward_trace(const Program& program, const ParameterStore<T>& params,
                       std::span<const Tensor<T>> inputs, Phase phase);
template <typename T>
Trace<T> forward_trace(const Program& program, const ParameterStore<T>& params,
                       const Tensor<T>& input, Phase phase) {
  return forward_trace<T>(program, params, std::span<const Tensor<T>>(&input, 1),
                          phase);
}

// Forward pass that frees intermediates as soon as they are dead.
template <typename T>
Tensor<T> forward(const Program& program, const ParameterStore<T>& params,
                  std::span<const Tensor<T>> inputs, Phase phase = Phase::kEval);
template <typename T>
Tensor<T> forward(const Program& program, const ParameterStore<T>& params,
                  const Tensor<T>& input, Phase phase = Phase::kEval) {
  return forward<T>(program, params, std::span<const Tensor<T>>(&input, 1),
                    phase);
}

// Reverse-mode gradient of <grad_output, output> with respect to every
// trainable parameter and the input.
template <typename T>
Gradients<T> backward(const Program& program, const ParameterStore<T>& params,
                      const Trace<T>& trace, const Tensor<T>& grad_output);

// Exponential moving update of batch-norm running statistics from a
// train-phase trace. Running variance uses the unbiased batch variance.
template <typename T>
void update_running_stats(const Program& program, const Trace<T>& trace,
                          ParameterStore<T>& params, T momentum);

inline constexpr double kBatchNormEps = 1e-5;

}  // namespace sfm

#endif  // SFM_EXECUTOR_HPP_
