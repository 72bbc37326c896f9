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

#ifndef SFM_CHECKPOINT_HPP_
#define SFM_CHECKPOINT_HPP_

#include <cstdint>
#include <string>

#include "sfm/model_graph.hpp"
#include "sfm/params.hpp"

namespace sfm {

// Byte layout is documented in docs/checkpoint_format.md. All integers and
// array payloads are little-endian.
struct Checkpoint {
  ModelConfig config;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  ParameterStore<float> arrays;  // trainable, buffer and optimizer arrays
};

inline constexpr char kCheckpointMagic[8] = {'S', 'F', 'M', 'C',
                                             'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Keeps only the arrays the model program needs (drops optimizer state).
ParameterStore<float> model_params(const Checkpoint& ckpt,
                                   const ModelGraph& graph);

}  // namespace sfm

#endif  // SFM_CHECKPOINT_HPP_
