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

#ifndef SFM_MODEL_GRAPH_HPP_
#define SFM_MODEL_GRAPH_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfm/blocks.hpp"
#include "sfm/executor.hpp"
#include "sfm/kv_config.hpp"
#include "sfm/params.hpp"
#include "sfm/program.hpp"
#include "sfm/tensor.hpp"

namespace sfm {

// Grid position. Level 1 is the highest resolution (output_size); column c
// is the c-th vertical sweep: odd columns descend (downsampling), even
// columns ascend (upsampling). Columns (2p-1, 2p) form pyramid p.
struct NodeId {
  int level = 1;
  int column = 1;
  auto operator<=>(const NodeId&) const = default;
  std::string str() const {
    return "L" + std::to_string(level) + "C" + std::to_string(column);
  }
};

enum class EdgeKind { kForward, kDownsample, kUpsample, kBridge };

const char* edge_kind_name(EdgeKind kind);

struct Edge {
  NodeId src;
  NodeId dst;
  EdgeKind kind = EdgeKind::kForward;
  auto operator<=>(const Edge&) const = default;
};

struct ModelConfig {
  int levels = 4;
  int columns = 4;
  int num_joints = 16;
  int base_channels = 18;
  std::vector<int> channel_multipliers{1, 2, 4, 6};
  bool bridges_enabled = true;
  bool hsa_enabled = true;
  // Unset selects the default placement rule (see default_hsa_placements).
  std::optional<std::vector<NodeId>> hsa_placements;
  int input_size = 256;
  int output_size = 128;

  int channels_at(int level) const {
    return base_channels * channel_multipliers.at(level - 1);
  }
  std::vector<NodeId> effective_hsa_placements() const;

  // Throws ConfigError on any violated invariant.
  void validate() const;

  // Stable, documented key order; keys carry the "model." prefix.
  KeyValueDoc to_doc() const;
  static ModelConfig from_doc(const KeyValueDoc& doc);
  static const std::vector<std::string>& keys();

  // FNV-1a 64 of to_doc().str().
  std::uint64_t digest() const;

  bool operator==(const ModelConfig&) const = default;
};

// The deepest node of the first two descending sweeps and the top node of
// the last two ascending sweeps.
std::vector<NodeId> default_hsa_placements(int levels, int columns);

// Pyramid index (0-based) owning a column.
inline int pyramid_of(int column) { return (column - 1) / 2; }
inline bool is_descending(int column) { return column % 2 == 1; }

// Fusion rule: concat inside the first pyramid, add afterwards.
inline FusionMode fusion_mode_of(int column) {
  return pyramid_of(column) == 0 ? FusionMode::kConcat : FusionMode::kAdd;
}

class ModelGraph {
 public:
  const ModelConfig& config() const { return config_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Program& program() const { return program_; }
  NodeId output_node() const { return output_node_; }
  const std::vector<NodeId>& hsa_nodes() const { return hsa_nodes_; }

  std::size_t count_edges(EdgeKind kind) const;
  std::vector<ParamSpec> param_specs() const { return program_.param_specs(); }

 private:
  friend ModelGraph build_graph(const ModelConfig& config);
  ModelConfig config_;
  std::vector<NodeId> nodes_;
  std::vector<Edge> edges_;
  std::vector<NodeId> hsa_nodes_;
  NodeId output_node_;
  Program program_;
};

// Builds the grid DAG and lowers it to a Program mapping
// (N, 3, input_size, input_size) -> (N, J, output_size, output_size).
ModelGraph build_graph(const ModelConfig& config);

template <typename T>
ParameterStore<T> init_params(const ModelGraph& graph, std::uint64_t seed) {
  return initialize_params<T>(graph.program(), seed);
}

// Network evaluation; shapes are checked against the graph.
template <typename T>
Tensor<T> forward(const ModelGraph& graph, const ParameterStore<T>& params,
                  const Tensor<T>& batch, Phase phase = Phase::kEval) {
  return forward<T>(graph.program(), params, batch, phase);
}

}  // namespace sfm

#endif  // SFM_MODEL_GRAPH_HPP_
