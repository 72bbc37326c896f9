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

#include "sfm/model_graph.hpp"

#include <algorithm>
#include <map>

namespace sfm {
namespace {

std::string placements_str(const std::vector<NodeId>& nodes) {
  std::string out;
  for (const auto& n : nodes) {
    if (!out.empty()) out += ",";
    out += std::to_string(n.level) + ":" + std::to_string(n.column);
  }
  return out;
}

std::vector<NodeId> parse_placements(const std::string& key,
                                     const std::string& value) {
  std::vector<NodeId> out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    auto comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    const std::string item = value.substr(pos, comma - pos);
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("key '" + key + "': expected LEVEL:COLUMN, got '" +
                        item + "'");
    }
    out.push_back(NodeId{parse_int(key, item.substr(0, colon)),
                         parse_int(key, item.substr(colon + 1))});
    pos = comma + 1;
  }
  return out;
}

std::string multipliers_str(const std::vector<int>& m) {
  std::string out;
  for (int v : m) {
    if (!out.empty()) out += ",";
    out += std::to_string(v);
  }
  return out;
}

}  // namespace

const char* edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kForward: return "forward";
    case EdgeKind::kDownsample: return "downsample";
    case EdgeKind::kUpsample: return "upsample";
    case EdgeKind::kBridge: return "bridge";
  }
  return "?";
}

std::vector<NodeId> default_hsa_placements(int levels, int columns) {
  std::vector<NodeId> out;
  for (int c = 1; c <= std::min(columns, 3); c += 2) {
    out.push_back(NodeId{levels, c});
  }
  int ascending_found = 0;
  for (int c = columns; c >= 2 && ascending_found < 2; --c) {
    if (!is_descending(c)) {
      out.push_back(NodeId{1, c});
      ++ascending_found;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeId> ModelConfig::effective_hsa_placements() const {
  return hsa_placements ? *hsa_placements
                        : default_hsa_placements(levels, columns);
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (levels < 1) fail("model.levels must be >= 1");
  if (columns < 1) fail("model.columns must be >= 1");
  if (columns == 1 && levels != 1) {
    fail("model.columns = 1 requires model.levels = 1");
  }
  if (columns > 1 && columns % 2 != 0) {
    fail("model.columns must be 1 or even (one descending and one ascending "
         "sweep per pyramid)");
  }
  if (num_joints < 1) fail("model.num_joints must be >= 1");
  if (base_channels < 1) fail("model.base_channels must be >= 1");
  if (static_cast<int>(channel_multipliers.size()) != levels) {
    fail("model.channel_multipliers needs one entry per level");
  }
  for (int m : channel_multipliers) {
    if (m < 1) fail("model.channel_multipliers entries must be >= 1");
  }
  if (output_size < 1) fail("model.output_size must be >= 1");
  if (input_size != 2 * output_size) {
    fail("model.output_size must equal model.input_size / 2");
  }
  for (const auto& n : effective_hsa_placements()) {
    if (n.level < 1 || n.level > levels || n.column < 1 || n.column > columns) {
      fail("HSA placement " + n.str() + " lies outside the grid");
    }
  }
}

const std::vector<std::string>& ModelConfig::keys() {
  static const std::vector<std::string> k{
      "model.levels",         "model.columns",
      "model.num_joints",     "model.base_channels",
      "model.channel_multipliers", "model.bridges_enabled",
      "model.hsa_enabled",    "model.hsa_placements",
      "model.input_size",     "model.output_size"};
  return k;
}

KeyValueDoc ModelConfig::to_doc() const {
  KeyValueDoc doc;
  doc.set("model.levels", std::to_string(levels));
  doc.set("model.columns", std::to_string(columns));
  doc.set("model.num_joints", std::to_string(num_joints));
  doc.set("model.base_channels", std::to_string(base_channels));
  doc.set("model.channel_multipliers", multipliers_str(channel_multipliers));
  doc.set("model.bridges_enabled", bridges_enabled ? "true" : "false");
  doc.set("model.hsa_enabled", hsa_enabled ? "true" : "false");
  doc.set("model.hsa_placements",
          hsa_placements ? placements_str(*hsa_placements) : "default");
  doc.set("model.input_size", std::to_string(input_size));
  doc.set("model.output_size", std::to_string(output_size));
  return doc;
}

ModelConfig ModelConfig::from_doc(const KeyValueDoc& doc) {
  ModelConfig c;
  const auto& known = keys();
  for (const auto& [key, value] : doc.items()) {
    if (key.rfind("model.", 0) != 0) continue;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (key == "model.levels") c.levels = parse_int(key, value);
    if (key == "model.columns") c.columns = parse_int(key, value);
    if (key == "model.num_joints") c.num_joints = parse_int(key, value);
    if (key == "model.base_channels") c.base_channels = parse_int(key, value);
    if (key == "model.channel_multipliers") {
      c.channel_multipliers = parse_int_list(key, value);
    }
    if (key == "model.bridges_enabled") c.bridges_enabled = parse_bool(key, value);
    if (key == "model.hsa_enabled") c.hsa_enabled = parse_bool(key, value);
    if (key == "model.hsa_placements") {
      if (value == "default") {
        c.hsa_placements.reset();
      } else {
        c.hsa_placements = parse_placements(key, value);
      }
    }
    if (key == "model.input_size") c.input_size = parse_int(key, value);
    if (key == "model.output_size") c.output_size = parse_int(key, value);
  }
  // Changing the level count without listing multipliers keeps the
  // doubling rule.
  if (!doc.contains("model.channel_multipliers") &&
      static_cast<int>(c.channel_multipliers.size()) != c.levels) {
    c.channel_multipliers.clear();
    for (int l = 0; l < c.levels; ++l) c.channel_multipliers.push_back(1 << l);
  }
  if (doc.contains("model.input_size") && !doc.contains("model.output_size")) {
    c.output_size = c.input_size / 2;
  }
  return c;
}

std::uint64_t ModelConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_doc().str()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::size_t ModelGraph::count_edges(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(),
                    [kind](const Edge& e) { return e.kind == kind; }));
}

namespace {

// Same-level feature entering a fusion; a 1x1 conv adapter is inserted
// only when channel counts differ.
Value adapt(ProgramBuilder& b, const std::string& name, Value x, int channels) {
  if (x.shape.c == channels) return x;
  return b.conv(name, x, channels, 1, 1, false);
}

}  // namespace

ModelGraph build_graph(const ModelConfig& config) {
  config.validate();
  const int levels = config.levels;
  const int columns = config.columns;

  // Resolution per level; an odd size cannot be restored by 2x upsampling,
  // which would leave same-level fusion endpoints mismatched.
  std::vector<int> size(levels + 1);
  size[1] = config.output_size;
  for (int l = 2; l <= levels; ++l) size[l] = (size[l - 1] + 1) / 2;
  if (columns > 1) {
    for (int l = 1; l < levels; ++l) {
      if (size[l] % 2 != 0) {
        throw ConfigError(
            "fusion endpoints at level " + std::to_string(l) +
            " have mismatched spatial sizes (" + std::to_string(size[l]) +
            " vs " + std::to_string(2 * size[l + 1]) +
            " after upsampling); output_size must be divisible by 2^(levels-1)");
      }
    }
  }

  ModelGraph g;
  g.config_ = config;
  const auto placements = config.effective_hsa_placements();
  const bool with_middle = config.bridges_enabled && columns >= 4;
  const int pyramids = columns / 2;
  const int junction = 2 * ((pyramids + 1) / 2);

  ProgramBuilder b(3, config.input_size, config.input_size);
  b.set_scope("stem");
  Value stem = b.conv("stem.conv", b.input(), config.channels_at(1), 3, 2, false);
  stem = b.relu(b.batch_norm("stem.bn", stem));

  std::map<NodeId, Value> out;
  auto run_node = [&](NodeId id, Value x) {
    const std::string name = id.str();
    b.set_scope(name);
    Value y = build_forward_block(b, name + ".block", x);
    if (config.hsa_enabled &&
        std::find(placements.begin(), placements.end(), id) !=
            placements.end()) {
      y = build_hsa(b, name + ".hsa", y).output;
      g.hsa_nodes_.push_back(id);
    }
    out[id] = y;
    g.nodes_.push_back(id);
  };

  for (int c = 1; c <= columns; ++c) {
    const FusionMode mode = fusion_mode_of(c);
    if (is_descending(c)) {
      for (int l = 1; l <= levels; ++l) {
        const NodeId id{l, c};
        const std::string name = id.str();
        b.set_scope(name);
        Value x;
        if (l == 1) {
          if (c == 1) {
            x = stem;
          } else {
            x = out.at(NodeId{1, c - 1});
            g.edges_.push_back({NodeId{1, c - 1}, id, EdgeKind::kForward});
          }
        } else {
          Value d = b.conv(name + ".down.conv", out.at(NodeId{l - 1, c}),
                           config.channels_at(l), 3, 2, false);
          x = b.relu(b.batch_norm(name + ".down.bn", d));
          g.edges_.push_back({NodeId{l - 1, c}, id, EdgeKind::kDownsample});
          if (c > 1 && config.bridges_enabled) {
            const NodeId src{l, c - 1};
            Value h = adapt(b, name + ".bridge.adapter", out.at(src),
                            x.shape.c);
            x = build_fuse(b, name + ".bridge", x, h, mode);
            g.edges_.push_back({src, id, EdgeKind::kBridge});
          }
        }
        run_node(id, x);
      }
    } else {
      for (int l = levels; l >= 1; --l) {
        const NodeId id{l, c};
        const std::string name = id.str();
        b.set_scope(name);
        const NodeId skip{l, c - 1};
        Value x;
        if (l == levels) {
          x = out.at(skip);
          g.edges_.push_back({skip, id, EdgeKind::kForward});
        } else {
          Value u = b.conv(name + ".up.conv", out.at(NodeId{l + 1, c}),
                           config.channels_at(l), 1, 1, false);
          u = b.upsample2x(b.batch_norm(name + ".up.bn", u));
          g.edges_.push_back({NodeId{l + 1, c}, id, EdgeKind::kUpsample});
          x = build_fuse(b, name + ".fuse", u, out.at(skip), mode);
          g.edges_.push_back({skip, id, EdgeKind::kForward});
        }
        if (l == 1 && c == columns && with_middle) {
          const NodeId src{1, junction};
          Value m = adapt(b, name + ".middle.adapter", out.at(src), x.shape.c);
          x = b.add(x, m);
          g.edges_.push_back({src, id, EdgeKind::kBridge});
        }
        run_node(id, x);
      }
    }
  }

  g.output_node_ = NodeId{1, columns};
  b.set_scope("head");
  Value head = b.conv("head.conv", out.at(g.output_node_), config.num_joints, 1,
                      1, true, ParamInit{ParamInit::Kind::kNormal, 0.001});
  g.program_ = std::move(b).finish(head);
  return g;
}

}  // namespace sfm
