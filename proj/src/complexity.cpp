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

#include "sfm/complexity.hpp"

#include <cstdio>
#include <map>

#include "json.hpp"

namespace sfm {

std::uint64_t instr_flops(const Instr& instr, const Program& program) {
  const SlotShape& out = program.slots()[instr.output];
  const std::uint64_t out_elems =
      static_cast<std::uint64_t>(out.c) * out.h * out.w;
  switch (instr.kind) {
    case OpKind::kConv: {
      const ConvAttrs& a = instr.conv;
      return static_cast<std::uint64_t>(a.out_channels) * a.in_channels *
             a.kernel * a.kernel * out.h * out.w;
    }
    case OpKind::kBatchNorm:
    case OpKind::kRelu:
    case OpKind::kTanh:
    case OpKind::kAdd:
    case OpKind::kAttentionCombine:
      return out_elems;
    case OpKind::kChannelPool: {
      const SlotShape& in = program.slots()[instr.inputs[0]];
      return 2ull * in.c * in.h * in.w;
    }
    case OpKind::kConcat:
    case OpKind::kDuplicate:
    case OpKind::kUpsample2x:
      return 0;
  }
  return 0;
}

ComplexityReport count_complexity(const Program& program) {
  ComplexityReport report;
  std::map<std::string, std::size_t> index;
  auto entry = [&](const std::string& scope) -> ComplexityEntry& {
    auto it = index.find(scope);
    if (it == index.end()) {
      it = index.emplace(scope, report.breakdown.size()).first;
      report.breakdown.push_back(ComplexityEntry{scope, 0, 0});
    }
    return report.breakdown[it->second];
  };
  for (const auto& instr : program.instrs()) {
    ComplexityEntry& e = entry(instr.scope);
    e.flops += instr_flops(instr, program);
    if (instr.kind == OpKind::kConv) {
      const ConvAttrs& a = instr.conv;
      e.params += static_cast<std::uint64_t>(a.out_channels) * a.in_channels *
                  a.kernel * a.kernel;
      if (a.bias) e.params += a.out_channels;
    } else if (instr.kind == OpKind::kBatchNorm) {
      e.params += 2ull * program.slots()[instr.output].c;
    }
  }
  for (const auto& e : report.breakdown) {
    report.params += e.params;
    report.flops += e.flops;
  }
  return report;
}

ComplexityReport count_complexity(const ModelGraph& graph) {
  return count_complexity(graph.program());
}

std::string ComplexityReport::to_json() const {
  nlohmann::ordered_json j;
  j["params"] = params;
  j["flops"] = flops;
  j["params_m"] = static_cast<double>(params) / 1e6;
  j["gflops"] = static_cast<double>(flops) / 1e9;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : breakdown) {
    rows.push_back({{"scope", e.scope}, {"params", e.params}, {"flops", e.flops}});
  }
  j["breakdown"] = rows;
  return j.dump(2) + "\n";
}

std::string ComplexityReport::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %14s %16s\n", "node", "params",
                "flops");
  out += line;
  for (const auto& e : breakdown) {
    std::snprintf(line, sizeof(line), "%-12s %14llu %16llu\n", e.scope.c_str(),
                  static_cast<unsigned long long>(e.params),
                  static_cast<unsigned long long>(e.flops));
    out += line;
  }
  std::snprintf(line, sizeof(line), "total: %.4f M params, %.4f GFLOPs\n",
                static_cast<double>(params) / 1e6,
                static_cast<double>(flops) / 1e9);
  out += line;
  return out;
}

}  // namespace sfm
