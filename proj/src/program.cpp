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

#include "sfm/program.hpp"

#include <cmath>
#include <random>

#include "sfm/random.hpp"

namespace sfm {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConv: return "conv";
    case OpKind::kBatchNorm: return "batch_norm";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kAdd: return "add";
    case OpKind::kConcat: return "concat";
    case OpKind::kUpsample2x: return "upsample2x";
    case OpKind::kChannelPool: return "channel_pool";
    case OpKind::kDuplicate: return "duplicate";
    case OpKind::kAttentionCombine: return "attention_combine";
  }
  return "?";
}

Shape Program::input_shape(int batch, int index) const {
  const auto& s = slots_.at(index);
  return Shape{batch, s.c, s.h, s.w};
}

Shape Program::output_shape(int batch) const {
  const auto& s = slots_.at(output_);
  return Shape{batch, s.c, s.h, s.w};
}

ProgramBuilder::ProgramBuilder(int channels, int height, int width)
    : ProgramBuilder(std::vector<SlotShape>{{channels, height, width}}) {}

ProgramBuilder::ProgramBuilder(const std::vector<SlotShape>& inputs) {
  if (inputs.empty()) throw ShapeError("program needs at least one input");
  for (const auto& s : inputs) {
    if (s.c < 1 || s.h < 1 || s.w < 1) {
      throw ShapeError("program input extents must be >= 1");
    }
    program_.slots_.push_back(s);
  }
  program_.inputs_ = static_cast<int>(inputs.size());
}

Value ProgramBuilder::emit(OpKind kind, std::vector<Value> inputs,
                           SlotShape out, std::string name, ConvAttrs conv) {
  Instr instr;
  instr.kind = kind;
  for (const auto& v : inputs) instr.inputs.push_back(v.slot);
  instr.output = static_cast<int>(program_.slots_.size());
  instr.name = std::move(name);
  instr.scope = scope_;
  instr.conv = conv;
  program_.slots_.push_back(out);
  program_.instrs_.push_back(std::move(instr));
  return Value{program_.instrs_.back().output, out};
}

void ProgramBuilder::add_param(ParamSpec spec, ParamInit init) {
  for (const auto& s : program_.specs_) {
    if (s.name == spec.name) {
      throw ConfigError("duplicate parameter name '" + spec.name + "'");
    }
  }
  program_.specs_.push_back(std::move(spec));
  program_.inits_.push_back(init);
}

Value ProgramBuilder::conv(const std::string& name, Value x, int out_channels,
                           int kernel, int stride, bool bias,
                           ParamInit weight_init) {
  if (out_channels < 1 || kernel < 1 || stride < 1) {
    throw ShapeError("conv '" + name + "': invalid attributes");
  }
  ConvAttrs a;
  a.in_channels = x.shape.c;
  a.out_channels = out_channels;
  a.kernel = kernel;
  a.stride = stride;
  a.pad = kernel / 2;
  a.bias = bias;
  const int ho = (x.shape.h + 2 * a.pad - kernel) / stride + 1;
  const int wo = (x.shape.w + 2 * a.pad - kernel) / stride + 1;
  if (ho < 1 || wo < 1) {
    throw ShapeError("conv '" + name + "': input too small");
  }
  if (weight_init.kind == ParamInit::Kind::kHeNormal) {
    weight_init.fan_in = a.in_channels * kernel * kernel;
  }
  add_param({name + ".weight", {out_channels, a.in_channels, kernel, kernel},
             ParamKind::kTrainable},
            weight_init);
  if (bias) {
    add_param({name + ".bias", {out_channels}, ParamKind::kTrainable},
              ParamInit{ParamInit::Kind::kZeros});
  }
  return emit(OpKind::kConv, {x}, SlotShape{out_channels, ho, wo}, name, a);
}

Value ProgramBuilder::batch_norm(const std::string& name, Value x) {
  const int c = x.shape.c;
  add_param({name + ".gamma", {c}, ParamKind::kTrainable},
            ParamInit{ParamInit::Kind::kOnes});
  add_param({name + ".beta", {c}, ParamKind::kTrainable},
            ParamInit{ParamInit::Kind::kZeros});
  add_param({name + ".running_mean", {c}, ParamKind::kBuffer},
            ParamInit{ParamInit::Kind::kZeros});
  add_param({name + ".running_var", {c}, ParamKind::kBuffer},
            ParamInit{ParamInit::Kind::kOnes});
  return emit(OpKind::kBatchNorm, {x}, x.shape, name);
}

Value ProgramBuilder::relu(Value x) { return emit(OpKind::kRelu, {x}, x.shape); }

Value ProgramBuilder::tanh(Value x) { return emit(OpKind::kTanh, {x}, x.shape); }

Value ProgramBuilder::add(Value a, Value b) {
  if (!(a.shape == b.shape)) {
    throw ShapeError("add: operand shapes differ (" +
                     std::to_string(a.shape.c) + "x" +
                     std::to_string(a.shape.h) + "x" +
                     std::to_string(a.shape.w) + " vs " +
                     std::to_string(b.shape.c) + "x" +
                     std::to_string(b.shape.h) + "x" +
                     std::to_string(b.shape.w) + ")");
  }
  return emit(OpKind::kAdd, {a, b}, a.shape);
}

Value ProgramBuilder::concat(Value a, Value b) {
  if (a.shape.h != b.shape.h || a.shape.w != b.shape.w) {
    throw ShapeError("concat: spatial sizes differ");
  }
  return emit(OpKind::kConcat, {a, b},
              SlotShape{a.shape.c + b.shape.c, a.shape.h, a.shape.w});
}

Value ProgramBuilder::upsample2x(Value x) {
  return emit(OpKind::kUpsample2x, {x},
              SlotShape{x.shape.c, 2 * x.shape.h, 2 * x.shape.w});
}

Value ProgramBuilder::channel_pool(Value x) {
  return emit(OpKind::kChannelPool, {x}, SlotShape{2, x.shape.h, x.shape.w});
}

Value ProgramBuilder::duplicate(Value x) {
  if (x.shape.c != 1) throw ShapeError("duplicate: expects one channel");
  return emit(OpKind::kDuplicate, {x}, SlotShape{2, x.shape.h, x.shape.w});
}

Value ProgramBuilder::attention_combine(Value f, Value m, Value m_deeper) {
  if (m.shape.c != 1 || m_deeper.shape.c != 1) {
    throw ShapeError("attention_combine: maps must have one channel");
  }
  if (m.shape.h != f.shape.h || m.shape.w != f.shape.w ||
      !(m.shape == m_deeper.shape)) {
    throw ShapeError("attention_combine: spatial sizes differ");
  }
  return emit(OpKind::kAttentionCombine, {f, m, m_deeper}, f.shape);
}

Program ProgramBuilder::finish(Value output) && {
  program_.output_ = output.slot;
  program_.last_use_.assign(program_.slots_.size(), -1);
  for (std::size_t i = 0; i < program_.instrs_.size(); ++i) {
    for (int s : program_.instrs_[i].inputs) {
      program_.last_use_[s] = static_cast<int>(i);
    }
  }
  return std::move(program_);
}

template <typename T>
ParameterStore<T> initialize_params(const Program& program,
                                    std::uint64_t seed) {
  ParameterStore<T> store;
  const auto& specs = program.param_specs();
  const auto& inits = program.param_inits();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    // One stream per parameter keeps values stable when unrelated
    // parameters are added or removed.
    Rng rng = make_rng(seed, Stream::kInit, i);
    std::vector<T> v(specs[i].count());
    const ParamInit& init = inits[i];
    switch (init.kind) {
      case ParamInit::Kind::kZeros:
        break;
      case ParamInit::Kind::kOnes:
        std::fill(v.begin(), v.end(), T(1));
        break;
      case ParamInit::Kind::kHeNormal:
      case ParamInit::Kind::kNormal: {
        const double sd = init.kind == ParamInit::Kind::kNormal
                              ? init.stddev
                              : std::sqrt(2.0 / init.fan_in);
        std::normal_distribution<double> dist(0.0, sd);
        for (auto& x : v) x = static_cast<T>(dist(rng));
        break;
      }
    }
    store.add(specs[i], std::move(v));
  }
  return store;
}

template <typename T>
void check_params(const Program& program, const ParameterStore<T>& params) {
  for (const auto& spec : program.param_specs()) {
    if (!params.contains(spec.name)) {
      throw ConfigError("parameter store lacks '" + spec.name + "'");
    }
    const auto& e = params.entry(spec.name);
    if (e.spec.dims != spec.dims || e.values.size() != spec.count()) {
      throw ConfigError("parameter '" + spec.name +
                        "' has dims that do not match the graph");
    }
  }
}

template ParameterStore<float> initialize_params<float>(const Program&,
                                                        std::uint64_t);
template ParameterStore<double> initialize_params<double>(const Program&,
                                                          std::uint64_t);
template void check_params<float>(const Program&, const ParameterStore<float>&);
template void check_params<double>(const Program&,
                                   const ParameterStore<double>&);

}  // namespace sfm
