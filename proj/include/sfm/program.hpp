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

#ifndef SFM_PROGRAM_HPP_
#define SFM_PROGRAM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sfm/params.hpp"
#include "sfm/tensor.hpp"

namespace sfm {

// Primitive operations of the network. Every model, block and test
// subgraph is lowered to a straight-line list of these.
enum class OpKind {
  kConv,
  kBatchNorm,
  kRelu,
  kTanh,
  kAdd,
  kConcat,
  kUpsample2x,       // nearest neighbour
  kChannelPool,      // (C,H,W) -> (2,H,W): channel mean, channel max
  kDuplicate,        // (1,H,W) -> (2,H,W)
  kAttentionCombine  // f * (1 + m + m * m_deeper), maps broadcast over C
};

const char* op_name(OpKind kind);

struct ConvAttrs {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  bool bias = false;
};

struct Instr {
  OpKind kind = OpKind::kRelu;
  std::vector<int> inputs;
  int output = -1;
  std::string name;   // parameter prefix for conv / batch norm
  std::string scope;  // owning graph node, used for reporting
  ConvAttrs conv{};
};

// Per-sample extent of one value slot.
struct SlotShape {
  int c = 0;
  int h = 0;
  int w = 0;
  bool operator==(const SlotShape&) const = default;
};

struct ParamInit {
  enum class Kind { kHeNormal, kNormal, kZeros, kOnes };
  Kind kind = Kind::kZeros;
  double stddev = 0.0;  // kNormal only
  int fan_in = 1;       // kHeNormal only
};

// A compiled straight-line network. Slots [0, input_count) are inputs.
class Program {
 public:
  const std::vector<Instr>& instrs() const { return instrs_; }
  const std::vector<SlotShape>& slots() const { return slots_; }
  const std::vector<ParamSpec>& param_specs() const { return specs_; }
  const std::vector<ParamInit>& param_inits() const { return inits_; }
  // Index of the last instruction reading each slot (-1 if never read).
  const std::vector<int>& last_use() const { return last_use_; }

  int input_count() const { return inputs_; }
  int output_slot() const { return output_; }
  Shape input_shape(int batch, int index = 0) const;
  Shape output_shape(int batch) const;

 private:
  friend class ProgramBuilder;
  std::vector<Instr> instrs_;
  std::vector<SlotShape> slots_;
  std::vector<ParamSpec> specs_;
  std::vector<ParamInit> inits_;
  std::vector<int> last_use_;
  int inputs_ = 1;
  int output_ = 0;
};

// Handle to a slot while building.
struct Value {
  int slot = 0;
  SlotShape shape;
};

// Appends primitive operations with shape inference. Errors surface as
// ShapeError at build time, before any evaluation.
class ProgramBuilder {
 public:
  ProgramBuilder(int channels, int height, int width);
  explicit ProgramBuilder(const std::vector<SlotShape>& inputs);

  Value input(int index = 0) const {
    return Value{index, program_.slots_.at(index)};
  }
  void set_scope(std::string scope) { scope_ = std::move(scope); }
  const std::string& scope() const { return scope_; }

  Value conv(const std::string& name, Value x, int out_channels, int kernel,
             int stride, bool bias,
             ParamInit weight_init = ParamInit{ParamInit::Kind::kHeNormal});
  Value batch_norm(const std::string& name, Value x);
  Value relu(Value x);
  Value tanh(Value x);
  Value add(Value a, Value b);
  Value concat(Value a, Value b);
  Value upsample2x(Value x);
  Value channel_pool(Value x);
  Value duplicate(Value x);
  Value attention_combine(Value f, Value m, Value m_deeper);

  Program finish(Value output) &&;

 private:
  Value emit(OpKind kind, std::vector<Value> inputs, SlotShape out,
             std::string name = {}, ConvAttrs conv = {});
  void add_param(ParamSpec spec, ParamInit init);

  Program program_;
  std::string scope_;
};

// Draws initial values for every parameter of `program` from `seed`.
template <typename T>
ParameterStore<T> initialize_params(const Program& program,
                                    std::uint64_t seed);

// Throws ConfigError unless `params` holds every array `program` needs
// with matching dims.
template <typename T>
void check_params(const Program& program, const ParameterStore<T>& params);

}  // namespace sfm

#endif  // SFM_PROGRAM_HPP_
