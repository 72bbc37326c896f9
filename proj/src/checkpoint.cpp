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

#include "sfm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sfm {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;
constexpr char kTrailer[4] = {'E', 'N', 'D', '\0'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ckpt.epoch);
  put<std::uint64_t>(out, ckpt.step);
  put<std::uint64_t>(out, ckpt.config.digest());
  const std::string text = ckpt.config.to_doc().str();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& e : ckpt.arrays.entries()) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.spec.name.size()));
    out += e.spec.name;
    put<std::uint8_t>(out, kDtypeF32);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.spec.kind));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.spec.dims.size()));
    for (int d : e.spec.dims) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint64_t>(out, e.values.size());
    out.append(reinterpret_cast<const char*>(e.values.data()),
               e.values.size() * sizeof(float));
  }
  out.append(kTrailer, sizeof(kTrailer));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(8) != std::string(kCheckpointMagic, 8)) {
    throw ParseError("not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.epoch = r.get<std::uint64_t>();
  ckpt.step = r.get<std::uint64_t>();
  const auto digest = r.get<std::uint64_t>();
  const auto text_len = r.get<std::uint32_t>();
  ckpt.config = ModelConfig::from_doc(
      KeyValueDoc::parse(r.get_bytes(text_len), "<checkpoint config>"));
  if (ckpt.config.digest() != digest) {
    throw ParseError("checkpoint config digest mismatch");
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    ParamSpec spec;
    spec.name = r.get_bytes(r.get<std::uint16_t>());
    const auto dtype = r.get<std::uint8_t>();
    const auto kind = r.get<std::uint8_t>();
    if (kind > 2) {
      throw ParseError("array '" + spec.name + "': bad kind byte at offset " +
                       std::to_string(r.pos() - 1));
    }
    spec.kind = static_cast<ParamKind>(kind);
    const auto rank = r.get<std::uint8_t>();
    for (int d = 0; d < rank; ++d) {
      spec.dims.push_back(static_cast<int>(r.get<std::uint32_t>()));
    }
    const auto n = r.get<std::uint64_t>();
    if (n != spec.count()) {
      throw ParseError("array '" + spec.name + "': element count disagrees "
                       "with dims");
    }
    std::vector<float> values(n);
    if (dtype == kDtypeF32) {
      const std::string raw = r.get_bytes(n * sizeof(float));
      std::memcpy(values.data(), raw.data(), raw.size());
    } else if (dtype == kDtypeF64) {
      const std::string raw = r.get_bytes(n * sizeof(double));
      for (std::uint64_t k = 0; k < n; ++k) {
        double v;
        std::memcpy(&v, raw.data() + k * sizeof(double), sizeof(double));
        values[k] = static_cast<float>(v);
      }
    } else {
      throw ParseError("array '" + spec.name + "': unknown dtype " +
                       std::to_string(dtype));
    }
    ckpt.arrays.add(std::move(spec), std::move(values));
  }
  if (r.get_bytes(4) != std::string(kTrailer, 4) || !r.done()) {
    throw ParseError("checkpoint trailer missing or trailing bytes present");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = encode_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write on '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error("cannot move checkpoint into '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

ParameterStore<float> model_params(const Checkpoint& ckpt,
                                   const ModelGraph& graph) {
  ParameterStore<float> out;
  for (const auto& spec : graph.program().param_specs()) {
    if (!ckpt.arrays.contains(spec.name)) {
      throw ConfigError("checkpoint lacks parameter '" + spec.name + "'");
    }
    const auto& e = ckpt.arrays.entry(spec.name);
    if (e.spec.dims != spec.dims) {
      throw ConfigError("checkpoint parameter '" + spec.name +
                        "' has dims that do not match the graph");
    }
    out.add(spec, e.values);
  }
  return out;
}

}  // namespace sfm
