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

#ifndef SFM_PARAMS_HPP_
#define SFM_PARAMS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sfm/errors.hpp"

namespace sfm {

enum class ParamKind : std::uint8_t {
  kTrainable = 0,
  kBuffer = 1,     // normalization running statistics
  kOptimizer = 2,  // optimizer moments, only present in training states
};

// Shape-and-role description of one named array.
struct ParamSpec {
  std::string name;
  std::vector<int> dims;
  ParamKind kind = ParamKind::kTrainable;

  std::size_t count() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
};

// Ordered collection of named real arrays. Insertion order is preserved so
// that serialization and iteration are stable.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    ParamSpec spec;
    std::vector<T> values;
  };

  ParameterStore() = default;

  // Builds a zero-filled store holding exactly `specs`.
  static ParameterStore zeros(std::span<const ParamSpec> specs) {
    ParameterStore store;
    for (const auto& s : specs) store.add(s, std::vector<T>(s.count(), T(0)));
    return store;
  }

  void add(ParamSpec spec, std::vector<T> values) {
    if (values.size() != spec.count()) {
      throw ShapeError("parameter '" + spec.name + "' expects " +
                       std::to_string(spec.count()) + " values, got " +
                       std::to_string(values.size()));
    }
    if (index_.contains(spec.name)) {
      throw ConfigError("duplicate parameter name '" + spec.name + "'");
    }
    index_.emplace(spec.name, entries_.size());
    entries_.push_back(Entry{std::move(spec), std::move(values)});
  }

  bool contains(const std::string& name) const {
    return index_.contains(name);
  }
  Entry& entry(const std::string& name) { return entries_[lookup(name)]; }
  const Entry& entry(const std::string& name) const {
    return entries_[lookup(name)];
  }
  std::vector<T>& values(const std::string& name) {
    return entry(name).values;
  }
  const std::vector<T>& values(const std::string& name) const {
    return entry(name).values;
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Number of scalars whose kind matches.
  std::size_t scalar_count(ParamKind kind = ParamKind::kTrainable) const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
      if (e.spec.kind == kind) n += e.values.size();
    }
    return n;
  }

  std::vector<ParamSpec> specs() const {
    std::vector<ParamSpec> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.spec);
    return out;
  }

  bool operator==(const ParameterStore& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i];
      const auto& b = o.entries_[i];
      if (a.spec.name != b.spec.name || a.spec.dims != b.spec.dims ||
          a.spec.kind != b.spec.kind || a.values != b.values) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ShapeError("no parameter named '" + name + "'");
    }
    return it->second;
  }

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

template <typename To, typename From>
ParameterStore<To> params_cast(const ParameterStore<From>& in) {
  ParameterStore<To> out;
  for (const auto& e : in.entries()) {
    out.add(e.spec, std::vector<To>(e.values.begin(), e.values.end()));
  }
  return out;
}

}  // namespace sfm

#endif  // SFM_PARAMS_HPP_
