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

#ifndef SFM_KV_CONFIG_HPP_
#define SFM_KV_CONFIG_HPP_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sfm {

// Flat "key = value" document. Lines starting with '#' and blank lines are
// ignored; keys keep their order of first appearance.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text,
                           std::string_view source = "<string>");
  static KeyValueDoc load(const std::string& path);

  void set(const std::string& key, std::string value);
  bool contains(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& items() const {
    return items_;
  }

  // One "key = value" line per entry, in order, '\n' terminated.
  std::string str() const;
  void save(const std::string& path) const;

  // Applies "KEY=VALUE" overrides. Keys outside `known` raise ConfigError.
  void apply_overrides(const std::vector<std::string>& overrides,
                       const std::vector<std::string>& known);

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

// Typed value parsers; throw ConfigError naming the key.
int parse_int(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value);

// Shortest text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace sfm

#endif  // SFM_KV_CONFIG_HPP_
