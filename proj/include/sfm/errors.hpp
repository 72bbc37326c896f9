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

#ifndef SFM_ERRORS_HPP_
#define SFM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sfm {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration document, override or model description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor or parameter shapes that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input document; message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A record that parsed but violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during training (non-finite loss and friends).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace sfm

#endif  // SFM_ERRORS_HPP_
