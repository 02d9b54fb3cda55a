// Copyright 2026 The scfreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCFREG_ERRORS_H_
#define SCFREG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace scfreg {

// Invalid parameter values: out-of-range factors, bad window sizes, malformed
// config entries. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Internally inconsistent data: mismatched shapes, spectrogram metadata that
// contradicts itself, masks outside their matrix.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// File access and format problems. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scfreg

#endif  // SCFREG_ERRORS_H_
