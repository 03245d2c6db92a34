// Copyright 2026 The p2r Authors
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

#ifndef P2R_COMMON_HPP_
#define P2R_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace p2r {

// Error taxonomy shared by the library and the CLI. The numeric value of
// each kind is the process exit code the CLI uses when an error of that
// kind escapes to the top level.
enum class ErrorKind : int {
  kUsage = 1,        // bad arguments, malformed flags, invalid parameter values
  kData = 2,         // malformed archives, manifests, or config files
  kComputation = 3,  // non-finite values, divergence, numeric failure
  kBackend = 4,      // external transcription command failed
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::kUsage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::kData, msg);
}
[[noreturn]] inline void throw_computation(const std::string& msg) {
  throw Error(ErrorKind::kComputation, msg);
}
[[noreturn]] inline void throw_backend(const std::string& msg) {
  throw Error(ErrorKind::kBackend, msg);
}

}  // namespace p2r

#endif  // P2R_COMMON_HPP_
