/*
 * Copyright 2026 The tipbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TIPBENCH_ERROR_HPP_
#define TIPBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tipbench {

// Values match the C API status codes and the CLI exit codes where those
// overlap (config=2, data=3, numerical=4).
enum class ErrorKind {
  kInvalidArgument = 1,
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kInvalidArgument, what);
}

}  // namespace tipbench

#endif  // TIPBENCH_ERROR_HPP_
