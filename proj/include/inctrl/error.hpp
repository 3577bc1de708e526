/*
 * Copyright 2026 The InCTRL-cpp Authors.
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

#ifndef INCTRL_ERROR_HPP_
#define INCTRL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace inctrl {

enum class ErrorKind {
  kInvalidInput,
  kContract,
  kNumeric,
  kInsufficientData,
  kDegenerateProtocol,
  kUndefinedMetric,
  kParse,
  kIo,
  kPersistence,
  kIncompatibleCheckpoint,
  kUsage,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a kind and the module that
// raised it, so the CLI can print a categorized line and pick an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

[[noreturn]] void Fail(ErrorKind kind, std::string module,
                       const std::string& message);

}  // namespace inctrl

#endif  // INCTRL_ERROR_HPP_
