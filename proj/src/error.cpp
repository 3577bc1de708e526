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

#include "inctrl/error.hpp"

namespace inctrl {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput:
      return "invalid-input";
    case ErrorKind::kContract:
      return "contract";
    case ErrorKind::kNumeric:
      return "numeric";
    case ErrorKind::kInsufficientData:
      return "insufficient-data";
    case ErrorKind::kDegenerateProtocol:
      return "degenerate-protocol";
    case ErrorKind::kUndefinedMetric:
      return "undefined-metric";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kPersistence:
      return "persistence";
    case ErrorKind::kIncompatibleCheckpoint:
      return "incompatible-checkpoint";
    case ErrorKind::kUsage:
      return "usage";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string module, const std::string& message)
    : std::runtime_error(std::string(ErrorKindName(kind)) + " error [" +
                         module + "]: " + message),
      kind_(kind),
      module_(std::move(module)) {}

void Fail(ErrorKind kind, std::string module, const std::string& message) {
  throw Error(kind, std::move(module), message);
}

}  // namespace inctrl
