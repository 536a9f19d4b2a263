// Copyright 2026 The TokSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TOKSE_CORE_ERRORS_H_
#define TOKSE_CORE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace tokse {

enum class ErrorKind {
  kOutOfRange,
  kRaggedGrid,
  kSpecMismatch,
  kLengthMismatch,
  kMissingStartToken,
  kMalformedDocument,
  kDuplicateId,
  kDimensionMismatch,
  kInsufficientData,
  kStateSpaceTooLarge,
  kSampleRateMismatch,
  kNonFinite,
  kNotConfigured,
  kModeMismatch,
  kInvalidArgument,
  kIo,
};

const char* error_kind_name(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the
// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Validation errors are caused by bad input; everything else is a runtime
  // failure (I/O, divergence).
  bool is_validation() const {
    return kind_ != ErrorKind::kIo && kind_ != ErrorKind::kNonFinite;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace tokse

#endif  // TOKSE_CORE_ERRORS_H_
