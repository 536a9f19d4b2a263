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
#include "tokse/core/errors.h"

namespace tokse {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kOutOfRange: return "out of range";
    case ErrorKind::kRaggedGrid: return "ragged grid";
    case ErrorKind::kSpecMismatch: return "spec mismatch";
    case ErrorKind::kLengthMismatch: return "length mismatch";
    case ErrorKind::kMissingStartToken: return "missing start token";
    case ErrorKind::kMalformedDocument: return "malformed document";
    case ErrorKind::kDuplicateId: return "duplicate id";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kStateSpaceTooLarge: return "state space too large";
    case ErrorKind::kSampleRateMismatch: return "sample rate mismatch";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kNotConfigured: return "not configured";
    case ErrorKind::kModeMismatch: return "mode mismatch";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

}  // namespace tokse
