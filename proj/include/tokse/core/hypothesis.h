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

#ifndef TOKSE_CORE_HYPOTHESIS_H_
#define TOKSE_CORE_HYPOTHESIS_H_

#include "tokse/core/token_sequence.h"

namespace tokse {

// A (possibly partial) decoded sequence with its accumulated score, the sum
// over frames and codebooks of log p(token). Always <= 0.
struct Hypothesis {
  TokenSequence tokens;
  double log_score = 0.0;
};

}  // namespace tokse

#endif  // TOKSE_CORE_HYPOTHESIS_H_
