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
#ifndef TOKSE_DECODING_DECODING_H_
#define TOKSE_DECODING_DECODING_H_

#include <vector>

#include "json.hpp"
#include "tokse/core/hypothesis.h"
#include "tokse/core/token_sequence.h"
#include "tokse/model/model.h"
#include "tokse/nn/autograd.h"

namespace tokse {

struct BeamConfig {
  int beam_size = 5;
  // Candidates per codebook at each step; 0 means "same as beam_size".
  int per_codebook_topk = 0;

  int topk() const { return per_codebook_topk > 0 ? per_codebook_topk : beam_size; }
  void validate() const;
  bool operator==(const BeamConfig&) const = default;
};

void to_json(nlohmann::json& j, const BeamConfig& c);
void from_json(const nlohmann::json& j, BeamConfig& c);

struct TeacherForcedResult {
  TokenSequence tokens;
  // K x T log-probabilities of the emitted ids.
  nn::Matrix log_probs;
};

// Predictor fed the ground-truth history; per-step argmax (ties to the
// lowest id).
TeacherForcedResult decode_teacher_forced(const SetModel& model,
                                          const TokenSequence& noisy,
                                          const TokenSequence& clean);

// Sequential self-feeding with per-codebook argmax. Same result as
// decode_beam with beam_size 1.
Hypothesis decode_greedy(const SetModel& model, const TokenSequence& noisy);

// Joint multi-codebook beam search. Every step expands each live hypothesis
// over the product of its per-codebook top-m ids and keeps the best
// beam_size; equal scores go to the lexicographically smaller sequence
// (frame-major, codebook order within a frame). Runs exactly T steps.
Hypothesis decode_beam(const SetModel& model, const TokenSequence& noisy,
                       const BeamConfig& config);

// Per-frame, per-codebook argmax of one encoder pass.
TokenSequence decode_nar(const NarModel& model, const TokenSequence& noisy);

// Sum over frames and codebooks of log p(y_k,t | noisy, y_<t).
double sequence_log_prob(const SetModel& model, const TokenSequence& noisy,
                         const TokenSequence& candidate);

// Index of the row maximum, lowest index on ties.
int argmax_row(const nn::Matrix& m, Eigen::Index row);

}  // namespace tokse

#endif  // TOKSE_DECODING_DECODING_H_
