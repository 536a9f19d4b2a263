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
#ifndef TOKSE_CHANNEL_LAB_CHANNEL_H_
#define TOKSE_CHANNEL_LAB_CHANNEL_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "tokse/core/codec_spec.h"
#include "tokse/core/random.h"
#include "tokse/core/token_sequence.h"

namespace tokse {

using ProbMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ProbVector = Eigen::VectorXd;

// Largest joint state space (C^K) handled by exact inference.
inline constexpr long long kMaxJointStates = 4096;

// Synthetic clean-token source plus a substitution channel.
//
// The source is a first-order Markov chain, either over joint frame states
// s = sum_k y_k C^k (initial/transition) or as K independent per-codebook
// chains (factor_initial/factor_transition). The channel replaces each token
// independently with probability r by a draw from its confusion row.
struct ChannelSpec {
  CodecSpec codec;
  bool factored = false;
  ProbVector initial;     // S
  ProbMatrix transition;  // S x S
  std::vector<ProbVector> factor_initial;     // K x C
  std::vector<ProbMatrix> factor_transition;  // K x (C x C)
  double noise_level_db = 0.0;
  std::vector<ProbMatrix> confusion;  // K x (C x C)
  std::uint64_t seed = 0;

  long long joint_states() const;
  // r = 1 / (1 + 10^(snr / 10)), clamped to [0.02, 0.98].
  double substitution_rate() const;
  // P(observed | clean) for one token of codebook k.
  double emission(int k, TokenId clean, TokenId observed) const;

  // Joint-state view of the source; factored chains are expanded by
  // Kronecker products. Throws kStateSpaceTooLarge beyond kMaxJointStates.
  ProbVector joint_initial() const;
  ProbMatrix joint_transition() const;

  // Checks shapes and that every probability row sums to 1 within 1e-9.
  void validate() const;
};

double snr_to_substitution_rate(double snr_db);

void to_json(nlohmann::json& j, const ChannelSpec& spec);
void from_json(const nlohmann::json& j, ChannelSpec& spec);

int joint_state(const TokenSequence& seq, int frame);
std::vector<TokenId> split_joint_state(long long state, const CodecSpec& codec);

// Uniform confusion rows (self included).
std::vector<ProbMatrix> uniform_confusion(const CodecSpec& codec);

// Strong-transition testbed: each joint state moves to its successor on a
// seeded random cycle with probability `stay`, and otherwise to a uniformly
// random state. Uniform initial state and confusion.
ChannelSpec ar_testbed_spec(double snr_db, std::uint64_t seed, int num_codebooks = 2,
                            int codebook_size = 4, double stay = 0.9);

TokenSequence sample_clean(const ChannelSpec& spec, int num_frames, Rng& rng);
TokenSequence corrupt(const TokenSequence& clean, const ChannelSpec& spec, Rng& rng);

// log P(clean, noisy) under source and channel.
double joint_log_prob(const ChannelSpec& spec, const TokenSequence& clean,
                      const TokenSequence& noisy);

// P(y_t = s | x_1..T) for every frame, T x S (scaled forward-backward).
ProbMatrix exact_posteriors(const TokenSequence& noisy, const ChannelSpec& spec);

// Per-codebook marginals of a joint posterior: K matrices T x C.
std::vector<ProbMatrix> codebook_marginals(const ProbMatrix& joint,
                                           const CodecSpec& codec);

// Per-frame, per-codebook argmax of the posterior marginals (ties to the
// lowest id): the best decoder that predicts tokens independently.
TokenSequence marginal_decode(const TokenSequence& noisy, const ChannelSpec& spec);

// argmax_y P(y | x) by Viterbi in log space; ties to the lowest state.
TokenSequence exact_map(const TokenSequence& noisy, const ChannelSpec& spec);

struct BitratePoint {
  CodecSpec codec;
  ChannelSpec channel;
  double bitrate_kbps = 0.0;
};

// One point per K with the base grid otherwise unchanged. The source is a
// factored chain with one shared per-codebook transition matrix.
std::vector<BitratePoint> bitrate_sweep_specs(const ChannelSpec& base,
                                              const std::vector<int>& k_values);

}  // namespace tokse

#endif  // TOKSE_CHANNEL_LAB_CHANNEL_H_
