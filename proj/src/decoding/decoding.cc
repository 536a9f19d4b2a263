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
#include "tokse/decoding/decoding.h"

#include <algorithm>
#include <numeric>

#include "tokse/core/errors.h"
#include "tokse/core/json_util.h"
#include "tokse/nn/ops.h"

namespace tokse {

void BeamConfig::validate() const {
  if (beam_size < 1) fail(ErrorKind::kInvalidArgument, "beam_size must be >= 1");
  if (per_codebook_topk < 0) {
    fail(ErrorKind::kInvalidArgument, "per_codebook_topk must be >= 1");
  }
}

void to_json(nlohmann::json& j, const BeamConfig& c) {
  j = nlohmann::json{{"beam_size", c.beam_size},
                     {"per_codebook_topk", c.per_codebook_topk}};
}

void from_json(const nlohmann::json& j, BeamConfig& c) {
  require_known_keys(j, "decode", {"beam_size", "per_codebook_topk"});
  get_optional(j, "beam_size", c.beam_size);
  get_optional(j, "per_codebook_topk", c.per_codebook_topk);
  c.validate();
}

int argmax_row(const nn::Matrix& m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = static_cast<int>(j);
  }
  return best;
}

namespace {

std::vector<nn::Matrix> log_probs(const Logits& logits) {
  std::vector<nn::Matrix> out;
  out.reserve(logits.size());
  for (const auto& l : logits) out.push_back(nn::log_softmax_rows(l.value()));
  return out;
}

struct Beam {
  std::vector<TokenId> tokens;   // K x T, filled up to the current frame
  std::vector<TokenId> history;  // K x T predictor input
  double score = 0.0;
};

// Frame-major comparison of the first `frames` frames.
bool lexicographically_less(const std::vector<TokenId>& a,
                            const std::vector<TokenId>& b, int k_count,
                            int t_len, int frames) {
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < k_count; ++k) {
      const TokenId x = a[k * t_len + t];
      const TokenId y = b[k * t_len + t];
      if (x != y) return x < y;
    }
  }
  return false;
}

}  // namespace

TeacherForcedResult decode_teacher_forced(const SetModel& model,
                                          const TokenSequence& noisy,
                                          const TokenSequence& clean) {
  check_same_shape(noisy, clean);
  nn::NoGradGuard no_grad;
  auto lp = log_probs(model.forward(noisy, shift_with_start(clean), {}));
  const int k_count = noisy.num_codebooks();
  const int t_len = noisy.num_frames();
  std::vector<TokenId> ids(static_cast<std::size_t>(k_count) * t_len);
  nn::Matrix chosen(k_count, t_len);
  for (int k = 0; k < k_count; ++k) {
    for (int t = 0; t < t_len; ++t) {
      const int id = argmax_row(lp[k], t);
      ids[k * t_len + t] = id;
      chosen(k, t) = lp[k](t, id);
    }
  }
  return {TokenSequence(noisy.spec(), std::move(ids)), std::move(chosen)};
}

Hypothesis decode_greedy(const SetModel& model, const TokenSequence& noisy) {
  return decode_beam(model, noisy, BeamConfig{1, 1});
}

Hypothesis decode_beam(const SetModel& model, const TokenSequence& noisy,
                       const BeamConfig& config) {
  config.validate();
  nn::NoGradGuard no_grad;
  const CodecSpec& spec = model.codec();
  const int k_count = spec.num_codebooks;
  const int c = spec.codebook_size;
  const int t_len = noisy.num_frames();
  const int m = std::min(config.topk(), c);
  const std::size_t grid = static_cast<std::size_t>(k_count) * t_len;

  nn::Var encoded = model.encode(noisy, {});
  std::vector<Beam> beams(1);
  beams[0].tokens.assign(grid, 0);
  beams[0].history.assign(grid, spec.start_token());

  struct Candidate {
    std::size_t parent;
    std::vector<TokenId> ids;  // one per codebook
    double score;
  };

  for (int t = 0; t < t_len; ++t) {
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      // The predictor always sees a full-length history; frames after t hold
      // the start token and cannot influence row t.
      auto lp = log_probs(model.join(encoded, model.predict(beams[b].history, t_len, {})));
      std::vector<std::vector<int>> top(k_count);
      for (int k = 0; k < k_count; ++k) {
        std::vector<int> order(c);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
          return lp[k](t, x) > lp[k](t, y);
        });
        top[k].assign(order.begin(), order.begin() + m);
      }
      // Odometer over the Cartesian product of the per-codebook lists.
      std::vector<int> digit(k_count, 0);
      while (true) {
        Candidate cand{b, std::vector<TokenId>(k_count), beams[b].score};
        for (int k = 0; k < k_count; ++k) {
          cand.ids[k] = top[k][digit[k]];
          cand.score += lp[k](t, cand.ids[k]);
        }
        candidates.push_back(std::move(cand));
        int k = k_count - 1;
        while (k >= 0 && ++digit[k] == m) digit[k--] = 0;
        if (k < 0) break;
      }
    }
    auto full_less = [&](const Candidate& x, const Candidate& y) {
      const auto& px = beams[x.parent].tokens;
      const auto& py = beams[y.parent].tokens;
      if (x.parent != y.parent) {
        if (lexicographically_less(px, py, k_count, t_len, t)) return true;
        if (lexicographically_less(py, px, k_count, t_len, t)) return false;
      }
      return x.ids < y.ids;
    };
    const std::size_t keep =
        std::min(candidates.size(), static_cast<std::size_t>(config.beam_size));
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [&](const Candidate& x, const Candidate& y) {
                        if (x.score != y.score) return x.score > y.score;
                        return full_less(x, y);
                      });
    std::vector<Beam> next;
    next.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& cand = candidates[i];
      Beam beam = beams[cand.parent];
      beam.score = cand.score;
      for (int k = 0; k < k_count; ++k) {
        beam.tokens[k * t_len + t] = cand.ids[k];
        if (t + 1 < t_len) beam.history[k * t_len + t + 1] = cand.ids[k];
      }
      next.push_back(std::move(beam));
    }
    beams = std::move(next);
  }
  return {TokenSequence(spec, std::move(beams[0].tokens)), beams[0].score};
}

TokenSequence decode_nar(const NarModel& model, const TokenSequence& noisy) {
  nn::NoGradGuard no_grad;
  auto logits = logits_values(model.forward(noisy, {}));
  const int k_count = noisy.num_codebooks();
  const int t_len = noisy.num_frames();
  std::vector<TokenId> ids(static_cast<std::size_t>(k_count) * t_len);
  for (int k = 0; k < k_count; ++k) {
    for (int t = 0; t < t_len; ++t) ids[k * t_len + t] = argmax_row(logits[k], t);
  }
  return TokenSequence(noisy.spec(), std::move(ids));
}

double sequence_log_prob(const SetModel& model, const TokenSequence& noisy,
                         const TokenSequence& candidate) {
  check_same_shape(noisy, candidate);
  nn::NoGradGuard no_grad;
  auto lp = log_probs(model.forward(noisy, shift_with_start(candidate), {}));
  double total = 0.0;
  for (int k = 0; k < candidate.num_codebooks(); ++k) {
    for (int t = 0; t < candidate.num_frames(); ++t) {
      total += lp[k](t, candidate.at(k, t));
    }
  }
  return total;
}

}  // namespace tokse
