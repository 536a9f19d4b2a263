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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "support/beam_oracle.h"
#include "tokse/core/errors.h"
#include "tokse/decoding/decoding.h"
#include "tokse/nn/ops.h"

namespace tokse {
namespace {

CodecSpec grid(int k, int c) {
  CodecSpec s;
  s.num_codebooks = k;
  s.codebook_size = c;
  return s;
}

ModelConfig tiny(ModelKind kind, int k, int c, std::uint64_t seed) {
  ModelConfig m = kind == ModelKind::kNar ? default_nar_config() : default_set_config();
  m.codec = grid(k, c);
  m.encoder_layers = 1;
  m.num_heads = 2;
  m.model_dim = 8;
  m.ffn_dim = 16;
  m.dropout_p = 0.0;
  m.conv_kernel = 3;
  m.max_rel_pos = 4;
  m.joiner_dim = 8;
  m.init_seed = seed;
  return m;
}

TokenSequence random_tokens(const CodecSpec& spec, int t, Rng& rng) {
  std::vector<TokenId> ids(static_cast<std::size_t>(spec.num_codebooks) * t);
  for (auto& id : ids) id = uniform_int(rng, spec.codebook_size);
  return TokenSequence(spec, ids);
}

TEST_CASE("teacher-forced decoding") {
  SetModel model(tiny(ModelKind::kSet, 2, 5, 1));
  Rng rng(1);
  TokenSequence noisy = random_tokens(model.codec(), 7, rng);
  TokenSequence clean = random_tokens(model.codec(), 7, rng);
  TeacherForcedResult r = decode_teacher_forced(model, noisy, clean);
  CHECK(r.tokens.num_frames() == 7);
  auto logits = logits_values(model.forward(noisy, shift_with_start(clean), {}));
  for (int k = 0; k < 2; ++k) {
    nn::Matrix lp = nn::log_softmax_rows(logits[k]);
    for (int t = 0; t < 7; ++t) {
      const int id = r.tokens.at(k, t);
      CHECK(std::abs(r.log_probs(k, t) - lp(t, id)) < 1e-12);
      CHECK(lp(t, id) == lp.row(t).maxCoeff());
    }
  }
  TokenSequence shorter = random_tokens(model.codec(), 6, rng);
  CHECK_THROWS_AS(decode_teacher_forced(model, noisy, shorter), Error);
}

TEST_CASE("greedy equals beam search with one beam") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SetModel model(tiny(ModelKind::kSet, 2, 4, seed));
    Rng rng(100 + seed);
    TokenSequence noisy = random_tokens(model.codec(), 9, rng);
    Hypothesis g = decode_greedy(model, noisy);
    Hypothesis b = decode_beam(model, noisy, BeamConfig{1, 3});
    CHECK(g.tokens == b.tokens);
    CHECK(g.log_score == b.log_score);
    CHECK(g.log_score <= 0.0);
    CHECK(decode_greedy(model, noisy).tokens == g.tokens);
    CHECK(std::abs(sequence_log_prob(model, noisy, g.tokens) - g.log_score) < 1e-9);
  }
  SetModel model(tiny(ModelKind::kSet, 2, 4, 0));
  Hypothesis empty = decode_greedy(model, TokenSequence(model.codec(), 0));
  CHECK(empty.tokens.num_frames() == 0);
  CHECK(empty.log_score == 0.0);
}

TEST_CASE("greedy self-feeding matches its own teacher-forced pass") {
  // Feeding the greedy output back as ground truth must reproduce it.
  SetModel model(tiny(ModelKind::kSet, 2, 4, 3));
  Rng rng(3);
  TokenSequence noisy = random_tokens(model.codec(), 8, rng);
  Hypothesis g = decode_greedy(model, noisy);
  CHECK(decode_teacher_forced(model, noisy, g.tokens).tokens == g.tokens);
}

TEST_CASE("single codebook single frame beam is the argmax") {
  SetModel model(tiny(ModelKind::kSet, 1, 3, 4));
  Rng rng(4);
  TokenSequence noisy = random_tokens(model.codec(), 1, rng);
  auto logits = logits_values(
      model.forward(noisy, shift_with_start(TokenSequence(model.codec(), 1)), {}));
  Hypothesis b = decode_beam(model, noisy, BeamConfig{5, 5});
  CHECK(b.tokens.at(0, 0) == argmax_row(logits[0], 0));
}

TEST_CASE("full beam matches exhaustive enumeration on K=2, C=4, T=4") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CAPTURE(seed);
    SetModel model(tiny(ModelKind::kSet, 2, 4, seed));
    Rng rng(200 + seed);
    TokenSequence noisy = random_tokens(model.codec(), 4, rng);
    auto oracle = testing::exhaustive_best(model, noisy);
    CHECK(oracle.sequences == 65536);
    Hypothesis b = decode_beam(model, noisy, BeamConfig{16, 4});
    CHECK(b.tokens == oracle.best);
    CHECK(std::abs(b.log_score - oracle.best_score) < 1e-9);
  }
}

TEST_CASE("beam dominates greedy") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    SetModel model(tiny(ModelKind::kSet, 2, 6, seed));
    Rng rng(300 + seed);
    TokenSequence noisy = random_tokens(model.codec(), 10, rng);
    Hypothesis g = decode_greedy(model, noisy);
    Hypothesis b = decode_beam(model, noisy, BeamConfig{5, 5});
    CHECK(b.log_score >= g.log_score);
  }
}

TEST_CASE("all decoders emit T valid frames") {
  Rng rng(5);
  SetModel set(tiny(ModelKind::kSet, 3, 5, 5));
  NarModel nar(tiny(ModelKind::kNar, 3, 5, 5));
  for (int t : {0, 1, 6}) {
    TokenSequence noisy = random_tokens(set.codec(), t, rng);
    CHECK(decode_greedy(set, noisy).tokens.num_frames() == t);
    CHECK(decode_beam(set, noisy, {}).tokens.num_frames() == t);
    CHECK(decode_nar(nar, noisy).num_frames() == t);
  }
}

TEST_CASE("nar decoding is the per-row argmax") {
  NarModel nar(tiny(ModelKind::kNar, 2, 7, 6));
  Rng rng(6);
  TokenSequence noisy = random_tokens(nar.codec(), 12, rng);
  TokenSequence out = decode_nar(nar, noisy);
  auto logits = logits_values(nar.forward(noisy, {}));
  for (int k = 0; k < 2; ++k) {
    for (int t = 0; t < 12; ++t) CHECK(out.at(k, t) == argmax_row(logits[k], t));
  }
  CHECK(decode_nar(nar, noisy) == out);
}

TEST_CASE("argmax ties go to the lowest index") {
  nn::Matrix m(1, 4);
  m << 1.0, 3.0, 3.0, 2.0;
  CHECK(argmax_row(m, 0) == 1);
}

TEST_CASE("beam config validation") {
  CHECK_THROWS_AS((BeamConfig{0, 1}.validate()), Error);
  CHECK(BeamConfig{}.topk() == 5);
  nlohmann::json j = {{"beam_size", 3}};
  CHECK(j.get<BeamConfig>().topk() == 3);
  j["beams"] = 2;
  CHECK_THROWS_AS(j.get<BeamConfig>(), Error);
}

TEST_CASE("decoding cost against T (timing, informational)") {
  SetModel set(tiny(ModelKind::kSet, 2, 4, 7));
  NarModel nar(tiny(ModelKind::kNar, 2, 4, 7));
  Rng rng(7);
  for (int t : {8, 16, 32}) {
    TokenSequence noisy = random_tokens(set.codec(), t, rng);
    auto t0 = std::chrono::steady_clock::now();
    decode_nar(nar, noisy);
    auto t1 = std::chrono::steady_clock::now();
    decode_beam(set, noisy, {});
    auto t2 = std::chrono::steady_clock::now();
    MESSAGE("T=" << t << " nar " << std::chrono::duration<double>(t1 - t0).count()
                 << " s, beam " << std::chrono::duration<double>(t2 - t1).count() << " s");
  }
}

}  // namespace
}  // namespace tokse
