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
#include <cmath>
#include <vector>

#include "doctest.h"
#include "tokse/channel_lab/channel.h"
#include "tokse/core/errors.h"

namespace tokse {
namespace {

// Half-width of a 99% normal-approximation interval for a proportion.
double ci99(double p, double n) { return 2.5758 * std::sqrt(p * (1.0 - p) / n); }

// The same interval, Bonferroni-corrected so that \`cells\` simultaneous
// checks hold jointly with 99% probability.
double ci99_family(double p, double n, int cells) {
  const double z = cells == 9 ? 3.2608 : 2.5758;
  return z * std::sqrt(p * (1.0 - p) / n);
}

ChannelSpec random_joint_spec(int k, int c, double snr, Rng& rng) {
  ChannelSpec spec;
  spec.codec.num_codebooks = k;
  spec.codec.codebook_size = c;
  spec.noise_level_db = snr;
  const auto s = static_cast<Eigen::Index>(spec.joint_states());
  spec.initial = ProbVector(s);
  for (Eigen::Index i = 0; i < s; ++i) spec.initial(i) = 0.1 + uniform01(rng);
  spec.initial /= spec.initial.sum();
  spec.transition = ProbMatrix(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      spec.transition(i, j) = std::pow(uniform01(rng), 3.0) + 0.05;
    }
    spec.transition.row(i) /= spec.transition.row(i).sum();
  }
  for (int kk = 0; kk < k; ++kk) {
    ProbMatrix conf(c, c);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) conf(i, j) = 0.05 + uniform01(rng);
      conf.row(i) /= conf.row(i).sum();
    }
    spec.confusion.push_back(conf);
  }
  spec.validate();
  return spec;
}

// Every clean sequence of a K=1 grid, enumerated as base-C numbers.
std::vector<TokenSequence> all_sequences(const CodecSpec& codec, int t_len) {
  std::vector<TokenSequence> out;
  long long total = 1;
  for (int t = 0; t < t_len; ++t) total *= codec.codebook_size;
  for (long long n = 0; n < total; ++n) {
    std::vector<TokenId> ids(t_len);
    long long rest = n;
    for (int t = 0; t < t_len; ++t) {
      ids[t] = static_cast<TokenId>(rest % codec.codebook_size);
      rest /= codec.codebook_size;
    }
    out.emplace_back(codec, ids);
  }
  return out;
}

TEST_CASE("snr to substitution rate") {
  CHECK(snr_to_substitution_rate(0.0) == doctest::Approx(0.5));
  CHECK(snr_to_substitution_rate(40.0) == 0.02);
  CHECK(snr_to_substitution_rate(-40.0) == 0.98);
  CHECK(snr_to_substitution_rate(5.0) < snr_to_substitution_rate(0.0));
}

TEST_CASE("sample_clean") {
  SUBCASE("permutation chain is fully predictable") {
    ChannelSpec spec = ar_testbed_spec(0.0, 3, 1, 5, 1.0);
    Rng rng(1);
    TokenSequence seq = sample_clean(spec, 40, rng);
    for (int t = 1; t < 40; ++t) {
      CHECK(spec.transition(seq.at(0, t - 1), seq.at(0, t)) == 1.0);
    }
  }
  SUBCASE("bigram frequencies converge to the transition matrix") {
    Rng spec_rng(2);
    ChannelSpec spec = random_joint_spec(1, 3, 0.0, spec_rng);
    Rng rng(3);
    const int n = 100000;
    TokenSequence seq = sample_clean(spec, n, rng);
    ProbMatrix counts = ProbMatrix::Zero(3, 3);
    for (int t = 1; t < n; ++t) counts(seq.at(0, t - 1), seq.at(0, t)) += 1.0;
    for (int i = 0; i < 3; ++i) {
      const double row = counts.row(i).sum();
      for (int j = 0; j < 3; ++j) {
        const double p = spec.transition(i, j);
        CHECK(std::abs(counts(i, j) / row - p) <= ci99_family(p, row, 9));
      }
    }
  }
  SUBCASE("fixed seed gives identical samples") {
    ChannelSpec spec = ar_testbed_spec(0.0, 4);
    Rng a(9), b(9);
    CHECK(sample_clean(spec, 50, a) == sample_clean(spec, 50, b));
  }
  SUBCASE("factored source") {
    ChannelSpec spec = bitrate_sweep_specs(
        [] {
          ChannelSpec base = ar_testbed_spec(0.0, 1, 1, 4, 1.0);
          base.factored = true;
          base.factor_initial = {base.initial};
          base.factor_transition = {base.transition};
          return base;
        }(),
        {3})[0].channel;
    Rng rng(5);
    TokenSequence seq = sample_clean(spec, 30, rng);
    CHECK(seq.num_codebooks() == 3);
    for (int k = 0; k < 3; ++k) {
      for (int t = 1; t < 30; ++t) {
        CHECK(spec.factor_transition[k](seq.at(k, t - 1), seq.at(k, t)) == 1.0);
      }
    }
  }
}

TEST_CASE("corrupt") {
  SUBCASE("identity confusion never changes tokens") {
    ChannelSpec spec = ar_testbed_spec(-10.0, 1);
    for (auto& m : spec.confusion) m.setIdentity();
    Rng rng(1);
    TokenSequence clean = sample_clean(spec, 100, rng);
    CHECK(corrupt(clean, spec, rng) == clean);
  }
  SUBCASE("high snr hits the clamped floor") {
    ChannelSpec spec = ar_testbed_spec(40.0, 1, 2, 4);
    Rng rng(2);
    TokenSequence clean = sample_clean(spec, 50000, rng);
    TokenSequence noisy = corrupt(clean, spec, rng);
    double changed = 0;
    for (std::size_t i = 0; i < clean.data().size(); ++i) {
      changed += clean.data()[i] != noisy.data()[i];
    }
    const double n = static_cast<double>(clean.data().size());
    const double p = 0.02 * 0.75;
    CHECK(std::abs(changed / n - p) <= ci99(p, n));
  }
  SUBCASE("changed fraction at r = 0.5") {
    ChannelSpec spec = ar_testbed_spec(0.0, 1, 2, 4);
    Rng rng(3);
    TokenSequence clean = sample_clean(spec, 50000, rng);
    TokenSequence noisy = corrupt(clean, spec, rng);
    CHECK(noisy.num_frames() == clean.num_frames());
    double changed = 0;
    for (std::size_t i = 0; i < clean.data().size(); ++i) {
      changed += clean.data()[i] != noisy.data()[i];
    }
    const double n = static_cast<double>(clean.data().size());
    const double p = 0.5 * (1.0 - 0.25);
    CHECK(std::abs(changed / n - p) <= ci99(p, n));
  }
}

TEST_CASE("forward-backward matches brute force") {
  SUBCASE("T=2, C=2, K=1 by hand") {
    Rng spec_rng(4);
    ChannelSpec spec = random_joint_spec(1, 2, -2.0, spec_rng);
    TokenSequence noisy = TokenSequence::from_rows(spec.codec, {{1, 0}});
    ProbMatrix post = exact_posteriors(noisy, spec);
    ProbMatrix brute = ProbMatrix::Zero(2, 2);
    double z = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double p = spec.initial(a) * spec.emission(0, a, 1) *
                         spec.transition(a, b) * spec.emission(0, b, 0);
        brute(0, a) += p;
        brute(1, b) += p;
        z += p;
      }
    }
    brute /= z;
    CHECK((post - brute).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("random C=3, K=1, T=6 instances") {
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng(100 + trial);
      ChannelSpec spec = random_joint_spec(1, 3, -3.0 + trial, rng);
      TokenSequence noisy = corrupt(sample_clean(spec, 6, rng), spec, rng);
      ProbMatrix post = exact_posteriors(noisy, spec);
      ProbMatrix brute = ProbMatrix::Zero(6, 3);
      double z = 0.0;
      for (const auto& y : all_sequences(spec.codec, 6)) {
        const double p = std::exp(joint_log_prob(spec, y, noisy));
        z += p;
        for (int t = 0; t < 6; ++t) brute(t, y.at(0, t)) += p;
      }
      brute /= z;
      CHECK((post - brute).cwiseAbs().maxCoeff() < 1e-9);
      for (int t = 0; t < 6; ++t) CHECK(std::abs(post.row(t).sum() - 1.0) < 1e-9);
    }
  }
  SUBCASE("factored K=2 source equals its joint expansion") {
    Rng rng(7);
    ChannelSpec joint1 = random_joint_spec(1, 3, 0.0, rng);
    ChannelSpec joint2 = random_joint_spec(1, 3, 0.0, rng);
    ChannelSpec spec;
    spec.codec.num_codebooks = 2;
    spec.codec.codebook_size = 3;
    spec.factored = true;
    spec.factor_initial = {joint1.initial, joint2.initial};
    spec.factor_transition = {joint1.transition, joint2.transition};
    spec.confusion = {joint1.confusion[0], joint2.confusion[0]};
    spec.noise_level_db = -1.0;
    spec.validate();
    TokenSequence noisy = corrupt(sample_clean(spec, 3, rng), spec, rng);
    ProbMatrix post = exact_posteriors(noisy, spec);
    // Brute force over all 9^3 joint sequences.
    ProbMatrix brute = ProbMatrix::Zero(3, 9);
    double z = 0.0;
    for (int n = 0; n < 729; ++n) {
      std::vector<std::vector<TokenId>> rows(2, std::vector<TokenId>(3));
      int rest = n;
      for (int t = 0; t < 3; ++t) {
        rows[0][t] = rest % 3;
        rest /= 3;
        rows[1][t] = rest % 3;
        rest /= 3;
      }
      TokenSequence y = TokenSequence::from_rows(spec.codec, rows);
      const double p = std::exp(joint_log_prob(spec, y, noisy));
      z += p;
      for (int t = 0; t < 3; ++t) brute(t, joint_state(y, t)) += p;
    }
    brute /= z;
    CHECK((post - brute).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("symmetric channel on a uniform source keeps the observation") {
  ChannelSpec spec = ar_testbed_spec(3.0, 1, 1, 4, 0.0);
  Rng rng(8);
  TokenSequence noisy = corrupt(sample_clean(spec, 20, rng), spec, rng);
  CHECK(marginal_decode(noisy, spec) == noisy);
  CHECK(exact_map(noisy, spec) == noisy);
  ChannelSpec quiet = ar_testbed_spec(40.0, 1, 2, 3, 0.9);
  TokenSequence obs = sample_clean(quiet, 10, rng);
  ProbMatrix post = exact_posteriors(obs, quiet);
  for (int t = 0; t < 10; ++t) CHECK(post(t, joint_state(obs, t)) > 0.99);
}

TEST_CASE("viterbi matches exhaustive argmax") {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(200 + trial);
    ChannelSpec spec = random_joint_spec(1, 3, -5.0 + trial, rng);
    TokenSequence noisy = corrupt(sample_clean(spec, 6, rng), spec, rng);
    TokenSequence map = exact_map(noisy, spec);
    double best = -INFINITY;
    TokenSequence brute;
    for (const auto& y : all_sequences(spec.codec, 6)) {
      const double lp = joint_log_prob(spec, y, noisy);
      if (lp > best) {
        best = lp;
        brute = y;
      }
    }
    CHECK(map == brute);
    CHECK(std::abs(joint_log_prob(spec, map, noisy) - best) < 1e-9);
    CHECK(joint_log_prob(spec, map, noisy) >=
          joint_log_prob(spec, marginal_decode(noisy, spec), noisy));
  }
}

TEST_CASE("deterministic source decodes to the nearest consistent sequence") {
  ChannelSpec spec = ar_testbed_spec(-3.0, 5, 1, 5, 1.0);
  Rng rng(9);
  TokenSequence clean = sample_clean(spec, 12, rng);
  TokenSequence noisy = corrupt(clean, spec, rng);
  // A permutation chain admits one sequence per start state; the MAP one
  // agrees with the observation most often.
  int best_hits = -1;
  TokenSequence best;
  for (int start = 0; start < 5; ++start) {
    std::vector<TokenId> ids(12);
    ids[0] = start;
    for (int t = 1; t < 12; ++t) {
      for (int j = 0; j < 5; ++j) {
        if (spec.transition(ids[t - 1], j) == 1.0) ids[t] = j;
      }
    }
    int hits = 0;
    for (int t = 0; t < 12; ++t) hits += ids[t] == noisy.at(0, t);
    if (hits > best_hits) {
      best_hits = hits;
      best = TokenSequence(spec.codec, ids);
    }
  }
  // Equal hit counts tie; compare probabilities rather than the sequence.
  CHECK(joint_log_prob(spec, exact_map(noisy, spec), noisy) ==
        doctest::Approx(joint_log_prob(spec, best, noisy)).epsilon(1e-12));
}

TEST_CASE("state space limit") {
  ChannelSpec spec = ar_testbed_spec(0.0, 1, 1, 4);
  spec.factored = true;
  spec.factor_initial = {spec.initial};
  spec.factor_transition = {spec.transition};
  ChannelSpec big = bitrate_sweep_specs(spec, {7})[0].channel;
  Rng rng(1);
  TokenSequence noisy = sample_clean(big, 4, rng);
  try {
    exact_posteriors(noisy, big);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kStateSpaceTooLarge);
  }
}

TEST_CASE("bitrate sweep specs") {
  ChannelSpec base = ar_testbed_spec(0.0, 1, 1, 4);
  base.factored = true;
  base.factor_initial = {base.initial};
  base.factor_transition = {base.transition};
  base.codec.codebook_size = 4;
  auto points = bitrate_sweep_specs(base, {1, 2, 4, 8});
  REQUIRE(points.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(points[i].codec.num_codebooks == (1 << i));
    CHECK(points[i].bitrate_kbps == doctest::Approx(points[0].bitrate_kbps * (1 << i)));
    Rng rng(2);
    CHECK(sample_clean(points[i].channel, 5, rng).data().size() == 5u * (1u << i));
  }
  ChannelSpec four = ar_testbed_spec(0.0, 1, 4, 4);
  auto same = bitrate_sweep_specs(four, {4});
  CHECK(same[0].codec == four.codec);
}

TEST_CASE("channel spec json round trip") {
  ChannelSpec spec = ar_testbed_spec(-5.0, 11);
  nlohmann::json j = spec;
  ChannelSpec back = j.get<ChannelSpec>();
  CHECK(back.transition == spec.transition);
  CHECK(back.initial == spec.initial);
  CHECK(back.noise_level_db == spec.noise_level_db);
  CHECK(back.seed == 11);
  j["typo"] = 1;
  CHECK_THROWS_AS(j.get<ChannelSpec>(), Error);
  ChannelSpec bad = spec;
  bad.transition(0, 0) += 1e-6;
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // namespace
}  // namespace tokse
