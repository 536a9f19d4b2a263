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
#include "tokse/channel_lab/channel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tokse/core/errors.h"
#include "tokse/core/json_util.h"

namespace tokse {
namespace {

constexpr double kRowTol = 1e-9;

void check_row_stochastic(const ProbMatrix& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() < 0.0).any() || !m.row(i).allFinite()) {
      fail(ErrorKind::kInvalidArgument, what + " has an invalid entry");
    }
    if (std::abs(m.row(i).sum() - 1.0) > kRowTol) {
      fail(ErrorKind::kInvalidArgument,
           what + " row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

void check_distribution(const ProbVector& v, const std::string& what) {
  if ((v.array() < 0.0).any() || !v.allFinite() || std::abs(v.sum() - 1.0) > kRowTol) {
    fail(ErrorKind::kInvalidArgument, what + " is not a distribution");
  }
}

int sample_categorical(const auto& probs, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    cum += probs(i);
    last_positive = static_cast<int>(i);
    if (u < cum) return last_positive;
  }
  return last_positive;
}

nlohmann::json matrix_to_json(const ProbMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

ProbMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  ProbMatrix m(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c) {
      fail(ErrorKind::kMalformedDocument, "ragged matrix in channel spec");
    }
    for (Eigen::Index j2 = 0; j2 < c; ++j2) m(i, j2) = rows[i][j2];
  }
  return m;
}

ProbVector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const ProbVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Emission likelihood of every joint state for frame t.
ProbVector emission_vector(const ChannelSpec& spec,
                           const std::vector<std::vector<TokenId>>& states,
                           const TokenSequence& noisy, int t) {
  const int k_count = spec.codec.num_codebooks;
  ProbVector e(static_cast<Eigen::Index>(states.size()));
  for (std::size_t s = 0; s < states.size(); ++s) {
    double p = 1.0;
    for (int k = 0; k < k_count; ++k) p *= spec.emission(k, states[s][k], noisy.at(k, t));
    e(static_cast<Eigen::Index>(s)) = p;
  }
  return e;
}

std::vector<std::vector<TokenId>> all_states(const ChannelSpec& spec) {
  std::vector<std::vector<TokenId>> states;
  const long long n = spec.joint_states();
  states.reserve(static_cast<std::size_t>(n));
  for (long long s = 0; s < n; ++s) states.push_back(split_joint_state(s, spec.codec));
  return states;
}

void check_noisy(const TokenSequence& noisy, const ChannelSpec& spec) {
  if (!noisy.spec().same_grid(spec.codec)) {
    fail(ErrorKind::kSpecMismatch, "observation grid does not match the channel");
  }
}

}  // namespace

double snr_to_substitution_rate(double snr_db) {
  const double r = 1.0 / (1.0 + std::pow(10.0, snr_db / 10.0));
  return std::clamp(r, 0.02, 0.98);
}

long long ChannelSpec::joint_states() const {
  long long s = 1;
  for (int k = 0; k < codec.num_codebooks; ++k) {
    s *= codec.codebook_size;
    if (s > (1LL << 40)) return s;
  }
  return s;
}

double ChannelSpec::substitution_rate() const {
  return snr_to_substitution_rate(noise_level_db);
}

double ChannelSpec::emission(int k, TokenId clean, TokenId observed) const {
  const double r = substitution_rate();
  return (clean == observed ? 1.0 - r : 0.0) + r * confusion[k](clean, observed);
}

ProbVector ChannelSpec::joint_initial() const {
  if (!factored) return initial;
  if (joint_states() > kMaxJointStates) {
    fail(ErrorKind::kStateSpaceTooLarge,
         "joint state space " + std::to_string(joint_states()) + " exceeds " +
             std::to_string(kMaxJointStates));
  }
  ProbVector out = ProbVector::Ones(1);
  // State index s = sum_k y_k C^k: codebook 0 varies fastest.
  for (int k = 0; k < codec.num_codebooks; ++k) {
    ProbVector next(out.size() * factor_initial[k].size());
    for (Eigen::Index y = 0; y < factor_initial[k].size(); ++y) {
      next.segment(y * out.size(), out.size()) = factor_initial[k](y) * out;
    }
    out = std::move(next);
  }
  return out;
}

ProbMatrix ChannelSpec::joint_transition() const {
  if (!factored) return transition;
  if (joint_states() > kMaxJointStates) {
    fail(ErrorKind::kStateSpaceTooLarge,
         "joint state space " + std::to_string(joint_states()) + " exceeds " +
             std::to_string(kMaxJointStates));
  }
  ProbMatrix out = ProbMatrix::Ones(1, 1);
  for (int k = 0; k < codec.num_codebooks; ++k) {
    const ProbMatrix& a = factor_transition[k];
    const Eigen::Index n = out.rows();
    ProbMatrix next(n * a.rows(), n * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        next.block(i * n, j * n, n, n) = a(i, j) * out;
      }
    }
    out = std::move(next);
  }
  return out;
}

void ChannelSpec::validate() const {
  codec.validate();
  const int k_count = codec.num_codebooks;
  const int c = codec.codebook_size;
  if (static_cast<int>(confusion.size()) != k_count) {
    fail(ErrorKind::kInvalidArgument, "need one confusion matrix per codebook");
  }
  for (int k = 0; k < k_count; ++k) {
    if (confusion[k].rows() != c || confusion[k].cols() != c) {
      fail(ErrorKind::kInvalidArgument, "confusion matrix must be C x C");
    }
    check_row_stochastic(confusion[k], "confusion " + std::to_string(k));
  }
  if (!std::isfinite(noise_level_db)) {
    fail(ErrorKind::kInvalidArgument, "noise level must be finite");
  }
  if (factored) {
    if (static_cast<int>(factor_initial.size()) != k_count ||
        static_cast<int>(factor_transition.size()) != k_count) {
      fail(ErrorKind::kInvalidArgument, "need one chain per codebook");
    }
    for (int k = 0; k < k_count; ++k) {
      if (factor_initial[k].size() != c || factor_transition[k].rows() != c ||
          factor_transition[k].cols() != c) {
        fail(ErrorKind::kInvalidArgument, "per-codebook chain must be over C states");
      }
      check_distribution(factor_initial[k], "initial distribution");
      check_row_stochastic(factor_transition[k], "transition " + std::to_string(k));
    }
  } else {
    const long long s = joint_states();
    if (s > kMaxJointStates) {
      fail(ErrorKind::kStateSpaceTooLarge, "joint source over too many states");
    }
    if (initial.size() != s || transition.rows() != s || transition.cols() != s) {
      fail(ErrorKind::kInvalidArgument, "joint source must be over C^K states");
    }
    check_distribution(initial, "initial distribution");
    check_row_stochastic(transition, "transition");
  }
}

void to_json(nlohmann::json& j, const ChannelSpec& spec) {
  j = nlohmann::json{{"codec", spec.codec},
                     {"factored", spec.factored},
                     {"noise_level_db", spec.noise_level_db},
                     {"substitution_rate", spec.substitution_rate()},
                     {"seed", spec.seed}};
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& m : spec.confusion) conf.push_back(matrix_to_json(m));
  j["confusion"] = conf;
  if (spec.factored) {
    nlohmann::json init = nlohmann::json::array();
    nlohmann::json trans = nlohmann::json::array();
    for (int k = 0; k < spec.codec.num_codebooks; ++k) {
      init.push_back(std::vector<double>(spec.factor_initial[k].begin(),
                                         spec.factor_initial[k].end()));
      trans.push_back(matrix_to_json(spec.factor_transition[k]));
    }
    j["factor_initial"] = init;
    j["factor_transition"] = trans;
  } else {
    j["initial"] = std::vector<double>(spec.initial.begin(), spec.initial.end());
    j["transition"] = matrix_to_json(spec.transition);
  }
}

void from_json(const nlohmann::json& j, ChannelSpec& spec) {
  require_known_keys(j, "channel",
                     {"codec", "factored", "noise_level_db", "substitution_rate",
                      "seed", "confusion", "initial", "transition",
                      "factor_initial", "factor_transition"});
  spec = ChannelSpec{};
  spec.codec = j.at("codec").get<CodecSpec>();
  spec.factored = j.value("factored", false);
  spec.noise_level_db = j.at("noise_level_db").get<double>();
  spec.seed = j.value("seed", std::uint64_t{0});
  for (const auto& m : j.at("confusion")) spec.confusion.push_back(matrix_from_json(m));
  if (spec.factored) {
    for (const auto& v : j.at("factor_initial")) {
      spec.factor_initial.push_back(vector_from_json(v));
    }
    for (const auto& m : j.at("factor_transition")) {
      spec.factor_transition.push_back(matrix_from_json(m));
    }
  } else {
    spec.initial = vector_from_json(j.at("initial"));
    spec.transition = matrix_from_json(j.at("transition"));
  }
  spec.validate();
}

int joint_state(const TokenSequence& seq, int frame) {
  int s = 0;
  int scale = 1;
  for (int k = 0; k < seq.num_codebooks(); ++k) {
    s += seq.at(k, frame) * scale;
    scale *= seq.spec().codebook_size;
  }
  return s;
}

std::vector<TokenId> split_joint_state(long long state, const CodecSpec& codec) {
  std::vector<TokenId> ids(codec.num_codebooks);
  for (int k = 0; k < codec.num_codebooks; ++k) {
    ids[k] = static_cast<TokenId>(state % codec.codebook_size);
    state /= codec.codebook_size;
  }
  return ids;
}

std::vector<ProbMatrix> uniform_confusion(const CodecSpec& codec) {
  const int c = codec.codebook_size;
  return std::vector<ProbMatrix>(codec.num_codebooks,
                                 ProbMatrix::Constant(c, c, 1.0 / c));
}

ChannelSpec ar_testbed_spec(double snr_db, std::uint64_t seed, int num_codebooks,
                            int codebook_size, double stay) {
  if (!(stay >= 0.0 && stay <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "stay probability must lie in [0, 1]");
  }
  ChannelSpec spec;
  spec.codec.num_codebooks = num_codebooks;
  spec.codec.codebook_size = codebook_size;
  spec.codec.name = "ar-testbed";
  spec.noise_level_db = snr_db;
  spec.seed = seed;
  const long long n = spec.joint_states();
  if (n > kMaxJointStates) {
    fail(ErrorKind::kStateSpaceTooLarge, "testbed joint state space too large");
  }
  const auto s = static_cast<Eigen::Index>(n);
  // Random cyclic order of all states.
  std::vector<int> order(s);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {0x7e57bedULL}));
  for (Eigen::Index i = s - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_int(rng, static_cast<int>(i) + 1)]);
  }
  spec.initial = ProbVector::Constant(s, 1.0 / s);
  spec.transition = ProbMatrix::Constant(s, s, (1.0 - stay) / s);
  for (Eigen::Index i = 0; i < s; ++i) {
    spec.transition(order[i], order[(i + 1) % s]) += stay;
  }
  spec.confusion = uniform_confusion(spec.codec);
  spec.validate();
  return spec;
}

TokenSequence sample_clean(const ChannelSpec& spec, int num_frames, Rng& rng) {
  if (num_frames < 0) fail(ErrorKind::kInvalidArgument, "negative length");
  const int k_count = spec.codec.num_codebooks;
  std::vector<TokenId> ids(static_cast<std::size_t>(k_count) * num_frames);
  if (spec.factored) {
    for (int k = 0; k < k_count; ++k) {
      int y = 0;
      for (int t = 0; t < num_frames; ++t) {
        y = t == 0 ? sample_categorical(spec.factor_initial[k], rng)
                   : sample_categorical(spec.factor_transition[k].row(y), rng);
        ids[k * num_frames + t] = y;
      }
    }
  } else {
    int s = 0;
    for (int t = 0; t < num_frames; ++t) {
      s = t == 0 ? sample_categorical(spec.initial, rng)
                 : sample_categorical(spec.transition.row(s), rng);
      auto split = split_joint_state(s, spec.codec);
      for (int k = 0; k < k_count; ++k) ids[k * num_frames + t] = split[k];
    }
  }
  return TokenSequence(spec.codec, std::move(ids));
}

TokenSequence corrupt(const TokenSequence& clean, const ChannelSpec& spec, Rng& rng) {
  check_noisy(clean, spec);
  const double r = spec.substitution_rate();
  const int k_count = clean.num_codebooks();
  const int t_len = clean.num_frames();
  std::vector<TokenId> ids = clean.data();
  for (int k = 0; k < k_count; ++k) {
    for (int t = 0; t < t_len; ++t) {
      // Both draws are always taken so positions stay aligned across rates.
      const double u = uniform01(rng);
      const int replacement = sample_categorical(spec.confusion[k].row(clean.at(k, t)), rng);
      if (u < r) ids[k * t_len + t] = replacement;
    }
  }
  return TokenSequence(clean.spec(), std::move(ids));
}

double joint_log_prob(const ChannelSpec& spec, const TokenSequence& clean,
                      const TokenSequence& noisy) {
  check_same_shape(clean, noisy);
  check_noisy(clean, spec);
  const int k_count = clean.num_codebooks();
  double lp = 0.0;
  for (int t = 0; t < clean.num_frames(); ++t) {
    if (spec.factored) {
      for (int k = 0; k < k_count; ++k) {
        lp += std::log(t == 0 ? spec.factor_initial[k](clean.at(k, 0))
                              : spec.factor_transition[k](clean.at(k, t - 1),
                                                          clean.at(k, t)));
      }
    } else {
      lp += std::log(t == 0 ? spec.initial(joint_state(clean, 0))
                            : spec.transition(joint_state(clean, t - 1),
                                              joint_state(clean, t)));
    }
    for (int k = 0; k < k_count; ++k) {
      lp += std::log(spec.emission(k, clean.at(k, t), noisy.at(k, t)));
    }
  }
  return lp;
}

ProbMatrix exact_posteriors(const TokenSequence& noisy, const ChannelSpec& spec) {
  check_noisy(noisy, spec);
  const ProbVector pi = spec.joint_initial();
  const ProbMatrix a = spec.joint_transition();
  const auto states = all_states(spec);
  const Eigen::Index s = pi.size();
  const int t_len = noisy.num_frames();
  ProbMatrix alpha(t_len, s);
  std::vector<double> scale(t_len);
  for (int t = 0; t < t_len; ++t) {
    const ProbVector e = emission_vector(spec, states, noisy, t);
    ProbVector prior = t == 0 ? pi : ProbVector(a.transpose() * alpha.row(t - 1).transpose());
    ProbVector v = prior.cwiseProduct(e);
    scale[t] = v.sum();
    alpha.row(t) = v.transpose() / scale[t];
  }
  ProbMatrix post(t_len, s);
  ProbVector beta = ProbVector::Ones(s);
  for (int t = t_len - 1; t >= 0; --t) {
    if (t < t_len - 1) {
      const ProbVector e = emission_vector(spec, states, noisy, t + 1);
      beta = a * e.cwiseProduct(beta) / scale[t + 1];
    }
    ProbVector p = alpha.row(t).transpose().cwiseProduct(beta);
    post.row(t) = p.transpose() / p.sum();
  }
  return post;
}

std::vector<ProbMatrix> codebook_marginals(const ProbMatrix& joint,
                                           const CodecSpec& codec) {
  std::vector<ProbMatrix> out(codec.num_codebooks,
                              ProbMatrix::Zero(joint.rows(), codec.codebook_size));
  for (Eigen::Index s = 0; s < joint.cols(); ++s) {
    const auto ids = split_joint_state(s, codec);
    for (int k = 0; k < codec.num_codebooks; ++k) out[k].col(ids[k]) += joint.col(s);
  }
  return out;
}

TokenSequence marginal_decode(const TokenSequence& noisy, const ChannelSpec& spec) {
  const auto marginals = codebook_marginals(exact_posteriors(noisy, spec), spec.codec);
  const int k_count = noisy.num_codebooks();
  const int t_len = noisy.num_frames();
  std::vector<TokenId> ids(static_cast<std::size_t>(k_count) * t_len);
  for (int k = 0; k < k_count; ++k) {
    for (int t = 0; t < t_len; ++t) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < marginals[k].cols(); ++c) {
        if (marginals[k](t, c) > marginals[k](t, best)) best = c;
      }
      ids[k * t_len + t] = static_cast<TokenId>(best);
    }
  }
  return TokenSequence(spec.codec, std::move(ids));
}

TokenSequence exact_map(const TokenSequence& noisy, const ChannelSpec& spec) {
  check_noisy(noisy, spec);
  const ProbMatrix log_a = spec.joint_transition().array().log();
  const ProbVector log_pi = spec.joint_initial().array().log();
  const auto states = all_states(spec);
  const Eigen::Index s = log_pi.size();
  const int t_len = noisy.num_frames();
  if (t_len == 0) return TokenSequence(spec.codec, 0);
  std::vector<std::vector<int>> back(t_len, std::vector<int>(s, 0));
  ProbVector delta = log_pi + ProbVector(emission_vector(spec, states, noisy, 0).array().log());
  for (int t = 1; t < t_len; ++t) {
    const ProbVector log_e = emission_vector(spec, states, noisy, t).array().log();
    ProbVector next(s);
    for (Eigen::Index j = 0; j < s; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index i = 0; i < s; ++i) {
        const double v = delta(i) + log_a(i, j);
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      next(j) = best + log_e(j);
      back[t][j] = arg;
    }
    delta = std::move(next);
  }
  int state = 0;
  for (Eigen::Index i = 1; i < s; ++i) {
    if (delta(i) > delta(state)) state = static_cast<int>(i);
  }
  const int k_count = spec.codec.num_codebooks;
  std::vector<TokenId> ids(static_cast<std::size_t>(k_count) * t_len);
  for (int t = t_len - 1; t >= 0; --t) {
    const auto split = split_joint_state(state, spec.codec);
    for (int k = 0; k < k_count; ++k) ids[k * t_len + t] = split[k];
    if (t > 0) state = back[t][state];
  }
  return TokenSequence(spec.codec, std::move(ids));
}

std::vector<BitratePoint> bitrate_sweep_specs(const ChannelSpec& base,
                                              const std::vector<int>& k_values) {
  base.validate();
  std::vector<BitratePoint> out;
  for (int k : k_values) {
    if (k < 1) fail(ErrorKind::kInvalidArgument, "K must be >= 1");
    BitratePoint point;
    if (k == base.codec.num_codebooks) {
      point.channel = base;
    } else {
      if (!base.factored) {
        fail(ErrorKind::kInvalidArgument,
             "changing K needs a factored source in the base channel");
      }
      point.channel = base;
      point.channel.codec.num_codebooks = k;
      point.channel.factor_initial.assign(k, base.factor_initial[0]);
      point.channel.factor_transition.assign(k, base.factor_transition[0]);
      point.channel.confusion.assign(k, base.confusion[0]);
    }
    point.codec = point.channel.codec;
    point.bitrate_kbps = point.codec.bitrate_bps() / 1000.0;
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace tokse
