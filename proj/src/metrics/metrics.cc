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
#include "tokse/metrics/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "tokse/core/errors.h"
#include "tokse/core/random.h"

namespace tokse {

Words split_words(const std::string& text) {
  std::istringstream in(text);
  Words out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

EditCounts align_words(const Words& ref, const Words& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts c;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      (ref[i - 1] == hyp[j - 1] ? c.hits : c.substitutions) += 1;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

double word_error_rate(const Words& reference, const Words& hypothesis) {
  if (reference.empty()) fail(ErrorKind::kInvalidArgument, "WER needs a non-empty reference");
  return static_cast<double>(align_words(reference, hypothesis).errors()) /
         static_cast<double>(reference.size());
}

Words Transcriber::transcribe(const WaveformBuffer&) const {
  fail(ErrorKind::kNotConfigured, "no waveform transcriber is configured");
}

Words ProxyTranscriber::transcribe(const TokenSequence& tokens) const {
  Words out;
  if (tokens.num_codebooks() == 0) return out;
  for (TokenId id : tokens.row(0)) out.push_back(std::to_string(id));
  return out;
}

double dwer(const TokenSequence& enhanced, const TokenSequence& clean,
            const Transcriber& transcriber) {
  return word_error_rate(transcriber.transcribe(clean), transcriber.transcribe(enhanced));
}

ProxyEmbedder::ProxyEmbedder(const CodecSpec& spec, int dim, std::uint64_t seed)
    : spec_(spec), dim_(dim) {
  if (dim < 1) fail(ErrorKind::kInvalidArgument, "embedding dimension must be positive");
  Rng rng(derive_seed(seed, {0xe3bedULL}));
  tables_.resize(static_cast<std::size_t>(spec.num_codebooks) * spec.codebook_size * dim);
  for (double& v : tables_) {
    // Box-Muller keeps the tables independent of library distributions.
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }
}

std::vector<double> ProxyEmbedder::embed(const TokenSequence& tokens) const {
  if (!tokens.spec().same_grid(spec_)) {
    fail(ErrorKind::kSpecMismatch, "embedder was built for another token grid");
  }
  if (tokens.empty()) fail(ErrorKind::kInvalidArgument, "cannot embed an empty sequence");
  std::vector<double> out(dim_, 0.0);
  for (int k = 0; k < tokens.num_codebooks(); ++k) {
    for (int t = 0; t < tokens.num_frames(); ++t) {
      const double* row =
          &tables_[(static_cast<std::size_t>(k) * spec_.codebook_size + tokens.at(k, t)) * dim_];
      for (int i = 0; i < dim_; ++i) out[i] += row[i];
    }
  }
  double norm = 0.0;
  for (double& v : out) {
    v /= tokens.num_frames();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& v : out) v /= norm;
  }
  return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorKind::kDimensionMismatch, "vectors differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    fail(ErrorKind::kInvalidArgument, "cosine similarity of a zero vector");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

TokenAccuracy token_accuracy(const TokenSequence& pred, const TokenSequence& target) {
  check_same_shape(pred, target);
  TokenAccuracy acc;
  const int t_len = target.num_frames();
  long hits_total = 0;
  for (int k = 0; k < target.num_codebooks(); ++k) {
    long hits = 0;
    for (int t = 0; t < t_len; ++t) hits += pred.at(k, t) == target.at(k, t);
    hits_total += hits;
    acc.per_codebook.push_back(t_len > 0 ? static_cast<double>(hits) / t_len : 1.0);
  }
  const double cells = static_cast<double>(target.num_codebooks()) * t_len;
  acc.pooled = cells > 0 ? hits_total / cells : 1.0;
  return acc;
}

double dnsmos_stub(const WaveformBuffer&) {
  fail(ErrorKind::kNotConfigured, "external DNSMOS backend not configured");
}

EvalRecord evaluate_utterance(const std::string& id, const std::string& mode,
                              const TokenSequence& enhanced, const TokenSequence& clean,
                              const MetricSuite& suite) {
  check_same_shape(enhanced, clean);
  EvalRecord r;
  r.id = id;
  r.mode = mode;
  const ProxyTranscriber proxy_transcriber;
  const Transcriber& transcriber = suite.transcriber ? *suite.transcriber : proxy_transcriber;
  r.dwer = clean.empty() ? 0.0 : dwer(enhanced, clean, transcriber);
  if (suite.embedder != nullptr && !clean.empty()) {
    r.cossim = cosine_similarity(suite.embedder->embed(enhanced), suite.embedder->embed(clean));
  } else {
    r.cossim = 1.0;
  }
  r.token_acc = token_accuracy(enhanced, clean).pooled;
  r.exact_match = enhanced == clean;
  if (suite.dnsmos) {
    if (!suite.detokenize) {
      fail(ErrorKind::kNotConfigured, "DNSMOS needs a detokenizer");
    }
    r.dnsmos = suite.dnsmos(suite.detokenize(enhanced));
  }
  return r;
}

void EvalReport::add(EvalRecord record) {
  if (!(record.dwer >= 0.0)) fail(ErrorKind::kInvalidArgument, "dWER must be non-negative");
  if (!(record.cossim >= -1.0 && record.cossim <= 1.0)) {
    fail(ErrorKind::kOutOfRange, "cosine similarity outside [-1, 1]");
  }
  records_.push_back(std::move(record));
}

std::map<std::string, ModeAggregate> EvalReport::aggregates() const {
  std::map<std::string, ModeAggregate> out;
  std::map<std::string, int> dnsmos_count;
  for (const auto& r : records_) {
    ModeAggregate& a = out[r.mode];
    ++a.count;
    a.dwer += r.dwer;
    a.cossim += r.cossim;
    a.token_acc += r.token_acc;
    a.exact_match += r.exact_match ? 1.0 : 0.0;
    if (r.dnsmos) {
      a.dnsmos = a.dnsmos.value_or(0.0) + *r.dnsmos;
      ++dnsmos_count[r.mode];
    }
  }
  for (auto& [mode, a] : out) {
    a.dwer /= a.count;
    a.cossim /= a.count;
    a.token_acc /= a.count;
    a.exact_match /= a.count;
    if (a.dnsmos) *a.dnsmos /= dnsmos_count[mode];
  }
  return out;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records_) {
    nlohmann::ordered_json row{{"id", r.id},
                               {"mode", r.mode},
                               {"dwer", r.dwer},
                               {"cossim", r.cossim},
                               {"token_acc", r.token_acc},
                               {"dnsmos", nullptr},
                               {"exact_match", r.exact_match}};
    if (r.dnsmos) row["dnsmos"] = *r.dnsmos;
    j["records"].push_back(row);
  }
  nlohmann::ordered_json agg = nlohmann::ordered_json::object();
  for (const auto& [mode, a] : aggregates()) {
    agg[mode] = {{"count", a.count},
                 {"dwer", a.dwer},
                 {"cossim", a.cossim},
                 {"token_acc", a.token_acc},
                 {"exact_match", a.exact_match},
                 {"dnsmos", a.dnsmos ? nlohmann::ordered_json(*a.dnsmos) : nullptr}};
  }
  j["aggregates"] = agg;
  return j;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::string out = "id,mode,dwer,cossim,token_acc,dnsmos,exact_match\n";
  for (const auto& r : records_) {
    out += csv_field(r.id) + "," + r.mode + "," + format_number(r.dwer) + "," +
           format_number(r.cossim) + "," + format_number(r.token_acc) + "," +
           (r.dnsmos ? format_number(*r.dnsmos) : "") + "," + (r.exact_match ? "1" : "0") +
           "\n";
  }
  return out;
}

}  // namespace tokse
