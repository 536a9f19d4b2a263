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
#ifndef TOKSE_METRICS_METRICS_H_
#define TOKSE_METRICS_METRICS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokse/core/token_sequence.h"
#include "tokse/core/waveform.h"

namespace tokse {

using Words = std::vector<std::string>;

// Whitespace tokenization; case is preserved.
Words split_words(const std::string& text);

struct EditCounts {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int hits = 0;

  int errors() const { return substitutions + deletions + insertions; }
};

// Unit-cost minimum edit alignment. Among optimal paths the backtrace
// prefers hits/substitutions, then deletions, then insertions.
EditCounts align_words(const Words& reference, const Words& hypothesis);

// (S + D + I) / |reference|. Throws kInvalidArgument for an empty reference.
double word_error_rate(const Words& reference, const Words& hypothesis);

class Transcriber {
 public:
  virtual ~Transcriber() = default;
  virtual Words transcribe(const TokenSequence& tokens) const = 0;
  // Waveform input needs a real recognizer; the default reports kNotConfigured.
  virtual Words transcribe(const WaveformBuffer& wave) const;
};

// Codebook-0 ids rendered as words.
class ProxyTranscriber : public Transcriber {
 public:
  using Transcriber::transcribe;
  Words transcribe(const TokenSequence& tokens) const override;
};

// Reference is the transcription of the clean signal.
double dwer(const TokenSequence& enhanced, const TokenSequence& clean,
            const Transcriber& transcriber);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> embed(const TokenSequence& tokens) const = 0;
};

// L2-normalized mean over frames of the summed per-codebook embeddings,
// using fixed Gaussian tables drawn from `seed`.
class ProxyEmbedder : public Embedder {
 public:
  ProxyEmbedder(const CodecSpec& spec, int dim = 64, std::uint64_t seed = 0);

  int dim() const override { return dim_; }
  std::vector<double> embed(const TokenSequence& tokens) const override;

 private:
  CodecSpec spec_;
  int dim_;
  std::vector<double> tables_;  // K x C x dim
};

// Throws kInvalidArgument for a zero vector and kDimensionMismatch.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

struct TokenAccuracy {
  std::vector<double> per_codebook;
  double pooled = 0.0;
};

// Throws kSpecMismatch / kLengthMismatch. Empty grids score 1.
TokenAccuracy token_accuracy(const TokenSequence& pred, const TokenSequence& target);

using DnsmosBackend = std::function<double(const WaveformBuffer&)>;

// Always throws kNotConfigured.
[[noreturn]] double dnsmos_stub(const WaveformBuffer& wave);

struct EvalRecord {
  std::string id;
  std::string mode;  // TF, BS, BSR or NAR
  double dwer = 0.0;
  double cossim = 0.0;
  double token_acc = 0.0;
  std::optional<double> dnsmos;
  bool exact_match = false;
};

struct ModeAggregate {
  int count = 0;
  double dwer = 0.0;
  double cossim = 0.0;
  double token_acc = 0.0;
  double exact_match = 0.0;  // fraction of utterances decoded exactly
  std::optional<double> dnsmos;
};

struct MetricSuite {
  const Transcriber* transcriber = nullptr;
  const Embedder* embedder = nullptr;
  DnsmosBackend dnsmos;  // optional
  // Needed only when a DNSMOS backend is set.
  std::function<WaveformBuffer(const TokenSequence&)> detokenize;
};

EvalRecord evaluate_utterance(const std::string& id, const std::string& mode,
                              const TokenSequence& enhanced, const TokenSequence& clean,
                              const MetricSuite& suite);

class EvalReport {
 public:
  void add(EvalRecord record);

  const std::vector<EvalRecord>& records() const { return records_; }
  // Keyed by mode, in sorted order.
  std::map<std::string, ModeAggregate> aggregates() const;

  nlohmann::ordered_json to_json() const;
  // Header: id,mode,dwer,cossim,token_acc,dnsmos,exact_match
  std::string to_csv() const;

 private:
  std::vector<EvalRecord> records_;
};

// Shortest round-trip decimal form, used for CSV cells.
std::string format_number(double value);

}  // namespace tokse

#endif  // TOKSE_METRICS_METRICS_H_
