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
#ifndef TOKSE_MODEL_MODEL_H_
#define TOKSE_MODEL_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokse/core/archive.h"
#include "tokse/core/codec_spec.h"
#include "tokse/core/token_sequence.h"
#include "tokse/nn/autograd.h"
#include "tokse/nn/conformer.h"
#include "tokse/nn/parameters.h"

namespace tokse {

enum class ModelKind { kNar, kSet };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// Architecture hyperparameters shared by both language models. For NAR the
// encoder has `encoder_layers` blocks and there is no predictor or joiner.
struct ModelConfig {
  ModelKind kind = ModelKind::kSet;
  CodecSpec codec;
  int encoder_layers = 5;
  int predictor_layers = 1;
  int num_heads = 4;
  int model_dim = 256;
  int ffn_dim = 2048;
  double dropout_p = 0.1;
  int conv_kernel = 31;
  int max_rel_pos = 64;
  int joiner_dim = 120;
  // Give encoder and predictor their own joiner projections.
  bool separate_joiner_proj = false;
  std::uint64_t init_seed = 0;

  nn::ConformerConfig encoder_conformer() const;
  nn::ConformerConfig predictor_conformer() const;
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Paper-sized configurations: 6-layer NAR, 5 + 1 layer SET.
ModelConfig default_nar_config();
ModelConfig default_set_config();

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Per-codebook logits, one T x C matrix per codebook.
using Logits = std::vector<nn::Var>;

class TokenModel {
 public:
  explicit TokenModel(ModelConfig config);
  virtual ~TokenModel() = default;
  TokenModel(const TokenModel&) = delete;
  TokenModel& operator=(const TokenModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return config_.kind; }
  const CodecSpec& codec() const { return config_.codec; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

 protected:
  // Throws kSpecMismatch when `seq` was produced for another token grid.
  void check_input(const TokenSequence& seq) const;

  ModelConfig config_;
  nn::ParameterSet params_;
};

// Conformer encoder over summed codebook embeddings, one C-way head per
// codebook. Predictions are conditionally independent across frames.
class NarModel : public TokenModel {
 public:
  explicit NarModel(ModelConfig config);

  Logits forward(const TokenSequence& noisy, const nn::ForwardContext& ctx) const;

 private:
  std::vector<nn::Var> embeddings_;
  std::unique_ptr<nn::ConformerStack> encoder_;
  std::vector<nn::Linear> heads_;
};

// Transducer with identity alignment: non-causal encoder over the noisy
// tokens, causal predictor over the shifted clean history (C + 1 entry
// tables, id C = start token), and a joiner
// heads(tanh(proj(enc_t) + proj(pred_t))).
class SetModel : public TokenModel {
 public:
  explicit SetModel(ModelConfig config);

  // Encoder states after the joiner projection, T x joiner_dim.
  nn::Var encode(const TokenSequence& noisy, const nn::ForwardContext& ctx) const;

  // Predictor states after the joiner projection for a K x T codebook-major
  // history with ids in [0, C]. Row t depends on history frames <= t only.
  nn::Var predict(std::span<const TokenId> history, int num_frames,
                  const nn::ForwardContext& ctx) const;

  Logits join(const nn::Var& encoded, const nn::Var& predicted) const;

  // Full pass. `shifted_clean` must start every row with the start token.
  Logits forward(const TokenSequence& noisy, std::span<const TokenId> shifted_clean,
                 const nn::ForwardContext& ctx) const;

 private:
  std::vector<nn::Var> encoder_embeddings_;
  std::unique_ptr<nn::ConformerStack> encoder_;
  std::vector<nn::Var> predictor_embeddings_;
  std::unique_ptr<nn::ConformerStack> predictor_;
  nn::Linear encoder_proj_;
  nn::Linear predictor_proj_;  // aliases encoder_proj_ unless separate
  std::vector<nn::Linear> heads_;
};

// Sum of per-codebook table rows, T x D.
nn::Var embed_sum(const TokenSequence& seq, const std::vector<nn::Var>& tables);

// History for teacher forcing: [start, y_1 .. y_{T-1}] per codebook,
// codebook-major.
std::vector<TokenId> shift_with_start(const TokenSequence& clean);

// Validates a predictor history against the noisy length; throws
// kLengthMismatch, kMissingStartToken or kOutOfRange.
void check_history(std::span<const TokenId> history, const CodecSpec& spec,
                   int num_frames);

std::unique_ptr<TokenModel> make_model(const ModelConfig& config);

// Number of scalars in the instantiated model.
std::int64_t count_parameters(const TokenModel& model);
// The same count computed from the configuration alone.
std::int64_t expected_parameter_count(const ModelConfig& config);

// Logits as plain matrices.
std::vector<nn::Matrix> logits_values(const Logits& logits);

// Checkpoint: archive metadata {"format", "version", "model": config,
// optional "training"} plus one float32 array per parameter under "model.".
inline constexpr int kModelCheckpointVersion = 1;

void export_model(const TokenModel& model, Archive& archive);
std::unique_ptr<TokenModel> import_model(const Archive& archive);
void save_model(const TokenModel& model, const std::filesystem::path& path,
                const nlohmann::json& training = nullptr);
std::unique_ptr<TokenModel> load_model(const std::filesystem::path& path);

}  // namespace tokse

#endif  // TOKSE_MODEL_MODEL_H_
