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
#include "tokse/model/model.h"

#include <cmath>

#include "tokse/core/errors.h"
#include "tokse/core/json_util.h"
#include "tokse/nn/ops.h"

namespace tokse {

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::kNar ? "nar" : "set";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "nar") return ModelKind::kNar;
  if (name == "set") return ModelKind::kSet;
  fail(ErrorKind::kInvalidArgument, "unknown model kind '" + name + "'");
}

nn::ConformerConfig ModelConfig::encoder_conformer() const {
  nn::ConformerConfig c;
  c.num_layers = encoder_layers;
  c.num_heads = num_heads;
  c.model_dim = model_dim;
  c.ffn_dim = ffn_dim;
  c.dropout_p = dropout_p;
  c.causal = false;
  c.conv_kernel = conv_kernel;
  c.max_rel_pos = max_rel_pos;
  return c;
}

nn::ConformerConfig ModelConfig::predictor_conformer() const {
  nn::ConformerConfig c = encoder_conformer();
  c.num_layers = predictor_layers;
  c.causal = true;
  return c;
}

void ModelConfig::validate() const {
  codec.validate();
  encoder_conformer().validate();
  if (encoder_layers < 1) fail(ErrorKind::kInvalidArgument, "encoder_layers < 1");
  if (kind == ModelKind::kSet) {
    if (predictor_layers < 1) {
      fail(ErrorKind::kInvalidArgument, "predictor_layers < 1");
    }
    if (joiner_dim < 1) fail(ErrorKind::kInvalidArgument, "joiner_dim < 1");
  }
}

ModelConfig default_nar_config() {
  ModelConfig c;
  c.kind = ModelKind::kNar;
  c.encoder_layers = 6;
  c.predictor_layers = 0;
  return c;
}

ModelConfig default_set_config() { return ModelConfig{}; }

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"kind", model_kind_name(c.kind)},
                     {"codec", c.codec},
                     {"encoder_layers", c.encoder_layers},
                     {"predictor_layers", c.predictor_layers},
                     {"num_heads", c.num_heads},
                     {"model_dim", c.model_dim},
                     {"ffn_dim", c.ffn_dim},
                     {"dropout_p", c.dropout_p},
                     {"conv_kernel", c.conv_kernel},
                     {"max_rel_pos", c.max_rel_pos},
                     {"joiner_dim", c.joiner_dim},
                     {"separate_joiner_proj", c.separate_joiner_proj},
                     {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  require_known_keys(j, "model",
                     {"kind", "codec", "encoder_layers", "predictor_layers",
                      "num_heads", "model_dim", "ffn_dim", "dropout_p",
                      "conv_kernel", "max_rel_pos", "joiner_dim",
                      "separate_joiner_proj", "init_seed"});
  if (auto it = j.find("kind"); it != j.end()) {
    c = parse_model_kind(it->get<std::string>()) == ModelKind::kNar
            ? default_nar_config()
            : default_set_config();
  }
  get_optional(j, "codec", c.codec);
  get_optional(j, "encoder_layers", c.encoder_layers);
  get_optional(j, "predictor_layers", c.predictor_layers);
  get_optional(j, "num_heads", c.num_heads);
  get_optional(j, "model_dim", c.model_dim);
  get_optional(j, "ffn_dim", c.ffn_dim);
  get_optional(j, "dropout_p", c.dropout_p);
  get_optional(j, "conv_kernel", c.conv_kernel);
  get_optional(j, "max_rel_pos", c.max_rel_pos);
  get_optional(j, "joiner_dim", c.joiner_dim);
  get_optional(j, "separate_joiner_proj", c.separate_joiner_proj);
  get_optional(j, "init_seed", c.init_seed);
  c.validate();
}

TokenModel::TokenModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
}

void TokenModel::check_input(const TokenSequence& seq) const {
  if (!seq.spec().same_grid(config_.codec)) {
    fail(ErrorKind::kSpecMismatch,
         "token grid (K=" + std::to_string(seq.num_codebooks()) +
             ", C=" + std::to_string(seq.spec().codebook_size) +
             ") does not match the model (K=" +
             std::to_string(config_.codec.num_codebooks) +
             ", C=" + std::to_string(config_.codec.codebook_size) + ")");
  }
}

namespace {

std::vector<nn::Var> make_tables(nn::ParameterSet& params,
                                 const std::string& name, int count, int rows,
                                 int dim, Rng& rng) {
  std::vector<nn::Var> tables;
  for (int k = 0; k < count; ++k) {
    tables.push_back(params.add(name + "." + std::to_string(k),
                                nn::normal_matrix(rows, dim, 1.0, rng)));
  }
  return tables;
}

std::vector<nn::Linear> make_heads(nn::ParameterSet& params, int count, int in,
                                   int out, Rng& rng) {
  std::vector<nn::Linear> heads;
  for (int k = 0; k < count; ++k) {
    heads.push_back(
        nn::Linear::create(params, "heads." + std::to_string(k), in, out, rng));
    // Small output weights start every model near the uniform prediction.
    heads.back().weight.mutable_value() *= 0.1;
  }
  return heads;
}

}  // namespace

NarModel::NarModel(ModelConfig config) : TokenModel(std::move(config)) {
  if (config_.kind != ModelKind::kNar) {
    fail(ErrorKind::kInvalidArgument, "NarModel needs kind nar");
  }
  Rng rng(derive_seed(config_.init_seed, {0}));
  const int k = config_.codec.num_codebooks;
  const int c = config_.codec.codebook_size;
  embeddings_ = make_tables(params_, "encoder.embed", k, c, config_.model_dim, rng);
  encoder_ = std::make_unique<nn::ConformerStack>(params_, "encoder",
                                                  config_.encoder_conformer(), rng);
  heads_ = make_heads(params_, k, config_.model_dim, c, rng);
}

Logits NarModel::forward(const TokenSequence& noisy,
                         const nn::ForwardContext& ctx) const {
  check_input(noisy);
  nn::Var h = encoder_->forward(embed_sum(noisy, embeddings_), ctx);
  Logits out;
  for (const auto& head : heads_) out.push_back(head(h));
  return out;
}

SetModel::SetModel(ModelConfig config) : TokenModel(std::move(config)) {
  if (config_.kind != ModelKind::kSet) {
    fail(ErrorKind::kInvalidArgument, "SetModel needs kind set");
  }
  Rng rng(derive_seed(config_.init_seed, {1}));
  const int k = config_.codec.num_codebooks;
  const int c = config_.codec.codebook_size;
  const int d = config_.model_dim;
  encoder_embeddings_ = make_tables(params_, "encoder.embed", k, c, d, rng);
  encoder_ = std::make_unique<nn::ConformerStack>(params_, "encoder",
                                                  config_.encoder_conformer(), rng);
  predictor_embeddings_ = make_tables(params_, "predictor.embed", k, c + 1, d, rng);
  predictor_ = std::make_unique<nn::ConformerStack>(
      params_, "predictor", config_.predictor_conformer(), rng);
  if (config_.separate_joiner_proj) {
    encoder_proj_ = nn::Linear::create(params_, "joiner.encoder_proj", d,
                                       config_.joiner_dim, rng);
    predictor_proj_ = nn::Linear::create(params_, "joiner.predictor_proj", d,
                                         config_.joiner_dim, rng);
  } else {
    encoder_proj_ =
        nn::Linear::create(params_, "joiner.proj", d, config_.joiner_dim, rng);
    predictor_proj_ = encoder_proj_;
  }
  heads_ = make_heads(params_, k, config_.joiner_dim, c, rng);
}

nn::Var SetModel::encode(const TokenSequence& noisy,
                         const nn::ForwardContext& ctx) const {
  check_input(noisy);
  return encoder_proj_(encoder_->forward(embed_sum(noisy, encoder_embeddings_), ctx));
}

nn::Var SetModel::predict(std::span<const TokenId> history, int num_frames,
                          const nn::ForwardContext& ctx) const {
  check_history(history, config_.codec, num_frames);
  nn::Var e = nn::embedding_sum(predictor_embeddings_, history, num_frames);
  return predictor_proj_(predictor_->forward(e, ctx));
}

Logits SetModel::join(const nn::Var& encoded, const nn::Var& predicted) const {
  if (encoded.rows() != predicted.rows()) {
    fail(ErrorKind::kLengthMismatch, "encoder and predictor lengths differ");
  }
  nn::Var z = nn::tanh(nn::add(encoded, predicted));
  Logits out;
  for (const auto& head : heads_) out.push_back(head(z));
  return out;
}

Logits SetModel::forward(const TokenSequence& noisy,
                         std::span<const TokenId> shifted_clean,
                         const nn::ForwardContext& ctx) const {
  check_input(noisy);
  check_history(shifted_clean, config_.codec, noisy.num_frames());
  return join(encode(noisy, ctx), predict(shifted_clean, noisy.num_frames(), ctx));
}

nn::Var embed_sum(const TokenSequence& seq, const std::vector<nn::Var>& tables) {
  if (static_cast<int>(tables.size()) != seq.num_codebooks()) {
    fail(ErrorKind::kSpecMismatch, "need one embedding table per codebook");
  }
  return nn::embedding_sum(tables, seq.data(), seq.num_frames());
}

std::vector<TokenId> shift_with_start(const TokenSequence& clean) {
  const int k_count = clean.num_codebooks();
  const int t_len = clean.num_frames();
  std::vector<TokenId> out(static_cast<std::size_t>(k_count) * t_len);
  for (int k = 0; k < k_count; ++k) {
    for (int t = 0; t < t_len; ++t) {
      out[k * t_len + t] =
          t == 0 ? clean.spec().start_token() : clean.at(k, t - 1);
    }
  }
  return out;
}

void check_history(std::span<const TokenId> history, const CodecSpec& spec,
                   int num_frames) {
  const int k_count = spec.num_codebooks;
  if (history.size() != static_cast<std::size_t>(k_count) * num_frames) {
    fail(ErrorKind::kLengthMismatch,
         "predictor history holds " + std::to_string(history.size()) +
             " ids, expected " + std::to_string(k_count) + " x " +
             std::to_string(num_frames));
  }
  for (int k = 0; k < k_count && num_frames > 0; ++k) {
    if (history[static_cast<std::size_t>(k) * num_frames] != spec.start_token()) {
      fail(ErrorKind::kMissingStartToken,
           "codebook " + std::to_string(k) + " history must begin with the start token");
    }
  }
  for (TokenId id : history) {
    if (id < 0 || id > spec.start_token()) {
      fail(ErrorKind::kOutOfRange, "history id " + std::to_string(id) + " out of range");
    }
  }
}

std::unique_ptr<TokenModel> make_model(const ModelConfig& config) {
  if (config.kind == ModelKind::kNar) return std::make_unique<NarModel>(config);
  return std::make_unique<SetModel>(config);
}

std::int64_t count_parameters(const TokenModel& model) {
  return model.params().scalar_count();
}

std::int64_t expected_parameter_count(const ModelConfig& config) {
  const std::int64_t k = config.codec.num_codebooks;
  const std::int64_t c = config.codec.codebook_size;
  const std::int64_t d = config.model_dim;
  const std::int64_t encoder =
      k * c * d + nn::conformer_stack_parameter_count(config.encoder_conformer());
  if (config.kind == ModelKind::kNar) return encoder + k * (d * c + c);
  const std::int64_t j = config.joiner_dim;
  const std::int64_t predictor =
      k * (c + 1) * d +
      nn::conformer_stack_parameter_count(config.predictor_conformer());
  const std::int64_t proj = (d * j + j) * (config.separate_joiner_proj ? 2 : 1);
  return encoder + predictor + proj + k * (j * c + c);
}

std::vector<nn::Matrix> logits_values(const Logits& logits) {
  std::vector<nn::Matrix> out;
  out.reserve(logits.size());
  for (const auto& l : logits) out.push_back(l.value());
  return out;
}

void export_model(const TokenModel& model, Archive& archive) {
  archive.metadata["format"] = "tokse-model";
  archive.metadata["version"] = kModelCheckpointVersion;
  archive.metadata["model"] = model.config();
  model.params().export_to(archive, "model.");
}

std::unique_ptr<TokenModel> import_model(const Archive& archive) {
  const auto& meta = archive.metadata;
  if (meta.value("format", "") != "tokse-model") {
    fail(ErrorKind::kMalformedDocument, "archive is not a model checkpoint");
  }
  if (!meta.contains("version")) {
    fail(ErrorKind::kMalformedDocument, "model checkpoint without version");
  }
  if (meta.at("version").get<int>() != kModelCheckpointVersion) {
    fail(ErrorKind::kMalformedDocument, "unsupported model checkpoint version");
  }
  auto model = make_model(meta.at("model").get<ModelConfig>());
  model->params().import_from(archive, "model.");
  if (!model->params().all_finite()) {
    fail(ErrorKind::kNonFinite, "checkpoint holds non-finite parameters");
  }
  return model;
}

void save_model(const TokenModel& model, const std::filesystem::path& path,
                const nlohmann::json& training) {
  Archive archive;
  export_model(model, archive);
  if (!training.is_null()) archive.metadata["training"] = training;
  write_archive(archive, path);
}

std::unique_ptr<TokenModel> load_model(const std::filesystem::path& path) {
  return import_model(read_archive(path));
}

}  // namespace tokse
