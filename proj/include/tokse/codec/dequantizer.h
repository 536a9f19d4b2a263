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
#ifndef TOKSE_CODEC_DEQUANTIZER_H_
#define TOKSE_CODEC_DEQUANTIZER_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "tokse/core/codec_spec.h"
#include "tokse/core/token_sequence.h"
#include "tokse/nn/conformer.h"
#include "tokse/nn/parameters.h"

namespace tokse {

struct DequantizerConfig {
  CodecSpec codec;
  int feature_dim = 24;
  int model_dim = 32;
  int num_layers = 1;
  int num_heads = 2;
  int ffn_dim = 64;
  int conv_kernel = 3;
  int max_rel_pos = 8;
  std::uint64_t init_seed = 0;

  void validate() const;
};

// Token embeddings -> non-causal Conformer -> linear map to features.
class Dequantizer {
 public:
  explicit Dequantizer(const DequantizerConfig& config);

  nn::Var forward(const TokenSequence& seq, const nn::ForwardContext& ctx = {}) const;
  nn::Matrix predict(const TokenSequence& seq) const;

  const DequantizerConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

 private:
  DequantizerConfig config_;
  nn::ParameterSet params_;
  std::vector<nn::Var> tables_;
  std::unique_ptr<nn::ConformerStack> stack_;
  nn::Linear out_;
};

struct DequantizerPair {
  TokenSequence tokens;
  nn::Matrix features;  // T x feature_dim
};

struct DequantizerTrainOptions {
  int epochs = 100;
  double lr = 3e-3;
  std::uint64_t seed = 0;
};

struct DequantizerFit {
  Dequantizer model;
  std::vector<double> epoch_loss;  // mean squared error per element
  double final_loss = 0.0;
  // Error of the per-dimension constant-mean predictor.
  double target_variance = 0.0;
};

// Throws kInsufficientData for an empty set and kLengthMismatch /
// kDimensionMismatch for misaligned pairs.
DequantizerFit train_dequantizer(const std::vector<DequantizerPair>& pairs,
                                 const DequantizerConfig& config,
                                 const DequantizerTrainOptions& options = {});

double mean_squared_error(const Dequantizer& model,
                          const std::vector<DequantizerPair>& pairs);

}  // namespace tokse

#endif  // TOKSE_CODEC_DEQUANTIZER_H_
