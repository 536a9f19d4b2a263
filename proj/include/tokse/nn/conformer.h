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

#ifndef TOKSE_NN_CONFORMER_H_
#define TOKSE_NN_CONFORMER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokse/core/random.h"
#include "tokse/nn/autograd.h"
#include "tokse/nn/parameters.h"

namespace tokse::nn {

// Training-time switches for one forward pass. Dropout is active only when
// `training` is set and an rng is supplied.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;

  Rng* dropout_rng() const { return training ? rng : nullptr; }
};

struct ConformerConfig {
  int num_layers = 6;
  int num_heads = 4;
  int model_dim = 256;
  int ffn_dim = 2048;
  double dropout_p = 0.1;
  bool causal = false;
  int conv_kernel = 31;
  // Relative offsets beyond +-max_rel_pos share one attention bias.
  int max_rel_pos = 64;

  void validate() const;
  bool operator==(const ConformerConfig&) const = default;
};

void to_json(nlohmann::json& j, const ConformerConfig& c);
void from_json(const nlohmann::json& j, ConformerConfig& c);

struct Linear {
  Var weight;  // in x out
  Var bias;    // 1 x out

  static Linear create(ParameterSet& params, const std::string& name, int in,
                       int out, Rng& rng);
  Var operator()(const Var& x) const;
};

struct LayerNorm {
  Var gamma;
  Var beta;

  static LayerNorm create(ParameterSet& params, const std::string& name,
                          int dim);
  Var operator()(const Var& x) const;
};

// One Conformer block: half-step feed-forward, relative-position
// self-attention, convolution module, half-step feed-forward, final norm.
// The convolution module normalizes with LayerNorm so every frame is
// processed independently of batch statistics.
class ConformerLayer {
 public:
  ConformerLayer(ParameterSet& params, const std::string& name,
                 const ConformerConfig& config, Rng& rng);

  Var forward(const Var& x, const ForwardContext& ctx) const;

 private:
  struct FeedForward {
    LayerNorm norm;
    Linear up;
    Linear down;
  };

  Var feed_forward(const FeedForward& ff, const Var& x,
                   const ForwardContext& ctx) const;
  Var self_attention(const Var& x, const ForwardContext& ctx) const;
  Var convolution(const Var& x, const ForwardContext& ctx) const;

  ConformerConfig config_;
  FeedForward ff1_;
  FeedForward ff2_;
  LayerNorm attn_norm_;
  Linear query_;
  Linear key_;
  Linear value_;
  Linear attn_out_;
  std::vector<Var> rel_bias_;  // one 1 x (2R + 1) table per head
  LayerNorm conv_norm_;
  Linear pointwise_in_;  // D -> 2D, followed by GLU
  Var depthwise_weight_;  // kernel x D
  Var depthwise_bias_;    // 1 x D
  LayerNorm depthwise_norm_;
  Linear pointwise_out_;
  LayerNorm final_norm_;
};

class ConformerStack {
 public:
  ConformerStack(ParameterSet& params, const std::string& name,
                 const ConformerConfig& config, Rng& rng);

  Var forward(const Var& x, const ForwardContext& ctx) const;
  const ConformerConfig& config() const { return config_; }

 private:
  ConformerConfig config_;
  std::vector<ConformerLayer> layers_;
};

// Closed-form parameter count of one block / a stack.
std::int64_t conformer_layer_parameter_count(const ConformerConfig& config);
std::int64_t conformer_stack_parameter_count(const ConformerConfig& config);

}  // namespace tokse::nn

#endif  // TOKSE_NN_CONFORMER_H_
