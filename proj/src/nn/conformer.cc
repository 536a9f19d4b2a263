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
#include "tokse/nn/conformer.h"

#include <cmath>
#include <string>

#include "tokse/core/errors.h"
#include "tokse/nn/ops.h"

namespace tokse::nn {

void ConformerConfig::validate() const {
  if (num_layers < 0) fail(ErrorKind::kInvalidArgument, "num_layers < 0");
  if (num_heads < 1 || model_dim < 1 || ffn_dim < 1) {
    fail(ErrorKind::kInvalidArgument, "conformer dimensions must be positive");
  }
  if (model_dim % num_heads != 0) {
    fail(ErrorKind::kInvalidArgument,
         "model_dim " + std::to_string(model_dim) +
             " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "dropout_p must lie in [0, 1)");
  }
  if (conv_kernel < 1 || conv_kernel % 2 == 0) {
    fail(ErrorKind::kInvalidArgument, "conv_kernel must be odd");
  }
  if (max_rel_pos < 1) fail(ErrorKind::kInvalidArgument, "max_rel_pos < 1");
}

void to_json(nlohmann::json& j, const ConformerConfig& c) {
  j = nlohmann::json{{"num_layers", c.num_layers}, {"num_heads", c.num_heads},
                     {"model_dim", c.model_dim},   {"ffn_dim", c.ffn_dim},
                     {"dropout_p", c.dropout_p},   {"causal", c.causal},
                     {"conv_kernel", c.conv_kernel},
                     {"max_rel_pos", c.max_rel_pos}};
}

void from_json(const nlohmann::json& j, ConformerConfig& c) {
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.dropout_p = j.at("dropout_p").get<double>();
  c.causal = j.at("causal").get<bool>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.max_rel_pos = j.at("max_rel_pos").get<int>();
  c.validate();
}

Linear Linear::create(ParameterSet& params, const std::string& name, int in,
                      int out, Rng& rng) {
  Linear l;
  l.weight = params.add(name + ".weight", xavier_uniform(in, out, rng));
  l.bias = params.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Var Linear::operator()(const Var& x) const { return linear(x, weight, bias); }

LayerNorm LayerNorm::create(ParameterSet& params, const std::string& name,
                            int dim) {
  LayerNorm n;
  n.gamma = params.add(name + ".gamma", Matrix::Ones(1, dim));
  n.beta = params.add(name + ".beta", Matrix::Zero(1, dim));
  return n;
}

Var LayerNorm::operator()(const Var& x) const {
  return layer_norm(x, gamma, beta);
}

ConformerLayer::ConformerLayer(ParameterSet& params, const std::string& name,
                               const ConformerConfig& config, Rng& rng)
    : config_(config) {
  config.validate();
  const int d = config.model_dim;
  const int f = config.ffn_dim;
  auto make_ff = [&](const std::string& n) {
    FeedForward ff;
    ff.norm = LayerNorm::create(params, n + ".norm", d);
    ff.up = Linear::create(params, n + ".up", d, f, rng);
    ff.down = Linear::create(params, n + ".down", f, d, rng);
    return ff;
  };
  ff1_ = make_ff(name + ".ff1");
  attn_norm_ = LayerNorm::create(params, name + ".attn.norm", d);
  query_ = Linear::create(params, name + ".attn.query", d, d, rng);
  key_ = Linear::create(params, name + ".attn.key", d, d, rng);
  value_ = Linear::create(params, name + ".attn.value", d, d, rng);
  attn_out_ = Linear::create(params, name + ".attn.out", d, d, rng);
  for (int h = 0; h < config.num_heads; ++h) {
    rel_bias_.push_back(params.add(name + ".attn.rel_bias." + std::to_string(h),
                                   Matrix::Zero(1, 2 * config.max_rel_pos + 1)));
  }
  conv_norm_ = LayerNorm::create(params, name + ".conv.norm", d);
  pointwise_in_ = Linear::create(params, name + ".conv.pointwise_in", d, 2 * d, rng);
  depthwise_weight_ = params.add(
      name + ".conv.depthwise.weight",
      uniform_matrix(config.conv_kernel, d, 1.0 / std::sqrt(config.conv_kernel), rng));
  depthwise_bias_ = params.add(name + ".conv.depthwise.bias", Matrix::Zero(1, d));
  depthwise_norm_ = LayerNorm::create(params, name + ".conv.depthwise_norm", d);
  pointwise_out_ = Linear::create(params, name + ".conv.pointwise_out", d, d, rng);
  ff2_ = make_ff(name + ".ff2");
  final_norm_ = LayerNorm::create(params, name + ".final_norm", d);
}

Var ConformerLayer::feed_forward(const FeedForward& ff, const Var& x,
                                 const ForwardContext& ctx) const {
  Var h = silu(ff.up(ff.norm(x)));
  h = dropout(h, config_.dropout_p, ctx.dropout_rng());
  return dropout(ff.down(h), config_.dropout_p, ctx.dropout_rng());
}

Var ConformerLayer::self_attention(const Var& x, const ForwardContext& ctx) const {
  const int t_len = static_cast<int>(x.rows());
  const int head_dim = config_.model_dim / config_.num_heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var h = attn_norm_(x);
  Var q = query_(h);
  Var k = key_(h);
  Var v = value_(h);
  std::vector<Var> heads;
  heads.reserve(config_.num_heads);
  for (int i = 0; i < config_.num_heads; ++i) {
    Var qh = slice_cols(q, i * head_dim, head_dim);
    Var kh = slice_cols(k, i * head_dim, head_dim);
    Var vh = slice_cols(v, i * head_dim, head_dim);
    Var scores = add(scale(matmul_nt(qh, kh), scale_factor),
                     relative_bias(rel_bias_[i], t_len, config_.max_rel_pos));
    heads.push_back(matmul(masked_softmax_rows(scores, config_.causal), vh));
  }
  Var merged = heads.size() == 1 ? heads.front() : concat_cols(heads);
  return dropout(attn_out_(merged), config_.dropout_p, ctx.dropout_rng());
}

Var ConformerLayer::convolution(const Var& x, const ForwardContext& ctx) const {
  Var h = glu(pointwise_in_(conv_norm_(x)));
  h = depthwise_conv(h, depthwise_weight_, depthwise_bias_, config_.causal);
  h = silu(depthwise_norm_(h));
  return dropout(pointwise_out_(h), config_.dropout_p, ctx.dropout_rng());
}

Var ConformerLayer::forward(const Var& x, const ForwardContext& ctx) const {
  if (x.cols() != config_.model_dim) {
    fail(ErrorKind::kDimensionMismatch, "conformer input width");
  }
  if (!x.value().allFinite()) {
    fail(ErrorKind::kNonFinite, "non-finite activations entering conformer block");
  }
  if (x.rows() == 0) return x;
  Var h = add(x, scale(feed_forward(ff1_, x, ctx), 0.5));
  h = add(h, self_attention(h, ctx));
  h = add(h, convolution(h, ctx));
  h = add(h, scale(feed_forward(ff2_, h, ctx), 0.5));
  return final_norm_(h);
}

ConformerStack::ConformerStack(ParameterSet& params, const std::string& name,
                               const ConformerConfig& config, Rng& rng)
    : config_(config) {
  config.validate();
  layers_.reserve(config.num_layers);
  for (int i = 0; i < config.num_layers; ++i) {
    layers_.emplace_back(params, name + ".layers." + std::to_string(i), config, rng);
  }
}

Var ConformerStack::forward(const Var& x, const ForwardContext& ctx) const {
  Var h = x;
  for (const auto& layer : layers_) h = layer.forward(h, ctx);
  return h;
}

std::int64_t conformer_layer_parameter_count(const ConformerConfig& c) {
  const std::int64_t d = c.model_dim;
  const std::int64_t f = c.ffn_dim;
  const std::int64_t norm = 2 * d;
  const std::int64_t ff = norm + (d * f + f) + (f * d + d);
  const std::int64_t attn =
      norm + 4 * (d * d + d) + static_cast<std::int64_t>(c.num_heads) * (2 * c.max_rel_pos + 1);
  const std::int64_t conv = norm + (d * 2 * d + 2 * d) +
                            (static_cast<std::int64_t>(c.conv_kernel) * d + d) +
                            norm + (d * d + d);
  return 2 * ff + attn + conv + norm;
}

std::int64_t conformer_stack_parameter_count(const ConformerConfig& c) {
  return c.num_layers * conformer_layer_parameter_count(c);
}

}  // namespace tokse::nn
