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
#include "tokse/codec/dequantizer.h"

#include <numeric>

#include "tokse/core/errors.h"
#include "tokse/model/model.h"
#include "tokse/nn/ops.h"
#include "tokse/training/training.h"

namespace tokse {
namespace {

nn::ConformerConfig stack_config(const DequantizerConfig& c) {
  nn::ConformerConfig s;
  s.num_layers = c.num_layers;
  s.num_heads = c.num_heads;
  s.model_dim = c.model_dim;
  s.ffn_dim = c.ffn_dim;
  s.dropout_p = 0.0;
  s.conv_kernel = c.conv_kernel;
  s.max_rel_pos = c.max_rel_pos;
  return s;
}

std::vector<nn::Var> make_tables(nn::ParameterSet& params, const CodecSpec& codec, int dim,
                                 Rng& rng) {
  std::vector<nn::Var> tables;
  for (int k = 0; k < codec.num_codebooks; ++k) {
    tables.push_back(params.add("dequantizer.embed." + std::to_string(k),
                                nn::normal_matrix(codec.codebook_size, dim, 1.0, rng)));
  }
  return tables;
}

void check_pair(const DequantizerPair& p, const DequantizerConfig& c) {
  if (!p.tokens.spec().same_grid(c.codec)) {
    fail(ErrorKind::kSpecMismatch, "token grid does not match the dequantizer");
  }
  if (p.features.rows() != p.tokens.num_frames()) {
    fail(ErrorKind::kLengthMismatch, "features and tokens differ in length");
  }
  if (p.features.cols() != c.feature_dim) {
    fail(ErrorKind::kDimensionMismatch, "feature width does not match the dequantizer");
  }
}

}  // namespace

void DequantizerConfig::validate() const {
  codec.validate();
  if (feature_dim < 1) fail(ErrorKind::kInvalidArgument, "feature_dim must be positive");
  stack_config(*this).validate();
}

Dequantizer::Dequantizer(const DequantizerConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config.init_seed, {2}));
  tables_ = make_tables(params_, config.codec, config.model_dim, rng);
  stack_ = std::make_unique<nn::ConformerStack>(params_, "dequantizer.stack",
                                                stack_config(config), rng);
  out_ = nn::Linear::create(params_, "dequantizer.out", config.model_dim,
                            config.feature_dim, rng);
}

nn::Var Dequantizer::forward(const TokenSequence& seq, const nn::ForwardContext& ctx) const {
  if (!seq.spec().same_grid(config_.codec)) {
    fail(ErrorKind::kSpecMismatch, "token grid does not match the dequantizer");
  }
  return out_(stack_->forward(embed_sum(seq, tables_), ctx));
}

nn::Matrix Dequantizer::predict(const TokenSequence& seq) const {
  nn::NoGradGuard no_grad;
  return forward(seq).value();
}

double mean_squared_error(const Dequantizer& model, const std::vector<DequantizerPair>& pairs) {
  double err = 0.0;
  double count = 0.0;
  for (const auto& p : pairs) {
    check_pair(p, model.config());
    err += (model.predict(p.tokens) - p.features).squaredNorm();
    count += static_cast<double>(p.features.size());
  }
  return count > 0.0 ? err / count : 0.0;
}

DequantizerFit train_dequantizer(const std::vector<DequantizerPair>& pairs,
                                 const DequantizerConfig& config,
                                 const DequantizerTrainOptions& options) {
  if (pairs.empty()) fail(ErrorKind::kInsufficientData, "dequantizer needs training pairs");
  for (const auto& p : pairs) check_pair(p, config);
  DequantizerFit fit{Dequantizer(config), {}, 0.0, 0.0};

  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(config.feature_dim);
  double rows = 0.0;
  for (const auto& p : pairs) {
    sum += p.features.colwise().sum();
    rows += static_cast<double>(p.features.rows());
  }
  if (rows == 0.0) fail(ErrorKind::kInsufficientData, "dequantizer pairs are all empty");
  const Eigen::RowVectorXd mean = sum / rows;
  double spread = 0.0;
  for (const auto& p : pairs) spread += (p.features.rowwise() - mean).squaredNorm();
  fit.target_variance = spread / (rows * config.feature_dim);

  TrainConfig adam;
  adam.lr_init = options.lr;
  adam.weight_decay = 0.0;
  AdamW optimizer(fit.model.params(), adam);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_int(rng, static_cast<int>(i))]);
    }
    double err = 0.0;
    double count = 0.0;
    for (std::size_t idx : order) {
      const auto& p = pairs[idx];
      if (p.features.rows() == 0) continue;
      fit.model.params().zero_grad();
      nn::Var loss = nn::squared_error_sum(fit.model.forward(p.tokens), p.features);
      err += loss.item();
      count += static_cast<double>(p.features.size());
      nn::scale(loss, 1.0 / static_cast<double>(p.features.size())).backward();
      optimizer.step();
    }
    fit.epoch_loss.push_back(err / count);
  }
  fit.model.params().zero_grad();
  fit.final_loss = mean_squared_error(fit.model, pairs);
  return fit;
}

}  // namespace tokse
