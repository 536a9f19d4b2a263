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

#ifndef TOKSE_NN_OPS_H_
#define TOKSE_NN_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "tokse/core/random.h"
#include "tokse/nn/autograd.h"

// Differentiable operations. Sequences are T x D matrices, one frame per
// row.
namespace tokse::nn {

Var constant(Matrix value);

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_nt(const Var& a, const Var& b);
// x * w + bias, with `bias` a 1 x out row (may be undefined).
Var linear(const Var& x, const Var& w, const Var& bias);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// Broadcasts a 1 x D row over every row of x.
Var add_row(const Var& x, const Var& row);

Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var silu(const Var& x);
// First half of the columns gated by the sigmoid of the second half.
Var glu(const Var& x);

Var layer_norm(const Var& x, const Var& gamma, const Var& beta,
               double eps = 1e-5);

// Inverted dropout; identity when p == 0 or rng is null.
Var dropout(const Var& x, double p, Rng* rng);

Var slice_cols(const Var& x, int start, int count);
Var concat_cols(const std::vector<Var>& parts);

// Row softmax. With `causal`, entry (i, j > i) is excluded: probability
// exactly 0 and no gradient.
Var masked_softmax_rows(const Var& scores, bool causal);

// T x T matrix B(i, j) = table(0, clamp(j - i, -R, R) + R) for a
// 1 x (2R + 1) table.
Var relative_bias(const Var& table, int length, int max_distance);

// Per-channel 1-D convolution over time with zero padding. Causal kernels
// only see frames <= t; otherwise the kernel is centered (odd size).
Var depthwise_conv(const Var& x, const Var& weight, const Var& bias,
                   bool causal);

// out(t) = sum_k tables[k](ids[k * T + t]); ids is codebook-major K x T.
Var embedding_sum(const std::vector<Var>& tables,
                  std::span<const std::int32_t> ids, int num_frames);

// Sum over rows of -log softmax(logits(t))[targets[t]]; a 1 x 1 result.
Var cross_entropy_sum(const Var& logits, std::span<const std::int32_t> targets);

// Sum of squared differences against a constant target; 1 x 1.
Var squared_error_sum(const Var& pred, const Matrix& target);

Var sum_all(const Var& x);

// Plain (non-differentiable) helpers.
Matrix log_softmax_rows(const Matrix& logits);
Matrix softmax_rows(const Matrix& logits);

}  // namespace tokse::nn

#endif  // TOKSE_NN_OPS_H_
