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
#include "tokse/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "tokse/core/errors.h"

namespace tokse::nn {
namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::kDimensionMismatch,
         std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
             std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
             "x" + std::to_string(b.cols()));
  }
}

void accumulate(const Var& v, const Matrix& g) {
  if (v.requires_grad()) v.node()->add_grad(g);
}

}  // namespace

Var constant(Matrix value) { return Var(std::move(value), false); }

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::kDimensionMismatch, "matmul inner dimensions differ");
  }
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    if (a.requires_grad()) a.node()->add_grad(self.grad * b.value().transpose());
    if (b.requires_grad()) b.node()->add_grad(a.value().transpose() * self.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) {
    fail(ErrorKind::kDimensionMismatch, "matmul_nt inner dimensions differ");
  }
  Matrix out = a.value() * b.value().transpose();
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    if (a.requires_grad()) a.node()->add_grad(self.grad * b.value());
    if (b.requires_grad()) b.node()->add_grad(self.grad.transpose() * a.value());
  });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
  if (x.cols() != w.rows()) {
    fail(ErrorKind::kDimensionMismatch,
         "linear: input width " + std::to_string(x.cols()) + " vs weight rows " +
             std::to_string(w.rows()));
  }
  Matrix out = x.value() * w.value();
  if (bias.defined()) out.rowwise() += bias.value().row(0);
  return make_result(std::move(out), {x, w, bias}, [x, w, bias](Node& self) {
    if (x.requires_grad()) x.node()->add_grad(self.grad * w.value().transpose());
    if (w.requires_grad()) w.node()->add_grad(x.value().transpose() * self.grad);
    if (bias.defined() && bias.requires_grad()) {
      bias.node()->add_grad(self.grad.colwise().sum());
    }
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [a, b](Node& self) {
    accumulate(a, self.grad);
    accumulate(b, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [a, b](Node& self) {
    accumulate(a, self.grad);
    if (b.requires_grad()) b.node()->add_grad(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make_result(a.value().cwiseProduct(b.value()), {a, b},
                     [a, b](Node& self) {
                       if (a.requires_grad()) {
                         a.node()->add_grad(self.grad.cwiseProduct(b.value()));
                       }
                       if (b.requires_grad()) {
                         b.node()->add_grad(self.grad.cwiseProduct(a.value()));
                       }
                     });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [a, s](Node& self) {
    if (a.requires_grad()) a.node()->add_grad(self.grad * s);
  });
}

Var add_row(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    fail(ErrorKind::kDimensionMismatch, "add_row expects a 1 x D row");
  }
  Matrix out = x.value();
  out.rowwise() += row.value().row(0);
  return make_result(std::move(out), {x, row}, [x, row](Node& self) {
    accumulate(x, self.grad);
    if (row.requires_grad()) row.node()->add_grad(self.grad.colwise().sum());
  });
}

Var tanh(const Var& x) {
  Matrix y = x.value().array().tanh().matrix();
  Matrix y_copy = y;
  return make_result(std::move(y), {x}, [x, y = std::move(y_copy)](Node& self) {
    if (x.requires_grad()) {
      x.node()->add_grad(
          (self.grad.array() * (1.0 - y.array().square())).matrix());
    }
  });
}

Var sigmoid(const Var& x) {
  Matrix y = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  Matrix y_copy = y;
  return make_result(std::move(y), {x}, [x, y = std::move(y_copy)](Node& self) {
    if (x.requires_grad()) {
      x.node()->add_grad(
          (self.grad.array() * y.array() * (1.0 - y.array())).matrix());
    }
  });
}

Var silu(const Var& x) {
  Matrix s = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  Matrix y = x.value().cwiseProduct(s);
  return make_result(std::move(y), {x}, [x, s = std::move(s)](Node& self) {
    if (x.requires_grad()) {
      const auto& xv = x.value().array();
      x.node()->add_grad(
          (self.grad.array() * s.array() * (1.0 + xv * (1.0 - s.array())))
              .matrix());
    }
  });
}

Var glu(const Var& x) {
  if (x.cols() % 2 != 0) {
    fail(ErrorKind::kDimensionMismatch, "glu needs an even column count");
  }
  const Eigen::Index half = x.cols() / 2;
  Matrix a = x.value().leftCols(half);
  Matrix gate = (1.0 / (1.0 + (-x.value().rightCols(half).array()).exp())).matrix();
  Matrix y = a.cwiseProduct(gate);
  return make_result(
      std::move(y), {x},
      [x, half, a = std::move(a), gate = std::move(gate)](Node& self) {
        if (!x.requires_grad()) return;
        Matrix g(x.rows(), x.cols());
        g.leftCols(half) = self.grad.cwiseProduct(gate);
        g.rightCols(half) = (self.grad.array() * a.array() * gate.array() *
                             (1.0 - gate.array()))
                                .matrix();
        x.node()->add_grad(g);
      });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gamma.cols() != d || beta.cols() != d) {
    fail(ErrorKind::kDimensionMismatch, "layer_norm parameter width");
  }
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.value().row(i).mean();
    const double var =
        (x.value().row(i).array() - mean).square().sum() / static_cast<double>(d);
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.value().row(i).array() - mean) * inv_std(i);
  }
  Matrix y = xhat;
  for (Eigen::Index i = 0; i < n; ++i) {
    y.row(i) = xhat.row(i).cwiseProduct(gamma.value().row(0)) + beta.value().row(0);
  }
  return make_result(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std](Node& self) {
        const Matrix& g = self.grad;
        if (gamma.requires_grad()) {
          gamma.node()->add_grad(g.cwiseProduct(xhat).colwise().sum());
        }
        if (beta.requires_grad()) beta.node()->add_grad(g.colwise().sum());
        if (!x.requires_grad()) return;
        const double dd = static_cast<double>(xhat.cols());
        Matrix dx(xhat.rows(), xhat.cols());
        for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
          Eigen::RowVectorXd dxhat = g.row(i).cwiseProduct(gamma.value().row(0));
          const double m1 = dxhat.sum() / dd;
          const double m2 = dxhat.cwiseProduct(xhat.row(i)).sum() / dd;
          dx.row(i) = (dxhat.array() - m1 - xhat.row(i).array() * m2) * inv_std(i);
        }
        x.node()->add_grad(dx);
      });
}

Var dropout(const Var& x, double p, Rng* rng) {
  if (p <= 0.0 || rng == nullptr) return x;
  const double keep = 1.0 - p;
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
  }
  Matrix y = x.value().cwiseProduct(mask);
  return make_result(std::move(y), {x}, [x, mask = std::move(mask)](Node& self) {
    if (x.requires_grad()) x.node()->add_grad(self.grad.cwiseProduct(mask));
  });
}

Var slice_cols(const Var& x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    fail(ErrorKind::kOutOfRange, "slice_cols outside matrix");
  }
  Matrix y = x.value().middleCols(start, count);
  return make_result(std::move(y), {x}, [x, start, count](Node& self) {
    if (!x.requires_grad()) return;
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    g.middleCols(start, count) = self.grad;
    x.node()->add_grad(g);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorKind::kInvalidArgument, "concat of nothing");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      fail(ErrorKind::kDimensionMismatch, "concat_cols row counts differ");
    }
    cols += p.cols();
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    y.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make_result(std::move(y), parts, [parts](Node& self) {
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) {
        p.node()->add_grad(self.grad.middleCols(offset, p.cols()));
      }
      offset += p.cols();
    }
  });
}

Var masked_softmax_rows(const Var& scores, bool causal) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index m = scores.cols();
  Matrix p = Matrix::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index valid = causal ? std::min<Eigen::Index>(i + 1, m) : m;
    const auto row = scores.value().row(i).head(valid);
    const double mx = row.maxCoeff();
    auto e = (row.array() - mx).exp();
    p.row(i).head(valid) = e / e.sum();
  }
  Matrix p_copy = p;
  return make_result(
      std::move(p), {scores}, [scores, causal, p = std::move(p_copy)](Node& self) {
        if (!scores.requires_grad()) return;
        Matrix g = Matrix::Zero(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
          const Eigen::Index valid =
              causal ? std::min<Eigen::Index>(i + 1, p.cols()) : p.cols();
          const auto pr = p.row(i).head(valid);
          const auto gr = self.grad.row(i).head(valid);
          const double dot = pr.dot(gr);
          g.row(i).head(valid) = pr.array() * (gr.array() - dot);
        }
        scores.node()->add_grad(g);
      });
}

Var relative_bias(const Var& table, int length, int max_distance) {
  if (table.rows() != 1 || table.cols() != 2 * max_distance + 1) {
    fail(ErrorKind::kDimensionMismatch, "relative bias table width");
  }
  auto index = [max_distance](int i, int j) {
    return std::clamp(j - i, -max_distance, max_distance) + max_distance;
  };
  Matrix b(length, length);
  for (int i = 0; i < length; ++i) {
    for (int j = 0; j < length; ++j) b(i, j) = table.value()(0, index(i, j));
  }
  return make_result(std::move(b), {table}, [table, length, index](Node& self) {
    if (!table.requires_grad()) return;
    Matrix g = Matrix::Zero(1, table.cols());
    for (int i = 0; i < length; ++i) {
      for (int j = 0; j < length; ++j) g(0, index(i, j)) += self.grad(i, j);
    }
    table.node()->add_grad(g);
  });
}

Var depthwise_conv(const Var& x, const Var& weight, const Var& bias,
                   bool causal) {
  const int t_len = static_cast<int>(x.rows());
  const int kernel = static_cast<int>(weight.rows());
  if (weight.cols() != x.cols() || bias.cols() != x.cols()) {
    fail(ErrorKind::kDimensionMismatch, "depthwise_conv channel count");
  }
  const int offset = causal ? kernel - 1 : (kernel - 1) / 2;
  Matrix y(t_len, x.cols());
  for (int t = 0; t < t_len; ++t) {
    y.row(t) = bias.value().row(0);
    for (int j = 0; j < kernel; ++j) {
      const int s = t - offset + j;
      if (s < 0 || s >= t_len) continue;
      y.row(t) += x.value().row(s).cwiseProduct(weight.value().row(j));
    }
  }
  return make_result(
      std::move(y), {x, weight, bias},
      [x, weight, bias, offset, kernel, t_len](Node& self) {
        const Matrix& g = self.grad;
        if (bias.requires_grad()) bias.node()->add_grad(g.colwise().sum());
        const bool need_x = x.requires_grad();
        const bool need_w = weight.requires_grad();
        if (!need_x && !need_w) return;
        Matrix dx = need_x ? Matrix::Zero(x.rows(), x.cols()) : Matrix();
        Matrix dw = need_w ? Matrix::Zero(weight.rows(), weight.cols()) : Matrix();
        for (int t = 0; t < t_len; ++t) {
          for (int j = 0; j < kernel; ++j) {
            const int s = t - offset + j;
            if (s < 0 || s >= t_len) continue;
            if (need_x) dx.row(s) += g.row(t).cwiseProduct(weight.value().row(j));
            if (need_w) dw.row(j) += g.row(t).cwiseProduct(x.value().row(s));
          }
        }
        if (need_x) x.node()->add_grad(dx);
        if (need_w) weight.node()->add_grad(dw);
      });
}

Var embedding_sum(const std::vector<Var>& tables,
                  std::span<const std::int32_t> ids, int num_frames) {
  if (tables.empty()) fail(ErrorKind::kInvalidArgument, "no embedding tables");
  const auto k_count = tables.size();
  if (ids.size() != k_count * static_cast<std::size_t>(num_frames)) {
    fail(ErrorKind::kDimensionMismatch, "id grid does not match K x T");
  }
  const Eigen::Index dim = tables.front().cols();
  Matrix y = Matrix::Zero(num_frames, dim);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Matrix& table = tables[k].value();
    if (table.cols() != dim) {
      fail(ErrorKind::kDimensionMismatch, "embedding widths differ");
    }
    for (int t = 0; t < num_frames; ++t) {
      const std::int32_t id = ids[k * num_frames + t];
      if (id < 0 || id >= table.rows()) {
        fail(ErrorKind::kOutOfRange, "embedding id " + std::to_string(id) +
                                         " outside table of " +
                                         std::to_string(table.rows()));
      }
      y.row(t) += table.row(id);
    }
  }
  std::vector<std::int32_t> id_copy(ids.begin(), ids.end());
  return make_result(
      std::move(y), tables,
      [tables, ids = std::move(id_copy), num_frames](Node& self) {
        for (std::size_t k = 0; k < tables.size(); ++k) {
          if (!tables[k].requires_grad()) continue;
          Matrix g = Matrix::Zero(tables[k].rows(), tables[k].cols());
          for (int t = 0; t < num_frames; ++t) {
            g.row(ids[k * num_frames + t]) += self.grad.row(t);
          }
          tables[k].node()->add_grad(g);
        }
      });
}

Var cross_entropy_sum(const Var& logits, std::span<const std::int32_t> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    fail(ErrorKind::kDimensionMismatch, "one target per logit row required");
  }
  Matrix probs = softmax_rows(logits.value());
  double loss = 0.0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const std::int32_t y = targets[t];
    if (y < 0 || y >= logits.cols()) {
      fail(ErrorKind::kOutOfRange, "target id outside logit width");
    }
    const auto row = logits.value().row(t);
    const double mx = row.maxCoeff();
    loss += mx + std::log((row.array() - mx).exp().sum()) - row(y);
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  std::vector<std::int32_t> tg(targets.begin(), targets.end());
  return make_result(
      std::move(out), {logits},
      [logits, probs = std::move(probs), tg = std::move(tg)](Node& self) {
        if (!logits.requires_grad()) return;
        Matrix g = probs;
        for (std::size_t t = 0; t < tg.size(); ++t) g(t, tg[t]) -= 1.0;
        logits.node()->add_grad(g * self.grad(0, 0));
      });
}

Var squared_error_sum(const Var& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    fail(ErrorKind::kDimensionMismatch, "prediction/target shapes differ");
  }
  Matrix diff = pred.value() - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm();
  return make_result(std::move(out), {pred},
                     [pred, diff = std::move(diff)](Node& self) {
                       if (pred.requires_grad()) {
                         pred.node()->add_grad(diff * (2.0 * self.grad(0, 0)));
                       }
                     });
}

Var sum_all(const Var& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return make_result(std::move(out), {x}, [x](Node& self) {
    if (x.requires_grad()) {
      x.node()->add_grad(Matrix::Constant(x.rows(), x.cols(), self.grad(0, 0)));
    }
  });
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - mx).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

}  // namespace tokse::nn
