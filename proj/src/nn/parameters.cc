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
#include "tokse/nn/parameters.h"

#include <cmath>
#include <numbers>

#include "tokse/core/errors.h"

namespace tokse::nn {

Var ParameterSet::add(std::string name, Matrix init) {
  for (const auto& p : items_) {
    if (p.name == name) {
      fail(ErrorKind::kInvalidArgument, "parameter '" + name + "' registered twice");
    }
  }
  Var v(std::move(init), /*requires_grad=*/true);
  items_.push_back({std::move(name), v});
  return v;
}

std::int64_t ParameterSet::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& p : items_) n += p.var.value().size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.var.zero_grad();
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : items_) {
    if (p.var.has_grad()) sq += p.var.grad().squaredNorm();
  }
  return std::sqrt(sq);
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm) {
    const double factor = max_norm / (norm + 1e-6);
    for (auto& p : items_) {
      if (p.var.has_grad()) p.var.node()->grad *= factor;
    }
  }
  return norm;
}

bool ParameterSet::all_finite() const {
  for (const auto& p : items_) {
    if (!p.var.value().allFinite()) return false;
  }
  return true;
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.var.value());
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != items_.size()) {
    fail(ErrorKind::kDimensionMismatch, "snapshot size differs from model");
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    items_[i].var.mutable_value() = values[i];
  }
}

void ParameterSet::export_to(Archive& archive, const std::string& prefix) const {
  for (const auto& p : items_) {
    ArchiveArray a;
    a.name = prefix + p.name;
    a.shape = {p.var.rows(), p.var.cols()};
    a.data.resize(static_cast<std::size_t>(p.var.value().size()));
    for (Eigen::Index i = 0; i < p.var.value().size(); ++i) {
      a.data[i] = static_cast<float>(p.var.value().data()[i]);
    }
    archive.arrays.push_back(std::move(a));
  }
}

void ParameterSet::import_from(const Archive& archive, const std::string& prefix) {
  for (auto& p : items_) {
    const ArchiveArray& a = archive.array(prefix + p.name);
    if (a.shape.size() != 2 || a.shape[0] != p.var.rows() ||
        a.shape[1] != p.var.cols()) {
      fail(ErrorKind::kMalformedDocument,
           "array '" + a.name + "' has the wrong shape");
    }
    Matrix& m = p.var.mutable_value();
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = a.data[i];
  }
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix xavier_uniform(int rows, int cols, Rng& rng) {
  return uniform_matrix(rows, cols, std::sqrt(6.0 / (rows + cols)), rng);
}

Matrix normal_matrix(int rows, int cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = stddev * standard_normal(rng);
  }
  return m;
}

Matrix uniform_matrix(int rows, int cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
  }
  return m;
}

}  // namespace tokse::nn
