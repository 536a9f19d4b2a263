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
#include "tokse/codec/kmeans.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tokse/core/errors.h"
#include "tokse/core/random.h"

namespace tokse {
namespace {

double squared_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int count_distinct_rows(const nn::Matrix& x) {
  std::vector<int> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  const int dim = static_cast<int>(x.cols());
  auto less = [&](int a, int b) {
    return std::lexicographical_compare(x.row(a).data(), x.row(a).data() + dim,
                                        x.row(b).data(), x.row(b).data() + dim);
  };
  std::sort(order.begin(), order.end(), less);
  int distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    distinct += less(order[i - 1], order[i]);
  }
  return distinct;
}

}  // namespace

int KMeansQuantizer::nearest(const double* x) const {
  const int dim = feature_dim();
  int best = 0;
  double best_d = squared_distance(x, centers.row(0).data(), dim);
  for (int c = 1; c < n_clusters(); ++c) {
    const double d = squared_distance(x, centers.row(c).data(), dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<int> KMeansQuantizer::assign(const nn::Matrix& features) const {
  if (features.cols() != centers.cols()) {
    fail(ErrorKind::kDimensionMismatch,
         "features have " + std::to_string(features.cols()) + " dims, centers " +
             std::to_string(centers.cols()));
  }
  std::vector<int> out(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) out[i] = nearest(features.row(i).data());
  return out;
}

void KMeansQuantizer::validate() const {
  if (n_clusters() < 2) fail(ErrorKind::kInvalidArgument, "k-means needs at least 2 clusters");
  if (!centers.allFinite()) fail(ErrorKind::kNonFinite, "k-means centers are not finite");
}

KMeansResult train_kmeans(const nn::Matrix& x, int n_clusters, std::uint64_t seed,
                          const KMeansOptions& options) {
  if (n_clusters < 2) fail(ErrorKind::kInvalidArgument, "k-means needs at least 2 clusters");
  if (!x.allFinite()) fail(ErrorKind::kNonFinite, "k-means input is not finite");
  const int n = static_cast<int>(x.rows());
  const int dim = static_cast<int>(x.cols());
  const int pinned = options.pin_zero_center ? 1 : 0;
  const int distinct = n == 0 ? 0 : count_distinct_rows(x);
  if (distinct < n_clusters - pinned) {
    fail(ErrorKind::kInsufficientData,
         std::to_string(distinct) + " distinct points for " +
             std::to_string(n_clusters - pinned) + " free clusters");
  }

  Rng rng(seed);
  nn::Matrix centers = nn::Matrix::Zero(n_clusters, dim);
  std::vector<double> d2(n, 0.0);
  int placed = pinned;
  if (pinned == 0) {
    centers.row(0) = x.row(uniform_int(rng, n));
    placed = 1;
  }
  for (int i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i).data(), centers.row(0).data(), dim);
  for (; placed < n_clusters; ++placed) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    double target = uniform01(rng) * total;
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    if (pick < 0) fail(ErrorKind::kInsufficientData, "too few distinct points for k-means");
    centers.row(placed) = x.row(pick);
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i).data(), centers.row(placed).data(), dim));
    }
  }

  KMeansResult result;
  result.quantizer.centers = std::move(centers);
  nn::Matrix& c = result.quantizer.centers;
  std::vector<int> labels(n);
  std::vector<int> sizes(n_clusters);
  for (int iter = 0;; ++iter) {
    double inertia = 0.0;
    std::fill(sizes.begin(), sizes.end(), 0);
    for (int i = 0; i < n; ++i) {
      labels[i] = result.quantizer.nearest(x.row(i).data());
      d2[i] = squared_distance(x.row(i).data(), c.row(labels[i]).data(), dim);
      inertia += d2[i];
      ++sizes[labels[i]];
    }
    result.inertia.push_back(inertia);

    for (int k = pinned; k < n_clusters; ++k) {
      if (sizes[k] > 0) continue;
      int far = -1;
      for (int i = 0; i < n; ++i) {
        if (sizes[labels[i]] > 1 && (far < 0 || d2[i] > d2[far])) far = i;
      }
      if (far < 0 || d2[far] <= 0.0) break;
      --sizes[labels[far]];
      labels[far] = k;
      sizes[k] = 1;
      d2[far] = 0.0;
      c.row(k) = x.row(far);
    }
    if (result.converged || iter >= options.max_iterations) break;

    nn::Matrix sums = nn::Matrix::Zero(n_clusters, dim);
    for (int i = 0; i < n; ++i) sums.row(labels[i]) += x.row(i);
    double moved = 0.0;
    for (int k = pinned; k < n_clusters; ++k) {
      if (sizes[k] == 0) continue;
      const Eigen::RowVectorXd next = sums.row(k) / sizes[k];
      moved = std::max(moved, (next - c.row(k)).norm());
      c.row(k) = next;
    }
    result.iterations = iter + 1;
    result.converged = moved < options.tolerance;
  }
  result.cluster_sizes = sizes;
  return result;
}

TokenSequence quantize(const nn::Matrix& features, const KMeansQuantizer& q,
                       double frame_rate_hz) {
  q.validate();
  CodecSpec spec;
  spec.num_codebooks = 1;
  spec.codebook_size = q.n_clusters();
  spec.frame_rate_hz = frame_rate_hz;
  spec.name = "kmeans";
  const std::vector<int> labels = q.assign(features);
  return TokenSequence(spec, std::vector<TokenId>(labels.begin(), labels.end()));
}

nn::Matrix dequantize_lookup(const TokenSequence& seq, const KMeansQuantizer& q) {
  if (seq.num_codebooks() != 1 || seq.spec().codebook_size != q.n_clusters()) {
    fail(ErrorKind::kSpecMismatch, "token grid does not match the quantizer");
  }
  nn::Matrix out(seq.num_frames(), q.feature_dim());
  for (int t = 0; t < seq.num_frames(); ++t) out.row(t) = q.centers.row(seq.at(0, t));
  return out;
}

void export_quantizer(const KMeansQuantizer& q, Archive& archive, const std::string& name) {
  ArchiveArray a;
  a.name = name;
  a.shape = {q.centers.rows(), q.centers.cols()};
  a.data.assign(q.centers.data(), q.centers.data() + q.centers.size());
  archive.arrays.push_back(std::move(a));
}

KMeansQuantizer import_quantizer(const Archive& archive, const std::string& name) {
  const ArchiveArray& a = archive.array(name);
  if (a.shape.size() != 2 || a.shape[0] * a.shape[1] != static_cast<std::int64_t>(a.data.size())) {
    fail(ErrorKind::kMalformedDocument, "array '" + name + "' is not a matrix");
  }
  KMeansQuantizer q;
  q.centers.resize(a.shape[0], a.shape[1]);
  for (std::size_t i = 0; i < a.data.size(); ++i) q.centers.data()[i] = a.data[i];
  q.validate();
  return q;
}

}  // namespace tokse
