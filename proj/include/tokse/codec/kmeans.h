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
#ifndef TOKSE_CODEC_KMEANS_H_
#define TOKSE_CODEC_KMEANS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tokse/core/archive.h"
#include "tokse/core/token_sequence.h"
#include "tokse/nn/autograd.h"

namespace tokse {

// Nearest-center vector quantizer. Rows of `centers` are cluster centers.
struct KMeansQuantizer {
  nn::Matrix centers;

  int n_clusters() const { return static_cast<int>(centers.rows()); }
  int feature_dim() const { return static_cast<int>(centers.cols()); }

  // Index of the nearest center by squared Euclidean distance; ties go to
  // the lowest index.
  int nearest(const double* x) const;
  std::vector<int> assign(const nn::Matrix& features) const;

  // Throws kInvalidArgument for fewer than two clusters, kNonFinite otherwise.
  void validate() const;
};

struct KMeansOptions {
  double tolerance = 1e-6;  // max center displacement
  int max_iterations = 300;
  // Center 0 is fixed at the origin (used by residual stages).
  bool pin_zero_center = false;
};

struct KMeansResult {
  KMeansQuantizer quantizer;
  // Total squared distance after each assignment step.
  std::vector<double> inertia;
  std::vector<int> cluster_sizes;
  int iterations = 0;
  bool converged = false;
};

// k-means++ seeding followed by Lloyd iterations. Empty clusters are
// reseeded to the point farthest from its center. Throws kInsufficientData
// when there are fewer distinct rows than free centers.
KMeansResult train_kmeans(const nn::Matrix& features, int n_clusters,
                          std::uint64_t seed, const KMeansOptions& options = {});

// One token row (K=1) over a grid of n_clusters entries.
TokenSequence quantize(const nn::Matrix& features, const KMeansQuantizer& q,
                       double frame_rate_hz = 50.0);
// Row t of the result is the center assigned to frame t.
nn::Matrix dequantize_lookup(const TokenSequence& seq, const KMeansQuantizer& q);

void export_quantizer(const KMeansQuantizer& q, Archive& archive,
                      const std::string& name = "kmeans.centers");
KMeansQuantizer import_quantizer(const Archive& archive,
                                 const std::string& name = "kmeans.centers");

}  // namespace tokse

#endif  // TOKSE_CODEC_KMEANS_H_
