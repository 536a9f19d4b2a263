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

#ifndef TOKSE_NN_PARAMETERS_H_
#define TOKSE_NN_PARAMETERS_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tokse/core/archive.h"
#include "tokse/core/random.h"
#include "tokse/nn/autograd.h"

namespace tokse::nn {

struct NamedParameter {
  std::string name;
  Var var;
};

// Ordered registry of trainable leaves. Modules hold Var handles that share
// nodes with the registry.
class ParameterSet {
 public:
  Var add(std::string name, Matrix init);

  const std::vector<NamedParameter>& items() const { return items_; }
  std::vector<NamedParameter>& items() { return items_; }
  std::int64_t scalar_count() const;

  void zero_grad();
  // Global L2 norm over every gradient (missing gradients count as zero).
  double grad_norm() const;
  // Scales gradients so the global norm is at most `max_norm`; returns the
  // norm measured before clipping.
  double clip_grad_norm(double max_norm);
  bool all_finite() const;

  // Deep copy of the current values, in registry order.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

  // Parameters as named float32 arrays (prefix prepended to names).
  void export_to(Archive& archive, const std::string& prefix = "") const;
  // Loads values by name; throws kMalformedDocument on missing arrays or
  // shape mismatch.
  void import_from(const Archive& archive, const std::string& prefix = "");

 private:
  std::vector<NamedParameter> items_;
};

// Initializers.
Matrix xavier_uniform(int rows, int cols, Rng& rng);
Matrix normal_matrix(int rows, int cols, double stddev, Rng& rng);
Matrix uniform_matrix(int rows, int cols, double bound, Rng& rng);

// Standard normal draw via Box-Muller on uniform01, so results do not depend
// on the standard library's distribution implementation.
double standard_normal(Rng& rng);

}  // namespace tokse::nn

#endif  // TOKSE_NN_PARAMETERS_H_
