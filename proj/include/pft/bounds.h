//
// Copyright 2026 The PFT Authors
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
//

#ifndef PFT_BOUNDS_H_
#define PFT_BOUNDS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "pft/classifier.h"
#include "pft/features.h"
#include "pft/types.h"

namespace pft {

inline constexpr int kDefaultEntropyNeighbors = 4;
inline constexpr double kDequantizationHalfWidth = 1e-6;

// Negative Kozachenko-Leonenko differential entropy estimate of the rows of
// `x`, i.e. an estimate of E[log p(x)]. The data is first dequantized with
// uniform noise on [-1e-6, 1e-6] drawn from `seed`.
absl::StatusOr<double> EntropyTerm(const Matrix& x,
                                   int k = kDefaultEntropyNeighbors,
                                   uint64_t seed = 0);

// Per-class inputs to the local accuracy guarantee.
struct ClassBoundInput {
  double synthetic_loss = 0.0;   // 0-1 loss of the head on synthetic rows
  double self_entropy = 0.0;     // E[log p] of the real class distribution
  double log_likelihood = 0.0;   // average log-likelihood of the fitted GMM
  double weight = 0.0;           // class marginal
};

// 2l - l^2 + (1 - l)/sqrt(2) * sqrt(max(0, H - L)) for one class.
double ClassBoundTerm(double synthetic_loss, double kl_surrogate);

// sum_c w_c * ClassBoundTerm(...). Weights must sum to one within 1e-9 and
// losses must lie in [0, 1]. Negative KL surrogates are floored at zero.
absl::StatusOr<double> LocalBound(const std::vector<ClassBoundInput>& classes);

struct ClassBound {
  int class_id = 0;
  int64_t real_count = 0;
  int64_t synthetic_count = 0;
  double synthetic_loss = 0.0;
  double self_entropy = 0.0;
  double log_likelihood = 0.0;
  double kl_surrogate = 0.0;  // H - L_EM, floored at zero
  double weight = 0.0;
  double term = 0.0;          // unclamped
  double term_clamped = 0.0;  // in [0, 1]
};

struct BoundReport {
  std::vector<ClassBound> classes;
  // Classes present in the real data that could not enter the bound, with
  // the reason.
  std::map<int, std::string> excluded;
  double bound = 0.0;          // unclamped expectation over classes
  double bound_clamped = 0.0;  // clamped to [0, 1]
  double actual_loss = 0.0;    // 0-1 loss on the included real rows
  bool holds = false;          // actual_loss <= bound + 1e-9
};

struct BoundOptions {
  int neighbors = kDefaultEntropyNeighbors;
  uint64_t seed = 0;
};

// Evaluates the guarantee for one client from the run's artifacts: the
// client's real data, the synthetic rows the server drew per class, the EM
// log-likelihood per class, and the trained head.
absl::StatusOr<BoundReport> VerifyBound(
    const FeatureDataset& client, const std::map<int, Matrix>& synthetic,
    const std::map<int, double>& log_likelihood, const ClassifierHead& head,
    const BoundOptions& options = {});

}  // namespace pft

#endif  // PFT_BOUNDS_H_
