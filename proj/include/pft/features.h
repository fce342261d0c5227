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

#ifndef PFT_FEATURES_H_
#define PFT_FEATURES_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pft/gmm.h"
#include "pft/types.h"

namespace pft {

// An n x d matrix of pre-extracted embeddings with one class id per row.
struct FeatureDataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::string dataset_id;

  int64_t size() const { return features.rows(); }
  int dim() const { return static_cast<int>(features.cols()); }

  // Checks shape consistency, finiteness, label range and d >= 1.
  absl::Status Validate() const;

  // Number of rows carrying each label, indexed by class.
  std::vector<int64_t> ClassCounts() const;

  // Rows at the given indices, in the given order.
  FeatureDataset Subset(const std::vector<int64_t>& indices) const;
};

// Validates and wraps the given fields.
absl::StatusOr<FeatureDataset> MakeFeatureDataset(Matrix features,
                                                  std::vector<int> labels,
                                                  int num_classes,
                                                  std::string dataset_id = "");

// FPFT1 feature files. Little-endian:
//   "FPFT" | u8 version=1 | u32 n | u32 d | u32 C | u8[3] reserved |
//   f32[n*d] row-major features | u16[n] labels
// Error codes are distinct per failure: bad magic -> kInvalidArgument,
// unknown version -> kUnimplemented, truncated or trailing bytes -> kDataLoss,
// label >= C -> kOutOfRange, non-finite feature -> kFailedPrecondition.
absl::StatusOr<std::vector<uint8_t>> SerializeFeatures(
    const FeatureDataset& ds);
absl::StatusOr<FeatureDataset> ParseFeatures(const std::vector<uint8_t>& bytes,
                                             std::string dataset_id = "");
absl::Status SaveFeatures(const FeatureDataset& ds, const std::string& path);
// The dataset id is taken from the file's stem.
absl::StatusOr<FeatureDataset> LoadFeatures(const std::string& path);

// Rescales every row with l2 norm > 1 onto the unit sphere; other rows are
// left untouched.
FeatureDataset NormalizeToUnitBall(const FeatureDataset& ds);

// Rows of class `c`, in original order.
absl::StatusOr<Matrix> ClassConditional(const FeatureDataset& ds, int c);

struct DirichletScheme {
  double beta = 0.1;
};
// Client i owns classes [i * ceil(C/I), (i+1) * ceil(C/I)); classes past the
// last block go to the last client.
struct DisjointLabelScheme {};
// assignment[j] is the client that receives row j.
struct ExplicitScheme {
  std::vector<int> assignment;
};

struct PartitionSpec {
  std::variant<DirichletScheme, DisjointLabelScheme, ExplicitScheme> scheme;
  int num_clients = 1;
  uint64_t seed = 0;
};

// Splits `ds` into `spec.num_clients` disjoint datasets whose union is `ds`.
// Rows inside each client keep their original relative order.
absl::StatusOr<std::vector<FeatureDataset>> Partition(
    const FeatureDataset& ds, const PartitionSpec& spec);

// Uniform random client assignment, for i.i.d. splits through ExplicitScheme.
std::vector<int> IidAssignment(int64_t n, int num_clients, uint64_t seed);

struct SynthSpec {
  // One ground-truth mixture per class; all must share d.
  std::vector<GmmParams> class_models;
  int64_t samples_per_class = 0;
  uint64_t seed = 0;
  std::string dataset_id = "synth";
};

// Random ground-truth class models for synthetic experiments.
struct SynthMixtureOptions {
  int num_classes = 10;
  int dim = 16;
  int components = 1;
  CovarianceFamily family = CovarianceFamily::kDiag;
  // Class centers ~ N(0, separation^2 / d * I); expected center-to-center
  // distance is about sqrt(2) * separation.
  double class_separation = 6.0;
  // Component means ~ center + N(0, component_spread^2 / d * I).
  double component_spread = 3.0;
  // Per-coordinate standard deviation scale of each component.
  double noise_scale = 1.0;
  uint64_t seed = 0;
};

absl::StatusOr<std::vector<GmmParams>> RandomClassModels(
    const SynthMixtureOptions& options);

// Draws `samples_per_class` i.i.d. rows from each class model. Rows are
// grouped by class in increasing class order.
absl::StatusOr<FeatureDataset> SynthGenerate(const SynthSpec& spec);

}  // namespace pft

#endif  // PFT_FEATURES_H_
