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

#ifndef PFT_CLASSIFIER_H_
#define PFT_CLASSIFIER_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "pft/features.h"
#include "pft/types.h"

namespace pft {

// Linear map R^d -> R^C followed by a softmax.
struct ClassifierHead {
  Matrix weights;  // C x d
  Vector bias;     // C

  int num_classes() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }

  static ClassifierHead Zeros(int num_classes, int dim);
  absl::Status Validate() const;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 256;
  double step_size = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.9;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

struct TrainResult {
  ClassifierHead head;
  // Full-data mean cross-entropy: entry 0 is the initial (zero) head, then
  // one entry per epoch. Non-increasing: an epoch that raises the loss is
  // rolled back and the step size halved.
  std::vector<double> loss_trace;
};

struct LossAndGradient {
  double loss = 0.0;
  Matrix weight_grad;  // C x d
  Vector bias_grad;    // C
};

// Mean softmax cross-entropy over the given rows (all rows if `rows` is
// empty) plus 0.5 * weight_decay * ||W||^2, and its gradient.
LossAndGradient CrossEntropyLossAndGradient(const ClassifierHead& head,
                                            const Matrix& x,
                                            const std::vector<int>& labels,
                                            double weight_decay = 0.0);

// Mini-batch SGD with momentum on the mean cross-entropy. Starts from zero
// weights; deterministic given `config.seed`.
absl::StatusOr<TrainResult> TrainHead(const Matrix& x,
                                      const std::vector<int>& labels,
                                      int num_classes,
                                      const TrainConfig& config);

// softmax(W x + b) per row.
absl::StatusOr<Matrix> PredictProba(const ClassifierHead& head,
                                    const Matrix& x);

// Row-wise argmax of the logits, ties toward the smaller class index.
absl::StatusOr<std::vector<int>> Predict(const ClassifierHead& head,
                                         const Matrix& x);

absl::StatusOr<double> ZeroOneLoss(const ClassifierHead& head,
                                   const FeatureDataset& ds);

// For each row, the class of the single largest probability over all
// (head, class) pairs. Ties go to the smaller class, then the earlier head.
absl::StatusOr<std::vector<int>> EnsemblePredict(
    const std::vector<ClassifierHead>& heads, const Matrix& x);

// Parameter-wise convex combination with weights normalized to sum to 1.
absl::StatusOr<ClassifierHead> AverageHeads(
    const std::vector<ClassifierHead>& heads,
    const std::vector<double>& weights);

}  // namespace pft

#endif  // PFT_CLASSIFIER_H_
