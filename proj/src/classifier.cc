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

#include "pft/classifier.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "pft/random.h"

namespace pft {
namespace {

// Softmax over each row of `logits`, in place.
void SoftmaxRows(Matrix& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

int ArgMax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = static_cast<int>(j);
  }
  return best;
}

absl::Status CheckInput(const ClassifierHead& head, const Matrix& x) {
  if (absl::Status s = head.Validate(); !s.ok()) return s;
  if (x.cols() != head.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: data has ", x.cols(), ", head expects ",
        head.dim()));
  }
  return absl::OkStatus();
}

double MeanLoss(const ClassifierHead& head, const Matrix& x,
                const std::vector<int>& labels, double weight_decay) {
  Matrix logits = (x * head.weights.transpose()).rowwise() +
                  head.bias.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse =
        mx + std::log((logits.row(i).array() - mx).exp().sum());
    total += lse - logits(i, labels[i]);
  }
  return total / static_cast<double>(x.rows()) +
         0.5 * weight_decay * head.weights.squaredNorm();
}

}  // namespace

ClassifierHead ClassifierHead::Zeros(int num_classes, int dim) {
  return {Matrix::Zero(num_classes, dim), Vector::Zero(num_classes)};
}

absl::Status ClassifierHead::Validate() const {
  if (weights.rows() < 1 || weights.cols() < 1) {
    return absl::InvalidArgumentError("classifier head is empty");
  }
  if (bias.size() != weights.rows()) {
    return absl::InvalidArgumentError("classifier bias/weight shape mismatch");
  }
  if (!weights.allFinite() || !bias.allFinite()) {
    return absl::InvalidArgumentError("classifier head is non-finite");
  }
  return absl::OkStatus();
}

absl::Status TrainConfig::Validate() const {
  if (epochs < 1) return absl::InvalidArgumentError("epochs must be >= 1");
  if (batch_size < 1) {
    return absl::InvalidArgumentError("batch_size must be >= 1");
  }
  if (!(step_size > 0)) {
    return absl::InvalidArgumentError("step_size must be > 0");
  }
  if (!(weight_decay >= 0)) {
    return absl::InvalidArgumentError("weight_decay must be >= 0");
  }
  if (!(momentum >= 0 && momentum < 1)) {
    return absl::InvalidArgumentError("momentum must lie in [0, 1)");
  }
  return absl::OkStatus();
}

LossAndGradient CrossEntropyLossAndGradient(const ClassifierHead& head,
                                            const Matrix& x,
                                            const std::vector<int>& labels,
                                            double weight_decay) {
  const int64_t n = x.rows();
  Matrix probs = (x * head.weights.transpose()).rowwise() +
                 head.bias.transpose();
  LossAndGradient out;
  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double mx = probs.row(i).maxCoeff();
    const double lse = mx + std::log((probs.row(i).array() - mx).exp().sum());
    total += lse - probs(i, labels[i]);
  }
  SoftmaxRows(probs);
  for (int64_t i = 0; i < n; ++i) probs(i, labels[i]) -= 1.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss = total * inv_n + 0.5 * weight_decay * head.weights.squaredNorm();
  out.weight_grad = (probs.transpose() * x) * inv_n;
  out.weight_grad += weight_decay * head.weights;
  out.bias_grad = probs.colwise().sum().transpose() * inv_n;
  return out;
}

absl::StatusOr<TrainResult> TrainHead(const Matrix& x,
                                      const std::vector<int>& labels,
                                      int num_classes,
                                      const TrainConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  const int64_t n = x.rows();
  if (n == 0) return absl::InvalidArgumentError("no training data");
  if (static_cast<int64_t>(labels.size()) != n) {
    return absl::InvalidArgumentError("label count differs from row count");
  }
  if (num_classes < 1 || x.cols() < 1) {
    return absl::InvalidArgumentError("need num_classes >= 1 and d >= 1");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      return absl::OutOfRangeError(
          absl::StrCat("label ", y, " outside [0, ", num_classes, ")"));
    }
  }

  TrainResult result;
  ClassifierHead head = ClassifierHead::Zeros(num_classes, x.cols());
  Matrix vel_w = Matrix::Zero(num_classes, x.cols());
  Vector vel_b = Vector::Zero(num_classes);
  double step = config.step_size;
  double current = MeanLoss(head, x, labels, config.weight_decay);
  result.loss_trace.push_back(current);

  Rng rng(config.seed);
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int64_t batch = std::min<int64_t>(config.batch_size, n);
  Matrix xb;
  std::vector<int> yb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const ClassifierHead snapshot = head;
    std::shuffle(order.begin(), order.end(), rng);
    for (int64_t start = 0; start < n; start += batch) {
      const int64_t m = std::min(batch, n - start);
      xb.resize(m, x.cols());
      yb.resize(m);
      for (int64_t i = 0; i < m; ++i) {
        xb.row(i) = x.row(order[start + i]);
        yb[i] = labels[order[start + i]];
      }
      const LossAndGradient g =
          CrossEntropyLossAndGradient(head, xb, yb, config.weight_decay);
      vel_w = config.momentum * vel_w + g.weight_grad;
      vel_b = config.momentum * vel_b + g.bias_grad;
      head.weights -= step * vel_w;
      head.bias -= step * vel_b;
    }
    const double loss = MeanLoss(head, x, labels, config.weight_decay);
    if (!std::isfinite(loss) || loss > current) {
      head = snapshot;
      vel_w.setZero();
      vel_b.setZero();
      step *= 0.5;
    } else {
      current = loss;
    }
    result.loss_trace.push_back(current);
  }
  result.head = std::move(head);
  return result;
}

absl::StatusOr<Matrix> PredictProba(const ClassifierHead& head,
                                    const Matrix& x) {
  if (absl::Status s = CheckInput(head, x); !s.ok()) return s;
  Matrix probs = (x * head.weights.transpose()).rowwise() +
                 head.bias.transpose();
  SoftmaxRows(probs);
  return probs;
}

absl::StatusOr<std::vector<int>> Predict(const ClassifierHead& head,
                                         const Matrix& x) {
  if (absl::Status s = CheckInput(head, x); !s.ok()) return s;
  const Matrix logits = (x * head.weights.transpose()).rowwise() +
                        head.bias.transpose();
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out[i] = ArgMax(logits.row(i));
  return out;
}

absl::StatusOr<double> ZeroOneLoss(const ClassifierHead& head,
                                   const FeatureDataset& ds) {
  if (ds.size() == 0) {
    return absl::InvalidArgumentError("0-1 loss of an empty dataset");
  }
  absl::StatusOr<std::vector<int>> pred = Predict(head, ds.features);
  if (!pred.ok()) return pred.status();
  int64_t wrong = 0;
  for (size_t i = 0; i < pred->size(); ++i) wrong += (*pred)[i] != ds.labels[i];
  return static_cast<double>(wrong) / static_cast<double>(ds.size());
}

absl::StatusOr<std::vector<int>> EnsemblePredict(
    const std::vector<ClassifierHead>& heads, const Matrix& x) {
  if (heads.empty()) return absl::InvalidArgumentError("no heads to ensemble");
  std::vector<Matrix> probs;
  probs.reserve(heads.size());
  for (const auto& h : heads) {
    if (h.num_classes() != heads[0].num_classes() ||
        h.dim() != heads[0].dim()) {
      return absl::InvalidArgumentError("ensemble heads differ in shape");
    }
    absl::StatusOr<Matrix> p = PredictProba(h, x);
    if (!p.ok()) return p.status();
    probs.push_back(*std::move(p));
  }
  const int num_classes = heads[0].num_classes();
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    // Class-major scan so equal probabilities resolve to the smaller class.
    int best_class = 0;
    double best = -1.0;
    for (int c = 0; c < num_classes; ++c) {
      for (const Matrix& p : probs) {
        if (p(i, c) > best) {
          best = p(i, c);
          best_class = c;
        }
      }
    }
    out[i] = best_class;
  }
  return out;
}

absl::StatusOr<ClassifierHead> AverageHeads(
    const std::vector<ClassifierHead>& heads,
    const std::vector<double>& weights) {
  if (heads.empty()) return absl::InvalidArgumentError("no heads to average");
  if (weights.size() != heads.size()) {
    return absl::InvalidArgumentError("one weight per head required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) {
      return absl::InvalidArgumentError("head weights must be >= 0");
    }
    total += w;
  }
  if (!(total > 0)) {
    return absl::InvalidArgumentError("head weights are all zero");
  }
  ClassifierHead out =
      ClassifierHead::Zeros(heads[0].num_classes(), heads[0].dim());
  for (size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].num_classes() != out.num_classes() ||
        heads[i].dim() != out.dim() ||
        heads[i].bias.size() != out.bias.size()) {
      return absl::InvalidArgumentError("averaged heads differ in shape");
    }
    if (weights[i] == 0) continue;
    const double w = weights[i] / total;
    out.weights += w * heads[i].weights;
    out.bias += w * heads[i].bias;
  }
  return out;
}

}  // namespace pft
