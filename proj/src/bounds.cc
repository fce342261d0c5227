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

#include "pft/bounds.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "absl/strings/str_cat.h"
#include "pft/random.h"

namespace pft {
namespace {

constexpr double kHoldsTolerance = 1e-9;

// log of the volume of the unit d-ball.
double LogUnitBallVolume(int d) {
  return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
}

}  // namespace

absl::StatusOr<double> EntropyTerm(const Matrix& x, int k, uint64_t seed) {
  const int64_t n = x.rows();
  const int d = static_cast<int>(x.cols());
  if (k < 1) return absl::InvalidArgumentError("neighbor count must be >= 1");
  if (n <= k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "entropy estimate needs more than k = ", k, " rows, got ", n));
  }
  if (d < 1) return absl::InvalidArgumentError("dimension must be >= 1");
  if (!x.allFinite()) return absl::InvalidArgumentError("non-finite input");
  if (((x.rowwise() - x.row(0)).array() == 0).all()) {
    return absl::InvalidArgumentError(
        "entropy of identical rows is undefined");
  }

  Matrix z = x;
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-kDequantizationHalfWidth,
                                                kDequantizationHalfWidth);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += jitter(rng);

  std::vector<double> dist2(n - 1);
  double sum_log_radius = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    int64_t m = 0;
    for (int64_t j = 0; j < n; ++j) {
      if (j != i) dist2[m++] = (z.row(i) - z.row(j)).squaredNorm();
    }
    std::nth_element(dist2.begin(), dist2.begin() + (k - 1), dist2.end());
    const double r2 = dist2[k - 1];
    if (!(r2 > 0)) {
      return absl::InvalidArgumentError(
          "duplicate rows survived dequantization");
    }
    sum_log_radius += 0.5 * std::log(r2);
  }

  // psi(n) - psi(k) for integers.
  double digamma_gap = 0.0;
  for (int64_t j = k; j < n; ++j) digamma_gap += 1.0 / static_cast<double>(j);

  const double entropy = digamma_gap + LogUnitBallVolume(d) +
                         d * sum_log_radius / static_cast<double>(n);
  return -entropy;
}

double ClassBoundTerm(double synthetic_loss, double kl_surrogate) {
  const double l = synthetic_loss;
  return 2.0 * l - l * l +
         (1.0 - l) / std::numbers::sqrt2 * std::sqrt(std::max(0.0, kl_surrogate));
}

absl::StatusOr<double> LocalBound(const std::vector<ClassBoundInput>& classes) {
  double total_weight = 0.0;
  double bound = 0.0;
  for (const ClassBoundInput& c : classes) {
    if (!(c.synthetic_loss >= 0 && c.synthetic_loss <= 1)) {
      return absl::InvalidArgumentError("synthetic 0-1 loss outside [0, 1]");
    }
    if (!(c.weight >= 0)) {
      return absl::InvalidArgumentError("class weight must be >= 0");
    }
    total_weight += c.weight;
    bound += c.weight * ClassBoundTerm(c.synthetic_loss,
                                       c.self_entropy - c.log_likelihood);
  }
  if (std::abs(total_weight - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrCat("class weights sum to ", total_weight, ", not 1"));
  }
  return bound;
}

absl::StatusOr<BoundReport> VerifyBound(
    const FeatureDataset& client, const std::map<int, Matrix>& synthetic,
    const std::map<int, double>& log_likelihood, const ClassifierHead& head,
    const BoundOptions& options) {
  if (absl::Status s = head.Validate(); !s.ok()) return s;
  if (client.dim() != head.dim()) {
    return absl::InvalidArgumentError("client data and head disagree on d");
  }
  BoundReport report;
  const std::vector<int64_t> counts = client.ClassCounts();
  std::vector<int64_t> included_rows;
  int64_t included_total = 0;

  for (int c = 0; c < client.num_classes; ++c) {
    if (counts[c] == 0) continue;
    auto syn = synthetic.find(c);
    if (syn == synthetic.end() || syn->second.rows() == 0) {
      report.excluded[c] = "no synthetic samples";
      continue;
    }
    auto ll = log_likelihood.find(c);
    if (ll == log_likelihood.end()) {
      report.excluded[c] = "no EM log-likelihood";
      continue;
    }
    if (counts[c] <= options.neighbors) {
      report.excluded[c] = "too few rows for the entropy estimate";
      continue;
    }
    absl::StatusOr<Matrix> real = ClassConditional(client, c);
    if (!real.ok()) return real.status();
    absl::StatusOr<double> h =
        EntropyTerm(*real, options.neighbors,
                    DeriveSeed(options.seed, SeedStream::kEntropy,
                               {static_cast<uint64_t>(c)}));
    if (!h.ok()) {
      report.excluded[c] = std::string(h.status().message());
      continue;
    }
    absl::StatusOr<std::vector<int>> pred = Predict(head, syn->second);
    if (!pred.ok()) return pred.status();
    int64_t wrong = 0;
    for (int p : *pred) wrong += p != c;

    ClassBound cb;
    cb.class_id = c;
    cb.real_count = counts[c];
    cb.synthetic_count = syn->second.rows();
    cb.synthetic_loss =
        static_cast<double>(wrong) / static_cast<double>(cb.synthetic_count);
    cb.self_entropy = *h;
    cb.log_likelihood = ll->second;
    cb.kl_surrogate = std::max(0.0, cb.self_entropy - cb.log_likelihood);
    cb.term = ClassBoundTerm(cb.synthetic_loss, cb.kl_surrogate);
    cb.term_clamped = std::clamp(cb.term, 0.0, 1.0);
    report.classes.push_back(cb);
    included_total += counts[c];
    for (size_t j = 0; j < client.labels.size(); ++j) {
      if (client.labels[j] == c) included_rows.push_back(static_cast<int64_t>(j));
    }
  }
  if (report.classes.empty()) {
    return absl::FailedPreconditionError(
        "no class of the client can enter the bound");
  }

  std::vector<ClassBoundInput> inputs;
  for (ClassBound& cb : report.classes) {
    cb.weight = static_cast<double>(cb.real_count) /
                static_cast<double>(included_total);
    inputs.push_back({cb.synthetic_loss, cb.self_entropy, cb.log_likelihood,
                      cb.weight});
  }
  // Weights are exact ratios; renormalize away summation rounding.
  double wsum = 0.0;
  for (const auto& in : inputs) wsum += in.weight;
  for (auto& in : inputs) in.weight /= wsum;
  absl::StatusOr<double> bound = LocalBound(inputs);
  if (!bound.ok()) return bound.status();
  report.bound = *bound;
  report.bound_clamped = std::clamp(*bound, 0.0, 1.0);

  std::sort(included_rows.begin(), included_rows.end());
  absl::StatusOr<double> actual =
      ZeroOneLoss(head, client.Subset(included_rows));
  if (!actual.ok()) return actual.status();
  report.actual_loss = *actual;
  report.holds = report.actual_loss <= report.bound + kHoldsTolerance;
  return report;
}

}  // namespace pft
