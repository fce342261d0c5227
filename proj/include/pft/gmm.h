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

#ifndef PFT_GMM_H_
#define PFT_GMM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pft/types.h"

namespace pft {

// Wire values are fixed; do not reorder.
enum class CovarianceFamily : uint8_t {
  kFull = 0,
  kDiag = 1,
  kSpherical = 2,
};

std::string CovarianceFamilyName(CovarianceFamily family);
absl::StatusOr<CovarianceFamily> ParseCovarianceFamily(const std::string& s);

// A K-component Gaussian mixture over R^d. Only the covariance member that
// matches `family` is populated:
//   kFull:      full_covariances, K symmetric d x d matrices
//   kDiag:      diag_covariances, K x d variances
//   kSpherical: spherical_covariances, K variances
struct GmmParams {
  CovarianceFamily family = CovarianceFamily::kFull;
  Vector weights;
  Matrix means;
  std::vector<SquareMatrix> full_covariances;
  Matrix diag_covariances;
  Vector spherical_covariances;

  int num_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  // Dense covariance of component k regardless of family.
  SquareMatrix Covariance(int k) const;

  // Shapes, finiteness, weights summing to one, symmetric PSD (Full) or
  // non-negative (Diag/Spherical) covariances.
  absl::Status Validate() const;
  // Validate() without the eigenvalue check on Full covariances.
  absl::Status ValidateStructure() const;

  // Adds `amount` to every covariance diagonal entry.
  void AddToDiagonal(double amount);
};

// Convenience constructors; they do not validate.
GmmParams SingleGaussian(const Vector& mean, const SquareMatrix& covariance);

struct EmConfig {
  int max_iters = 200;
  // Stop once (ll_t - ll_{t-1}) <= tol * |ll_{t-1}|, ll being the average
  // log-likelihood per sample.
  double tol = 1e-5;
  double reg_covar = 1e-6;
  int n_init = 3;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

struct FitStats {
  double final_avg_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  // Average log-likelihood of every parameter set visited by the best
  // restart, starting with its initialization. The last entry belongs to the
  // returned parameters.
  std::vector<double> trace;
};

struct GmmFit {
  GmmParams params;
  FitStats stats;
};

// Maximum-likelihood EM fit with k-means++ initialization and `n_init`
// restarts; the restart with the highest final log-likelihood wins. If the
// data has fewer rows than `num_components`, K is reduced to n.
absl::StatusOr<GmmFit> EmFit(const Matrix& x, int num_components,
                             CovarianceFamily family, const EmConfig& config);

// Parameters EmFit starts restart `restart` from. Exposed for tests that
// compare initial and fitted likelihoods.
absl::StatusOr<GmmParams> EmInitialize(const Matrix& x, int num_components,
                                       CovarianceFamily family,
                                       const EmConfig& config, int restart);

// Precomputed factorizations for repeated density evaluation.
class GmmDensity {
 public:
  // Fails when a covariance is not positive definite.
  static absl::StatusOr<GmmDensity> Create(const GmmParams& params);

  // Per-component log(pi_k) + log N(x | mu_k, Sigma_k), one row per sample.
  Matrix WeightedComponentLogDensities(const Matrix& x) const;
  // Mixture log-density of each row.
  Vector LogPdf(const Matrix& x) const;

  int dim() const { return dim_; }

 private:
  struct Component {
    double log_weight;
    Vector mean;
    // Lower Cholesky factor (Full), per-coordinate variances (Diag), or a
    // single variance (Spherical).
    SquareMatrix chol;
    Vector variances;
    double log_norm;  // -0.5 * (d log 2pi + log det Sigma)
  };

  CovarianceFamily family_ = CovarianceFamily::kFull;
  int dim_ = 0;
  std::vector<Component> components_;
};

absl::StatusOr<double> LogPdf(const GmmParams& g, const Vector& x);
absl::StatusOr<double> AvgLogLikelihood(const GmmParams& g, const Matrix& x);

// Draws n rows: component k ~ Categorical(weights), then x ~ N(mu_k, Sigma_k).
// Full covariances are factored through a symmetric eigendecomposition with
// negative eigenvalues clipped to zero, so PSD-but-singular inputs are fine.
absl::StatusOr<Matrix> Sample(const GmmParams& g, int64_t n, uint64_t seed);

}  // namespace pft

#endif  // PFT_GMM_H_
