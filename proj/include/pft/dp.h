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

#ifndef PFT_DP_H_
#define PFT_DP_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "pft/gmm.h"
#include "pft/random.h"
#include "pft/types.h"

namespace pft {

// Which log term the noise scale uses. kStated is
//   sigma = 4 / (n eps) * sqrt(5 ln(4 / delta)),
// kDerived replaces ln(4/delta) by ln(2/delta), the constant obtained by
// composing the 2 sqrt(10) / n sensitivity with the classic Gaussian
// mechanism calibration.
enum class NoiseConstant { kStated, kDerived };

struct DpConfig {
  double epsilon = 1.0;
  double delta = 1e-2;
  uint64_t seed = 0;
  NoiseConstant constant = NoiseConstant::kStated;

  absl::Status Validate() const;
};

struct DpReleaseStats {
  int64_t n = 0;
  double sigma = 0.0;
  // Negative eigenvalues zeroed by the PSD projection.
  int clipped_eigenvalues = 0;
};

struct DpRelease {
  GmmParams params;  // K = 1, Full
  DpReleaseStats stats;
};

absl::StatusOr<double> NoiseSigma(int64_t n, double epsilon, double delta,
                                  NoiseConstant constant = NoiseConstant::kStated);

struct PsdProjection {
  SquareMatrix matrix;
  int clipped_eigenvalues = 0;
};

// Frobenius-nearest PSD matrix: eigendecompose, zero the negative
// eigenvalues, reconstruct. Inputs asymmetric by up to 1e-8 (relative to the
// largest entry) are symmetrized first; larger asymmetry is an error.
absl::StatusOr<PsdProjection> PsdProject(const SquareMatrix& m);

// Symmetric d x d matrix whose upper-triangle entries (diagonal included) are
// i.i.d. N(0, sigma^2), mirrored below the diagonal.
SquareMatrix SymmetricGaussianNoise(int d, double sigma, Rng& rng);

// Gaussian-mechanism release of a single Gaussian fitted to `x`. Every row of
// `x` must lie in the unit l2 ball and n must be >= 2. The mean gets i.i.d.
// N(0, sigma^2) noise, the 1/n-normalized covariance gets a symmetric noise
// matrix and is then projected onto the PSD cone.
absl::StatusOr<DpRelease> DpReleaseGaussian(const Matrix& x,
                                            const DpConfig& config);

}  // namespace pft

#endif  // PFT_DP_H_
