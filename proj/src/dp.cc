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

#include "pft/dp.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "absl/strings/str_cat.h"

namespace pft {
namespace {

constexpr double kUnitNormSlack = 1e-9;
constexpr double kSymmetryTolerance = 1e-8;

}  // namespace

absl::Status DpConfig::Validate() const {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError("epsilon must be > 0");
  }
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> NoiseSigma(int64_t n, double epsilon, double delta,
                                  NoiseConstant constant) {
  if (n < 1) return absl::InvalidArgumentError("sample count must be >= 1");
  if (!(epsilon > 0)) return absl::InvalidArgumentError("epsilon must be > 0");
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  const double numerator = constant == NoiseConstant::kStated ? 4.0 : 2.0;
  return 4.0 / (static_cast<double>(n) * epsilon) *
         std::sqrt(5.0 * std::log(numerator / delta));
}

absl::StatusOr<PsdProjection> PsdProject(const SquareMatrix& m) {
  if (m.rows() != m.cols()) {
    return absl::InvalidArgumentError("PSD projection needs a square matrix");
  }
  if (!m.allFinite()) {
    return absl::InvalidArgumentError("PSD projection input is non-finite");
  }
  PsdProjection out;
  if (m.size() == 0) return out;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    return absl::InvalidArgumentError("PSD projection input is not symmetric");
  }
  const SquareMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<SquareMatrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    return absl::InternalError("eigendecomposition failed");
  }
  Vector values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0) {
      values(i) = 0;
      ++out.clipped_eigenvalues;
    }
  }
  if (out.clipped_eigenvalues == 0) {
    out.matrix = sym;
    return out;
  }
  const SquareMatrix& v = eig.eigenvectors();
  const SquareMatrix rebuilt = v * values.asDiagonal() * v.transpose();
  out.matrix = 0.5 * (rebuilt + rebuilt.transpose());
  return out;
}

SquareMatrix SymmetricGaussianNoise(int d, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  SquareMatrix out(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) out(i, j) = out(j, i) = normal(rng);
  }
  return out;
}

absl::StatusOr<DpRelease> DpReleaseGaussian(const Matrix& x,
                                            const DpConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  const int64_t n = x.rows();
  const int d = static_cast<int>(x.cols());
  if (n < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("DP release needs n >= 2 samples, got ", n));
  }
  if (!x.allFinite()) return absl::InvalidArgumentError("non-finite input");
  const Vector norms = x.rowwise().norm();
  for (int64_t i = 0; i < n; ++i) {
    if (norms(i) > 1.0 + kUnitNormSlack) {
      return absl::InvalidArgumentError(absl::StrCat(
          "row ", i, " has l2 norm ", norms(i), " > 1; normalize first"));
    }
  }
  absl::StatusOr<double> sigma =
      NoiseSigma(n, config.epsilon, config.delta, config.constant);
  if (!sigma.ok()) return sigma.status();

  const Vector mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mean.transpose();
  const SquareMatrix cov =
      (centered.transpose() * centered) / static_cast<double>(n);

  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, *sigma);
  Vector noisy_mean = mean;
  for (int j = 0; j < d; ++j) noisy_mean(j) += normal(rng);
  SquareMatrix noisy_cov = cov + SymmetricGaussianNoise(d, *sigma, rng);

  absl::StatusOr<PsdProjection> proj = PsdProject(noisy_cov);
  if (!proj.ok()) return proj.status();

  DpRelease out;
  out.params = SingleGaussian(noisy_mean, proj->matrix);
  out.stats.n = n;
  out.stats.sigma = *sigma;
  out.stats.clipped_eigenvalues = proj->clipped_eigenvalues;
  return out;
}

}  // namespace pft
