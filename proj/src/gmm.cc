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

#include "pft/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "absl/strings/str_cat.h"
#include "pft/random.h"

namespace pft {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// Components whose responsibility mass drops below this fraction of n are
// re-seeded.
constexpr double kEmptyComponentFraction = 1e-10;

bool AllFinite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

// Row-wise log-sum-exp.
Vector LogSumExpRows(const Matrix& m) {
  Vector out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      out(i) = mx;
      continue;
    }
    out(i) = mx + std::log((m.row(i).array() - mx).exp().sum());
  }
  return out;
}

// Weighted per-family covariance of `diff` (rows already centered), with
// weights `r` summing to `mass`, plus `reg` on the diagonal.
void SetCovariance(GmmParams& p, int k, const Matrix& diff, const Vector& r,
                   double mass, double reg) {
  const int d = static_cast<int>(diff.cols());
  switch (p.family) {
    case CovarianceFamily::kFull: {
      Matrix weighted = diff.array().colwise() * r.array();
      const SquareMatrix raw = (weighted.transpose() * diff) / mass;
      SquareMatrix cov = 0.5 * (raw + raw.transpose());
      cov.diagonal().array() += reg;
      p.full_covariances[k] = std::move(cov);
      break;
    }
    case CovarianceFamily::kDiag:
      p.diag_covariances.row(k) =
          ((diff.array().square().colwise() * r.array()).colwise().sum() /
           mass)
              .array() +
          reg;
      break;
    case CovarianceFamily::kSpherical:
      p.spherical_covariances(k) =
          (diff.array().square().colwise() * r.array()).sum() / (mass * d) +
          reg;
      break;
  }
}

GmmParams EmptyParams(CovarianceFamily family, int k, int d) {
  GmmParams p;
  p.family = family;
  p.weights = Vector::Zero(k);
  p.means = Matrix::Zero(k, d);
  switch (family) {
    case CovarianceFamily::kFull:
      p.full_covariances.assign(k, SquareMatrix::Zero(d, d));
      break;
    case CovarianceFamily::kDiag:
      p.diag_covariances = Matrix::Zero(k, d);
      break;
    case CovarianceFamily::kSpherical:
      p.spherical_covariances = Vector::Zero(k);
      break;
  }
  return p;
}

// M-step from responsibilities. Means are accumulated relative to the first
// data row, so a component that owns identical points reproduces them
// exactly. `reseed_order` lists candidate rows for empty components, most
// preferred first.
GmmParams MaximizationStep(const Matrix& x, const Matrix& resp,
                           CovarianceFamily family, double reg,
                           const std::vector<int64_t>& reseed_order) {
  const int64_t n = x.rows();
  const int d = static_cast<int>(x.cols());
  const int k_count = static_cast<int>(resp.cols());
  GmmParams p = EmptyParams(family, k_count, d);
  const Eigen::RowVectorXd ref = x.row(0);
  const Matrix shifted = x.rowwise() - ref;

  // Global statistics for re-seeded components.
  const Eigen::RowVectorXd global_mean =
      ref + shifted.colwise().sum() / static_cast<double>(n);
  const Matrix global_diff = x.rowwise() - global_mean;
  const Vector ones = Vector::Ones(n);

  size_t next_reseed = 0;
  for (int k = 0; k < k_count; ++k) {
    const Vector r = resp.col(k);
    const double mass = r.sum();
    if (mass < kEmptyComponentFraction * static_cast<double>(n)) {
      const int64_t idx =
          reseed_order.empty()
              ? 0
              : reseed_order[next_reseed++ % reseed_order.size()];
      p.means.row(k) = x.row(idx);
      p.weights(k) = 1.0;
      SetCovariance(p, k, global_diff, ones, static_cast<double>(n), reg);
      continue;
    }
    p.weights(k) = mass;
    p.means.row(k) = ref + (r.transpose() * shifted) / mass;
    const Matrix diff = x.rowwise() - Eigen::RowVectorXd(p.means.row(k));
    SetCovariance(p, k, diff, r, mass, reg);
  }
  p.weights /= p.weights.sum();
  return p;
}

struct EStep {
  double avg_log_likelihood;
  Matrix resp;
  Vector point_log_density;
};

absl::StatusOr<EStep> ExpectationStep(const GmmParams& p, const Matrix& x) {
  absl::StatusOr<GmmDensity> density = GmmDensity::Create(p);
  if (!density.ok()) return density.status();
  const Matrix logs = density->WeightedComponentLogDensities(x);
  EStep out;
  out.point_log_density = LogSumExpRows(logs);
  if (!out.point_log_density.allFinite()) {
    return absl::InternalError(
        "EM fit failed: responsibilities cannot be normalized (a sample has "
        "zero density under every component)");
  }
  out.resp = (logs.colwise() - out.point_log_density).array().exp();
  out.avg_log_likelihood = out.point_log_density.mean();
  return out;
}

// Indices sorted by ascending value, ties by index.
std::vector<int64_t> ArgsortAscending(const Vector& v) {
  std::vector<int64_t> idx(v.size());
  for (int64_t i = 0; i < v.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int64_t a, int64_t b) { return v(a) < v(b); });
  return idx;
}

absl::StatusOr<GmmFit> RunEm(const Matrix& x, GmmParams params,
                             const EmConfig& config) {
  GmmFit fit;
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    absl::StatusOr<EStep> e = ExpectationStep(params, x);
    if (!e.ok()) return e.status();
    fit.stats.trace.push_back(e->avg_log_likelihood);
    if (iter > 0 &&
        e->avg_log_likelihood - prev <= config.tol * std::abs(prev)) {
      fit.stats.converged = true;
      break;
    }
    if (iter == config.max_iters) break;
    params = MaximizationStep(x, e->resp, params.family, config.reg_covar,
                              ArgsortAscending(e->point_log_density));
    ++fit.stats.iterations;
    prev = e->avg_log_likelihood;
  }
  fit.stats.final_avg_log_likelihood = fit.stats.trace.back();
  fit.params = std::move(params);
  return fit;
}

}  // namespace

std::string CovarianceFamilyName(CovarianceFamily family) {
  switch (family) {
    case CovarianceFamily::kFull:
      return "full";
    case CovarianceFamily::kDiag:
      return "diag";
    case CovarianceFamily::kSpherical:
      return "spherical";
  }
  return "unknown";
}

absl::StatusOr<CovarianceFamily> ParseCovarianceFamily(const std::string& s) {
  if (s == "full") return CovarianceFamily::kFull;
  if (s == "diag") return CovarianceFamily::kDiag;
  if (s == "spherical" || s == "spher") return CovarianceFamily::kSpherical;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown covariance family '", s, "'"));
}

SquareMatrix GmmParams::Covariance(int k) const {
  const int d = dim();
  switch (family) {
    case CovarianceFamily::kFull:
      return full_covariances[k];
    case CovarianceFamily::kDiag:
      return diag_covariances.row(k).transpose().asDiagonal();
    case CovarianceFamily::kSpherical:
      return spherical_covariances(k) * SquareMatrix::Identity(d, d);
  }
  return {};
}

void GmmParams::AddToDiagonal(double amount) {
  switch (family) {
    case CovarianceFamily::kFull:
      for (auto& c : full_covariances) c.diagonal().array() += amount;
      break;
    case CovarianceFamily::kDiag:
      diag_covariances.array() += amount;
      break;
    case CovarianceFamily::kSpherical:
      spherical_covariances.array() += amount;
      break;
  }
}

absl::Status GmmParams::Validate() const {
  if (absl::Status s = ValidateStructure(); !s.ok()) return s;
  if (family != CovarianceFamily::kFull) return absl::OkStatus();
  for (int k = 0; k < num_components(); ++k) {
    const SquareMatrix& c = full_covariances[k];
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<SquareMatrix> eig(c, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
      return absl::InvalidArgumentError(
          absl::StrCat("GMM covariance ", k, " is not PSD"));
    }
  }
  return absl::OkStatus();
}

absl::Status GmmParams::ValidateStructure() const {
  const int k_count = num_components();
  const int d = dim();
  if (k_count < 1) return absl::InvalidArgumentError("GMM has no components");
  if (d < 1) return absl::InvalidArgumentError("GMM dimension must be >= 1");
  if (means.rows() != k_count) {
    return absl::InvalidArgumentError("GMM means/weights count mismatch");
  }
  if (!weights.allFinite() || !AllFinite(means)) {
    return absl::InvalidArgumentError("GMM has non-finite weights or means");
  }
  if ((weights.array() < 0).any()) {
    return absl::InvalidArgumentError("GMM weight is negative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrCat("GMM weights sum to ", weights.sum(), ", not 1"));
  }
  switch (family) {
    case CovarianceFamily::kFull: {
      if (static_cast<int>(full_covariances.size()) != k_count) {
        return absl::InvalidArgumentError("GMM covariance count mismatch");
      }
      for (int k = 0; k < k_count; ++k) {
        const SquareMatrix& c = full_covariances[k];
        if (c.rows() != d || c.cols() != d) {
          return absl::InvalidArgumentError("GMM covariance has wrong shape");
        }
        if (!AllFinite(c)) {
          return absl::InvalidArgumentError("GMM covariance is non-finite");
        }
        const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
          return absl::InvalidArgumentError("GMM covariance is not symmetric");
        }
      }
      break;
    }
    case CovarianceFamily::kDiag:
      if (diag_covariances.rows() != k_count || diag_covariances.cols() != d) {
        return absl::InvalidArgumentError("GMM variances have wrong shape");
      }
      if (!AllFinite(diag_covariances) ||
          (diag_covariances.array() < 0).any()) {
        return absl::InvalidArgumentError(
            "GMM variances must be finite and non-negative");
      }
      break;
    case CovarianceFamily::kSpherical:
      if (spherical_covariances.size() != k_count) {
        return absl::InvalidArgumentError("GMM variances have wrong shape");
      }
      if (!spherical_covariances.allFinite() ||
          (spherical_covariances.array() < 0).any()) {
        return absl::InvalidArgumentError(
            "GMM variances must be finite and non-negative");
      }
      break;
  }
  return absl::OkStatus();
}

GmmParams SingleGaussian(const Vector& mean, const SquareMatrix& covariance) {
  GmmParams p;
  p.family = CovarianceFamily::kFull;
  p.weights = Vector::Ones(1);
  p.means = mean.transpose();
  p.full_covariances = {covariance};
  return p;
}

absl::Status EmConfig::Validate() const {
  if (max_iters < 1) return absl::InvalidArgumentError("max_iters must be >= 1");
  if (!(tol >= 0)) return absl::InvalidArgumentError("tol must be >= 0");
  if (!(reg_covar > 0)) {
    return absl::InvalidArgumentError("reg_covar must be > 0");
  }
  if (n_init < 1) return absl::InvalidArgumentError("n_init must be >= 1");
  return absl::OkStatus();
}

absl::StatusOr<GmmParams> EmInitialize(const Matrix& x, int num_components,
                                       CovarianceFamily family,
                                       const EmConfig& config, int restart) {
  if (x.rows() == 0) return absl::InvalidArgumentError("EM input is empty");
  if (num_components < 1) {
    return absl::InvalidArgumentError("number of components must be >= 1");
  }
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  const int64_t n = x.rows();
  const int k_count =
      static_cast<int>(std::min<int64_t>(num_components, n));
  Rng rng(DeriveSeed(config.seed, {static_cast<uint64_t>(restart)}));

  // k-means++ seeding.
  std::vector<int64_t> centers;
  centers.reserve(k_count);
  centers.push_back(std::uniform_int_distribution<int64_t>(0, n - 1)(rng));
  Vector min_dist2 = (x.rowwise() - x.row(centers[0])).rowwise().squaredNorm();
  std::vector<int> owner(n, 0);
  while (static_cast<int>(centers.size()) < k_count) {
    const double total = min_dist2.sum();
    int64_t pick;
    if (total > 0) {
      std::discrete_distribution<int64_t> dist(
          min_dist2.data(), min_dist2.data() + min_dist2.size());
      pick = dist(rng);
    } else {
      pick = std::uniform_int_distribution<int64_t>(0, n - 1)(rng);
    }
    const int c = static_cast<int>(centers.size());
    centers.push_back(pick);
    const Vector d2 = (x.rowwise() - x.row(pick)).rowwise().squaredNorm();
    for (int64_t i = 0; i < n; ++i) {
      if (d2(i) < min_dist2(i)) {
        min_dist2(i) = d2(i);
        owner[i] = c;
      }
    }
  }

  Matrix resp = Matrix::Zero(n, k_count);
  for (int64_t i = 0; i < n; ++i) resp(i, owner[i]) = 1.0;
  // Rows far from every center stand in for low-density points.
  std::vector<int64_t> order = ArgsortAscending(-min_dist2);
  return MaximizationStep(x, resp, family, config.reg_covar, order);
}

absl::StatusOr<GmmFit> EmFit(const Matrix& x, int num_components,
                             CovarianceFamily family, const EmConfig& config) {
  if (x.rows() == 0) return absl::InvalidArgumentError("EM input is empty");
  if (num_components < 1) {
    return absl::InvalidArgumentError("number of components must be >= 1");
  }
  if (!AllFinite(x)) return absl::InvalidArgumentError("EM input non-finite");
  if (absl::Status s = config.Validate(); !s.ok()) return s;

  std::optional<GmmFit> best;
  for (int restart = 0; restart < config.n_init; ++restart) {
    absl::StatusOr<GmmParams> init =
        EmInitialize(x, num_components, family, config, restart);
    if (!init.ok()) return init.status();
    absl::StatusOr<GmmFit> fit = RunEm(x, *std::move(init), config);
    if (!fit.ok()) return fit.status();
    if (!best || fit->stats.final_avg_log_likelihood >
                     best->stats.final_avg_log_likelihood) {
      best = *std::move(fit);
    }
  }
  return *std::move(best);
}

absl::StatusOr<GmmDensity> GmmDensity::Create(const GmmParams& params) {
  const int k_count = params.num_components();
  const int d = params.dim();
  if (k_count < 1 || d < 1 || params.means.rows() != k_count) {
    return absl::InvalidArgumentError("malformed GMM parameters");
  }
  GmmDensity out;
  out.family_ = params.family;
  out.dim_ = d;
  out.components_.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    Component c;
    c.log_weight = std::log(params.weights(k));
    c.mean = params.means.row(k).transpose();
    double log_det = 0.0;
    switch (params.family) {
      case CovarianceFamily::kFull: {
        Eigen::LLT<SquareMatrix> llt(params.full_covariances[k]);
        if (llt.info() != Eigen::Success) {
          return absl::InvalidArgumentError(absl::StrCat(
              "covariance of component ", k, " is not positive definite"));
        }
        c.chol = llt.matrixL();
        if ((c.chol.diagonal().array() <= 0).any()) {
          return absl::InvalidArgumentError(absl::StrCat(
              "covariance of component ", k, " is singular"));
        }
        log_det = 2.0 * c.chol.diagonal().array().log().sum();
        break;
      }
      case CovarianceFamily::kDiag:
        c.variances = params.diag_covariances.row(k).transpose();
        if ((c.variances.array() <= 0).any()) {
          return absl::InvalidArgumentError(absl::StrCat(
              "zero variance in component ", k, " (no regularizer?)"));
        }
        log_det = c.variances.array().log().sum();
        break;
      case CovarianceFamily::kSpherical:
        c.variances = Vector::Constant(1, params.spherical_covariances(k));
        if (c.variances(0) <= 0) {
          return absl::InvalidArgumentError(absl::StrCat(
              "zero variance in component ", k, " (no regularizer?)"));
        }
        log_det = d * std::log(c.variances(0));
        break;
    }
    c.log_norm = -0.5 * (d * kLog2Pi + log_det);
    out.components_.push_back(std::move(c));
  }
  return out;
}

Matrix GmmDensity::WeightedComponentLogDensities(const Matrix& x) const {
  const int64_t n = x.rows();
  Matrix out(n, components_.size());
  for (size_t k = 0; k < components_.size(); ++k) {
    const Component& c = components_[k];
    const Matrix diff = x.rowwise() - c.mean.transpose();
    Vector maha;
    switch (family_) {
      case CovarianceFamily::kFull: {
        const SquareMatrix solved =
            c.chol.triangularView<Eigen::Lower>().solve(diff.transpose());
        maha = solved.colwise().squaredNorm().transpose();
        break;
      }
      case CovarianceFamily::kDiag:
        maha = (diff.array().square().rowwise() /
                c.variances.transpose().array())
                   .rowwise()
                   .sum();
        break;
      case CovarianceFamily::kSpherical:
        maha = diff.rowwise().squaredNorm() / c.variances(0);
        break;
    }
    out.col(k) = (c.log_weight + c.log_norm - 0.5 * maha.array()).matrix();
  }
  return out;
}

Vector GmmDensity::LogPdf(const Matrix& x) const {
  return LogSumExpRows(WeightedComponentLogDensities(x));
}

absl::StatusOr<double> LogPdf(const GmmParams& g, const Vector& x) {
  if (x.size() != g.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: point has ", x.size(), ", GMM has ", g.dim()));
  }
  absl::StatusOr<GmmDensity> density = GmmDensity::Create(g);
  if (!density.ok()) return density.status();
  Matrix row = x.transpose();
  return density->LogPdf(row)(0);
}

absl::StatusOr<double> AvgLogLikelihood(const GmmParams& g, const Matrix& x) {
  if (x.rows() == 0) {
    return absl::InvalidArgumentError("average log-likelihood of empty set");
  }
  if (x.cols() != g.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: data has ", x.cols(), ", GMM has ", g.dim()));
  }
  absl::StatusOr<GmmDensity> density = GmmDensity::Create(g);
  if (!density.ok()) return density.status();
  return density->LogPdf(x).mean();
}

absl::StatusOr<Matrix> Sample(const GmmParams& g, int64_t n, uint64_t seed) {
  if (n < 0) return absl::InvalidArgumentError("sample count must be >= 0");
  if (absl::Status s = g.ValidateStructure(); !s.ok()) return s;
  const int d = g.dim();
  const int k_count = g.num_components();
  Matrix out(n, d);
  if (n == 0) return out;

  // Per-component linear maps A_k with A_k A_k^T = Sigma_k.
  std::vector<SquareMatrix> factors(k_count);
  for (int k = 0; k < k_count; ++k) {
    switch (g.family) {
      case CovarianceFamily::kFull: {
        Eigen::SelfAdjointEigenSolver<SquareMatrix> eig(g.full_covariances[k]);
        const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factors[k] = eig.eigenvectors() * roots.asDiagonal();
        break;
      }
      case CovarianceFamily::kDiag:
        factors[k] = g.diag_covariances.row(k)
                         .transpose()
                         .cwiseSqrt()
                         .asDiagonal();
        break;
      case CovarianceFamily::kSpherical:
        factors[k] = std::sqrt(g.spherical_covariances(k)) *
                     SquareMatrix::Identity(d, d);
        break;
    }
  }

  Rng rng(seed);
  std::discrete_distribution<int> pick(g.weights.data(),
                                       g.weights.data() + k_count);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(d);
  for (int64_t i = 0; i < n; ++i) {
    const int k = k_count == 1 ? 0 : pick(rng);
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    out.row(i) = (g.means.row(k).transpose() + factors[k] * z).transpose();
  }
  return out;
}

}  // namespace pft
