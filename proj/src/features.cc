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

#include "pft/features.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include <Eigen/Eigenvalues>

#include "absl/strings/str_cat.h"
#include "pft/random.h"

namespace pft {
namespace {

constexpr double kUnitNormSlack =
    1.0 + 4 * std::numeric_limits<double>::epsilon();

static_assert(std::endian::native == std::endian::little,
              "FPFT1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'F', 'P', 'F', 'T'};
constexpr uint8_t kVersion = 1;
constexpr size_t kHeaderBytes = 4 + 1 + 4 + 4 + 4 + 3;

template <typename T>
void Put(std::vector<uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T Get(const uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

}  // namespace

absl::Status FeatureDataset::Validate() const {
  if (features.cols() < 1) {
    return absl::InvalidArgumentError("feature dimension must be >= 1");
  }
  if (static_cast<int64_t>(labels.size()) != features.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "label count ", labels.size(), " != row count ", features.rows()));
  }
  if (num_classes < 1) {
    return absl::InvalidArgumentError("num_classes must be >= 1");
  }
  if (!features.allFinite()) {
    return absl::FailedPreconditionError("features contain non-finite values");
  }
  for (size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || labels[j] >= num_classes) {
      return absl::OutOfRangeError(absl::StrCat("label ", labels[j], " at row ",
                                                j, " outside [0, ",
                                                num_classes, ")"));
    }
  }
  return absl::OkStatus();
}

std::vector<int64_t> FeatureDataset::ClassCounts() const {
  std::vector<int64_t> counts(std::max(num_classes, 0), 0);
  for (int y : labels) ++counts[y];
  return counts;
}

FeatureDataset FeatureDataset::Subset(
    const std::vector<int64_t>& indices) const {
  FeatureDataset out;
  out.num_classes = num_classes;
  out.dataset_id = dataset_id;
  out.features.resize(static_cast<Eigen::Index>(indices.size()),
                      features.cols());
  out.labels.reserve(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    out.features.row(i) = features.row(indices[i]);
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

absl::StatusOr<FeatureDataset> MakeFeatureDataset(Matrix features,
                                                  std::vector<int> labels,
                                                  int num_classes,
                                                  std::string dataset_id) {
  FeatureDataset ds{std::move(features), std::move(labels), num_classes,
                    std::move(dataset_id)};
  if (absl::Status s = ds.Validate(); !s.ok()) return s;
  return ds;
}

absl::StatusOr<std::vector<uint8_t>> SerializeFeatures(
    const FeatureDataset& ds) {
  if (absl::Status s = ds.Validate(); !s.ok()) return s;
  if (ds.num_classes > 65536) {
    return absl::InvalidArgumentError("FPFT1 labels are u16; too many classes");
  }
  const int64_t n = ds.size();
  const int d = ds.dim();
  std::vector<uint8_t> out;
  out.reserve(kHeaderBytes + n * d * 4 + n * 2);
  out.insert(out.end(), kMagic, kMagic + 4);
  Put<uint8_t>(out, kVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(n));
  Put<uint32_t>(out, static_cast<uint32_t>(d));
  Put<uint32_t>(out, static_cast<uint32_t>(ds.num_classes));
  for (int i = 0; i < 3; ++i) Put<uint8_t>(out, 0);
  for (int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      Put<float>(out, static_cast<float>(ds.features(i, j)));
    }
  }
  for (int y : ds.labels) Put<uint16_t>(out, static_cast<uint16_t>(y));
  return out;
}

absl::StatusOr<FeatureDataset> ParseFeatures(const std::vector<uint8_t>& bytes,
                                             std::string dataset_id) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    return absl::InvalidArgumentError("not an FPFT file (bad magic)");
  }
  if (bytes.size() < kHeaderBytes) {
    return absl::DataLossError("FPFT header truncated");
  }
  const uint8_t version = bytes[4];
  if (version != kVersion) {
    return absl::UnimplementedError(
        absl::StrCat("unsupported FPFT version ", version));
  }
  const uint64_t n = Get<uint32_t>(&bytes[5]);
  const uint64_t d = Get<uint32_t>(&bytes[9]);
  const uint64_t c = Get<uint32_t>(&bytes[13]);
  if (d < 1) return absl::InvalidArgumentError("FPFT header declares d = 0");
  if (c < 1) return absl::InvalidArgumentError("FPFT header declares C = 0");
  const uint64_t expected = kHeaderBytes + n * d * 4 + n * 2;
  if (bytes.size() < expected) {
    return absl::DataLossError(absl::StrCat("FPFT payload truncated: expected ",
                                            expected, " bytes, got ",
                                            bytes.size()));
  }
  if (bytes.size() > expected) {
    return absl::DataLossError(absl::StrCat(
        "FPFT file has ", bytes.size() - expected, " trailing bytes"));
  }
  FeatureDataset ds;
  ds.num_classes = static_cast<int>(c);
  ds.dataset_id = std::move(dataset_id);
  ds.features.resize(static_cast<Eigen::Index>(n),
                     static_cast<Eigen::Index>(d));
  const uint8_t* p = bytes.data() + kHeaderBytes;
  for (uint64_t i = 0; i < n; ++i) {
    for (uint64_t j = 0; j < d; ++j, p += 4) {
      const float v = Get<float>(p);
      if (!std::isfinite(v)) {
        return absl::FailedPreconditionError(absl::StrCat(
            "non-finite feature at row ", i, ", column ", j));
      }
      ds.features(i, j) = v;
    }
  }
  ds.labels.resize(n);
  for (uint64_t i = 0; i < n; ++i, p += 2) {
    const uint16_t y = Get<uint16_t>(p);
    if (y >= c) {
      return absl::OutOfRangeError(
          absl::StrCat("label ", y, " at row ", i, " >= C = ", c));
    }
    ds.labels[i] = y;
  }
  return ds;
}

absl::Status SaveFeatures(const FeatureDataset& ds, const std::string& path) {
  absl::StatusOr<std::vector<uint8_t>> bytes = SerializeFeatures(ds);
  if (!bytes.ok()) return bytes.status();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out.write(reinterpret_cast<const char*>(bytes->data()),
            static_cast<std::streamsize>(bytes->size()));
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<FeatureDataset> LoadFeatures(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return ParseFeatures(bytes, std::filesystem::path(path).stem().string());
}

FeatureDataset NormalizeToUnitBall(const FeatureDataset& ds) {
  FeatureDataset out = ds;
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    // Rows already on the sphere up to rounding are left alone, which keeps
    // the map idempotent.
    const double norm = out.features.row(i).norm();
    if (norm > kUnitNormSlack) out.features.row(i) /= norm;
  }
  return out;
}

absl::StatusOr<Matrix> ClassConditional(const FeatureDataset& ds, int c) {
  if (c < 0 || c >= ds.num_classes) {
    return absl::OutOfRangeError(
        absl::StrCat("class ", c, " outside [0, ", ds.num_classes, ")"));
  }
  std::vector<int64_t> rows;
  for (size_t j = 0; j < ds.labels.size(); ++j) {
    if (ds.labels[j] == c) rows.push_back(static_cast<int64_t>(j));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = ds.features.row(rows[i]);
  return out;
}

std::vector<int> IidAssignment(int64_t n, int num_clients, uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, num_clients - 1);
  std::vector<int> out(n);
  for (auto& a : out) a = pick(rng);
  return out;
}

absl::StatusOr<std::vector<FeatureDataset>> Partition(
    const FeatureDataset& ds, const PartitionSpec& spec) {
  const int clients = spec.num_clients;
  if (clients < 1) return absl::InvalidArgumentError("num_clients must be >= 1");
  const int64_t n = ds.size();
  std::vector<int> assignment(n, 0);

  if (const auto* dir = std::get_if<DirichletScheme>(&spec.scheme)) {
    if (!(dir->beta > 0) || !std::isfinite(dir->beta)) {
      return absl::InvalidArgumentError("Dirichlet beta must be > 0");
    }
    Rng rng(spec.seed);
    std::gamma_distribution<double> gamma(dir->beta, 1.0);
    std::vector<std::vector<int64_t>> by_class(ds.num_classes);
    for (int64_t j = 0; j < n; ++j) by_class[ds.labels[j]].push_back(j);
    std::vector<double> props(clients);
    for (auto& rows : by_class) {
      // A class's rows are shuffled, then cut at the cumulative proportions.
      double total = 0.0;
      for (double& p : props) total += (p = gamma(rng));
      if (!(total > 0)) {
        // Every gamma draw underflowed (tiny beta): fall back to one client.
        std::fill(props.begin(), props.end(), 0.0);
        props[std::uniform_int_distribution<int>(0, clients - 1)(rng)] = 1.0;
        total = 1.0;
      }
      std::shuffle(rows.begin(), rows.end(), rng);
      const double m = static_cast<double>(rows.size());
      double cum = 0.0;
      size_t begin = 0;
      for (int i = 0; i < clients; ++i) {
        cum += props[i] / total;
        size_t end = i + 1 == clients
                         ? rows.size()
                         : std::min(rows.size(),
                                    static_cast<size_t>(std::llround(cum * m)));
        end = std::max(end, begin);
        for (size_t r = begin; r < end; ++r) assignment[rows[r]] = i;
        begin = end;
      }
    }
  } else if (std::holds_alternative<DisjointLabelScheme>(spec.scheme)) {
    if (clients > ds.num_classes) {
      return absl::InvalidArgumentError(
          absl::StrCat("disjoint-label split needs num_clients (", clients,
                       ") <= num_classes (", ds.num_classes, ")"));
    }
    const int block = (ds.num_classes + clients - 1) / clients;
    for (int64_t j = 0; j < n; ++j) {
      assignment[j] = std::min(ds.labels[j] / block, clients - 1);
    }
  } else {
    const auto& expl = std::get<ExplicitScheme>(spec.scheme);
    if (static_cast<int64_t>(expl.assignment.size()) != n) {
      return absl::InvalidArgumentError(
          "explicit assignment length differs from dataset size");
    }
    for (int64_t j = 0; j < n; ++j) {
      const int a = expl.assignment[j];
      if (a < 0 || a >= clients) {
        return absl::OutOfRangeError(
            absl::StrCat("row ", j, " assigned to invalid client ", a));
      }
      assignment[j] = a;
    }
  }

  std::vector<std::vector<int64_t>> rows(clients);
  for (int64_t j = 0; j < n; ++j) rows[assignment[j]].push_back(j);
  std::vector<FeatureDataset> out;
  out.reserve(clients);
  for (int i = 0; i < clients; ++i) {
    out.push_back(ds.Subset(rows[i]));
    out.back().dataset_id = absl::StrCat(ds.dataset_id, "/client", i);
  }
  return out;
}

absl::StatusOr<std::vector<GmmParams>> RandomClassModels(
    const SynthMixtureOptions& o) {
  if (o.num_classes < 1 || o.dim < 1 || o.components < 1) {
    return absl::InvalidArgumentError(
        "classes, dim and components must all be >= 1");
  }
  if (!(o.class_separation >= 0) || !(o.component_spread >= 0) ||
      !(o.noise_scale > 0)) {
    return absl::InvalidArgumentError(
        "separation and spread must be >= 0, noise_scale > 0");
  }
  Rng rng(DeriveSeed(o.seed, SeedStream::kSynth, {0xc1a55}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  std::gamma_distribution<double> gamma(5.0, 1.0);
  const int d = o.dim;
  const double center_sd = o.class_separation / std::sqrt(d);
  const double spread_sd = o.component_spread / std::sqrt(d);
  const double var = o.noise_scale * o.noise_scale;

  std::vector<GmmParams> out;
  out.reserve(o.num_classes);
  for (int c = 0; c < o.num_classes; ++c) {
    Vector center(d);
    for (int j = 0; j < d; ++j) center(j) = center_sd * normal(rng);
    GmmParams g;
    g.family = o.family;
    g.weights.resize(o.components);
    g.means.resize(o.components, d);
    for (int k = 0; k < o.components; ++k) {
      g.weights(k) = gamma(rng);
      for (int j = 0; j < d; ++j) {
        g.means(k, j) =
            center(j) + (o.components > 1 ? spread_sd * normal(rng) : 0.0);
      }
    }
    g.weights /= g.weights.sum();
    switch (o.family) {
      case CovarianceFamily::kFull:
        for (int k = 0; k < o.components; ++k) {
          SquareMatrix a(d, d);
          for (int r = 0; r < d; ++r) {
            for (int s = 0; s < d; ++s) a(r, s) = normal(rng);
          }
          SquareMatrix cov = var * (0.5 * a * a.transpose() / d +
                                    0.5 * SquareMatrix::Identity(d, d));
          g.full_covariances.push_back(0.5 * (cov + cov.transpose()));
        }
        break;
      case CovarianceFamily::kDiag:
        g.diag_covariances.resize(o.components, d);
        for (int k = 0; k < o.components; ++k) {
          for (int j = 0; j < d; ++j) g.diag_covariances(k, j) = var * unit(rng);
        }
        break;
      case CovarianceFamily::kSpherical:
        g.spherical_covariances.resize(o.components);
        for (int k = 0; k < o.components; ++k) {
          g.spherical_covariances(k) = var * unit(rng);
        }
        break;
    }
    out.push_back(std::move(g));
  }
  return out;
}

absl::StatusOr<FeatureDataset> SynthGenerate(const SynthSpec& spec) {
  if (spec.class_models.empty()) {
    return absl::InvalidArgumentError("synth spec has no classes");
  }
  if (spec.samples_per_class < 0) {
    return absl::InvalidArgumentError("samples_per_class must be >= 0");
  }
  const int d = spec.class_models[0].dim();
  for (size_t c = 0; c < spec.class_models.size(); ++c) {
    const GmmParams& g = spec.class_models[c];
    if (absl::Status s = g.Validate(); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("class ", c, " model invalid: ", s.message()));
    }
    if (g.dim() != d) {
      return absl::InvalidArgumentError("class models disagree on dimension");
    }
    for (int k = 0; k < g.num_components(); ++k) {
      Eigen::SelfAdjointEigenSolver<SquareMatrix> eig(g.Covariance(k),
                                                      Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() <= 0) {
        return absl::InvalidArgumentError(absl::StrCat(
            "class ", c, " component ", k,
            " covariance is not positive definite"));
      }
    }
  }
  const int num_classes = static_cast<int>(spec.class_models.size());
  const int64_t m = spec.samples_per_class;
  Matrix features(num_classes * m, d);
  std::vector<int> labels;
  labels.reserve(num_classes * m);
  for (int c = 0; c < num_classes; ++c) {
    absl::StatusOr<Matrix> x =
        Sample(spec.class_models[c], m,
               DeriveSeed(spec.seed, SeedStream::kSynth,
                          {static_cast<uint64_t>(c)}));
    if (!x.ok()) return x.status();
    features.middleRows(c * m, m) = *x;
    labels.insert(labels.end(), m, c);
  }
  return MakeFeatureDataset(std::move(features), std::move(labels),
                            num_classes, spec.dataset_id);
}

}  // namespace pft
