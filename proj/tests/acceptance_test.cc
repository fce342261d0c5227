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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "Eigen/Eigenvalues"
#include "absl/strings/str_format.h"
#include "pft/bounds.h"
#include "pft/classifier.h"
#include "pft/cli.h"
#include "pft/dp.h"
#include "pft/features.h"
#include "pft/gmm.h"
#include "pft/orchestrator.h"
#include "pft/protocol.h"
#include "pft/random.h"

namespace pft {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Matrix Normal(int64_t n, int d, double sd, uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  Matrix x(n, d);
  for (int64_t i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  return x;
}

GmmParams RandomParams(CovarianceFamily family, int k, int d, uint64_t seed) {
  SynthMixtureOptions opts;
  opts.num_classes = 1;
  opts.dim = d;
  opts.components = k;
  opts.family = family;
  opts.seed = seed;
  return RandomClassModels(opts)->front();
}

// 1. Communication formulas and measured bytes.
Outcome CommunicationFormulas() {
  const CovarianceFamily families[] = {CovarianceFamily::kFull,
                                       CovarianceFamily::kDiag,
                                       CovarianceFamily::kSpherical};
  int mismatches = 0;
  for (CovarianceFamily f : families) {
    for (int64_t d : {2, 64, 512}) {
      for (int64_t k : {1, 10, 50}) {
        for (int64_t c : {1, 10, 100}) {
          int64_t want = 0;
          switch (f) {
            case CovarianceFamily::kFull:
              want = (2 * d + (d * d - d) / 2 + 1) * k * c;
              break;
            case CovarianceFamily::kDiag:
              want = (2 * d + 1) * k * c;
              break;
            case CovarianceFamily::kSpherical:
              want = (d + 2) * k * c;
              break;
          }
          mismatches += ParamCount(f, d, k, c) != want;
        }
      }
    }
  }
  const int64_t headline = ParamCount(CovarianceFamily::kDiag, 512, 10, 100);

  std::vector<GmmMessage> msgs;
  uint64_t seed = 0;
  for (CovarianceFamily f : families) {
    for (int d : {2, 16, 64}) {
      for (int k : {1, 3, 10}) {
        msgs.push_back({static_cast<uint32_t>(seed % 4),
                        static_cast<uint16_t>(seed), 50,
                        RandomParams(f, k, d, seed)});
        ++seed;
      }
    }
  }
  int64_t measured = 0, scalars = 0;
  for (const GmmMessage& m : msgs) {
    absl::StatusOr<std::vector<uint8_t>> b = Encode(m);
    if (!b.ok()) return {false, b.status().ToString()};
    measured += b->size();
    scalars += ParamCount(m.params.family, m.params.dim(),
                          m.params.num_components(), 1);
  }
  const CommReport report = Account(msgs);
  const int64_t expected = 24 * static_cast<int64_t>(msgs.size()) + 2 * scalars;
  const bool pass = mismatches == 0 && headline == 1025000 &&
                    measured == expected && report.total_bytes == measured;
  return {pass, absl::StrFormat(
                    "grid mismatches=%d, Diag(512,10,100)=%d, bytes %d == "
                    "24*%d + 2*%d = %d",
                    mismatches, headline, measured, msgs.size(), scalars,
                    expected)};
}

// 2. DP calibration at n=100, eps=1, delta=0.01, d=16.
Outcome DpCalibration() {
  const double sigma = *NoiseSigma(100, 1.0, 0.01);
  const int d = 16, trials = 2000;
  Matrix x = Normal(100, d, 1.0, 11);
  for (int i = 0; i < 100; ++i) x.row(i) /= 1.5 * x.row(i).norm();
  Vector mean = x.colwise().mean();
  Vector sum = Vector::Zero(d), sum_sq = Vector::Zero(d);
  double min_eig = 1e300;
  DpConfig cfg;
  cfg.epsilon = 1.0;
  cfg.delta = 0.01;
  for (int t = 0; t < trials; ++t) {
    cfg.seed = DeriveSeed(2024, {static_cast<uint64_t>(t)});
    absl::StatusOr<DpRelease> r = DpReleaseGaussian(x, cfg);
    if (!r.ok()) return {false, r.status().ToString()};
    Vector noise = r->params.means.row(0).transpose() - mean;
    sum += noise;
    sum_sq += noise.cwiseAbs2();
    Eigen::SelfAdjointEigenSolver<SquareMatrix> es(r->params.full_covariances[0],
                                                   Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  Vector var = sum_sq / trials - (sum / trials).cwiseAbs2();
  Vector sd = var.cwiseSqrt() * std::sqrt(trials / (trials - 1.0));
  const double worst = ((sd.array() - sigma).abs() / sigma).maxCoeff();
  const bool pass = std::abs(sigma - 0.218933) <= 1e-5 && worst <= 0.10 &&
                    min_eig >= -1e-10;
  return {pass, absl::StrFormat(
                    "sigma=%.6f, worst per-coordinate std deviation %.1f%%, "
                    "min eigenvalue %.2e",
                    sigma, 100 * worst, min_eig)};
}

// 3. EM monotonicity and two-cluster recovery.
Outcome EmCorrectness() {
  int non_monotone = 0;
  double worst_drop = 0;
  for (uint64_t s = 0; s < 200; ++s) {
    Rng rng(DeriveSeed(3, {s}));
    const auto family = static_cast<CovarianceFamily>(s % 3);
    const int d = 1 + rng() % 6;
    const int k = 1 + rng() % 4;
    const int n = 20 + rng() % 300;
    GmmParams truth = RandomParams(family, 1 + rng() % 4, d, s);
    Matrix x = *Sample(truth, n, s);
    EmConfig cfg;
    cfg.seed = s;
    absl::StatusOr<GmmFit> fit = EmFit(x, k, family, cfg);
    if (!fit.ok()) return {false, fit.status().ToString()};
    const auto& t = fit->stats.trace;
    bool ok = true;
    for (size_t i = 1; i < t.size(); ++i) {
      worst_drop = std::max(worst_drop, t[i - 1] - t[i]);
      ok &= t[i] >= t[i - 1] - 1e-8;
    }
    non_monotone += !ok;
  }
  int recovered = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    Matrix x = Normal(1000, 2, 0.5, DeriveSeed(33, {s}));
    for (int i = 0; i < 1000; ++i) x(i, 0) += i % 2 ? 5.0 : -5.0;
    EmConfig cfg;
    cfg.seed = s;
    absl::StatusOr<GmmFit> fit = EmFit(x, 2, CovarianceFamily::kSpherical, cfg);
    if (!fit.ok()) continue;
    const GmmParams& g = fit->params;
    const int pos = g.means(0, 0) > 0 ? 0 : 1;
    Vector e1 = Vector::Zero(2);
    e1(0) = 5;
    const bool ok = (g.means.row(pos).transpose() - e1).norm() <= 0.3 &&
                    (g.means.row(1 - pos).transpose() + e1).norm() <= 0.3 &&
                    g.weights.minCoeff() >= 0.45 && g.weights.maxCoeff() <= 0.55;
    recovered += ok;
  }
  return {non_monotone == 0 && recovered >= 95,
          absl::StrFormat("non-monotone traces %d/200 (largest drop %.2e), "
                          "two-cluster recovery %d/100",
                          non_monotone, worst_drop, recovered)};
}

// 4. Gradient check and separable-data training.
Outcome ClassifierCorrectness() {
  double worst = 0;
  for (uint64_t s = 0; s < 50; ++s) {
    Rng rng(DeriveSeed(4, {s}));
    const int c = 2 + rng() % 7, d = 1 + rng() % 16;
    ClassifierHead h = ClassifierHead::Zeros(c, d);
    h.weights = Normal(c, d, 1.0, s + 1);
    h.bias = Normal(c, 1, 1.0, s + 2).col(0);
    Matrix x = Normal(8, d, 1.0, s + 3);
    std::vector<int> y(8);
    for (int& v : y) v = rng() % c;
    LossAndGradient g = CrossEntropyLossAndGradient(h, x, y);
    auto check = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + 1e-5;
      const double up = CrossEntropyLossAndGradient(h, x, y).loss;
      param = keep - 1e-5;
      const double down = CrossEntropyLossAndGradient(h, x, y).loss;
      param = keep;
      const double fd = (up - down) / 2e-5;
      const double rel =
          std::abs(fd - analytic) / std::max(1e-8, std::abs(fd) + std::abs(analytic));
      worst = std::max(worst, rel);
    };
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) check(h.weights(i, j), g.weight_grad(i, j));
      check(h.bias(i), g.bias_grad(i));
    }
  }
  Rng rng(44);
  std::uniform_real_distribution<double> angle(0, 2 * M_PI), radius(0, 0.5);
  FeatureDataset ds;
  ds.num_classes = 2;
  ds.features.resize(200, 2);
  for (int i = 0; i < 200; ++i) {
    const double a = angle(rng), r = radius(rng);
    ds.features(i, 0) = (i % 2 ? -3.0 : 3.0) + r * std::cos(a);
    ds.features(i, 1) = r * std::sin(a);
    ds.labels.push_back(i % 2);
  }
  absl::StatusOr<TrainResult> trained =
      TrainHead(ds.features, ds.labels, 2, TrainConfig{});
  if (!trained.ok()) return {false, trained.status().ToString()};
  const double acc = *Evaluate(trained->head, ds);
  return {worst <= 1e-4 && acc == 1.0,
          absl::StrFormat("max relative gradient error %.2e, separable "
                          "training accuracy %.4f",
                          worst, acc)};
}

struct World {
  FeatureDataset train;
  FeatureDataset test;
};

World MakeWorld(const SynthMixtureOptions& opts, int64_t train_per_class,
                int64_t test_per_class) {
  std::vector<GmmParams> models = *RandomClassModels(opts);
  World w;
  w.train = *SynthGenerate({models, train_per_class,
                            DeriveSeed(opts.seed, {1}), "train"});
  w.test = *SynthGenerate({models, test_per_class,
                           DeriveSeed(opts.seed, {2}), "test"});
  return w;
}

TrainConfig ExperimentTraining() {
  TrainConfig t;
  t.epochs = 60;
  t.batch_size = 64;
  t.step_size = 0.05;
  return t;
}

double Accuracy(const std::vector<FeatureDataset>& clients,
                const FeatureDataset& test, RunConfig cfg, RunMode mode) {
  cfg.mode = mode;
  absl::StatusOr<ExperimentReport> r = RunExperiment(clients, test, cfg);
  if (!r.ok()) {
    std::fprintf(stderr, "%s: %s\n", RunModeName(mode).c_str(),
                 r.status().ToString().c_str());
    return -1;
  }
  return r->accuracy;
}

// 5. Centralized mixture transfer versus pooled real features.
Outcome PipelineFidelity() {
  std::string detail;
  bool pass = true;
  for (const char* scheme : {"iid", "dirichlet"}) {
    double fed = 0, oracle = 0;
    for (uint64_t s = 0; s < 5; ++s) {
      SynthMixtureOptions opts;
      opts.num_classes = 10;
      opts.dim = 16;
      opts.components = 2;
      opts.family = CovarianceFamily::kDiag;
        opts.class_separation = 3.0;
      opts.seed = DeriveSeed(5, {s});
      World w = MakeWorld(opts, 300, 200);
      PartitionSpec spec;
      spec.num_clients = 5;
      spec.seed = s;
      if (std::string(scheme) == "iid") {
        spec.scheme = ExplicitScheme{IidAssignment(w.train.size(), 5, s)};
      } else {
        spec.scheme = DirichletScheme{0.1};
      }
      std::vector<FeatureDataset> clients = *Partition(w.train, spec);
      RunConfig cfg;
      cfg.num_components = 2;
      cfg.family = CovarianceFamily::kDiag;
      cfg.train = ExperimentTraining();
      cfg.master_seed = s;
      fed += Accuracy(clients, w.test, cfg, RunMode::kCentralized) / 5;
      oracle += Accuracy(clients, w.test, cfg, RunMode::kOracleCentralized) / 5;
    }
    pass &= fed >= oracle - 0.03;
    detail += absl::StrFormat("%s: gmm %.4f vs oracle %.4f; ", scheme, fed,
                              oracle);
  }
  return {pass, detail};
}

// 6. Disjoint-label split: mixture transfer against ensemble and average baselines.
Outcome HeterogeneityPattern() {
  bool pass = true;
  std::string detail;
  for (uint64_t s = 0; s < 5; ++s) {
    SynthMixtureOptions opts;
    opts.num_classes = 10;
    opts.dim = 16;
    opts.components = 10;
    opts.family = CovarianceFamily::kDiag;
    opts.class_separation = 3.0;
    opts.seed = DeriveSeed(6, {s});
    World w = MakeWorld(opts, 300, 200);
    std::vector<FeatureDataset> clients =
        *Partition(w.train, {DisjointLabelScheme{}, 2, s});
    RunConfig cfg;
    cfg.num_components = 10;
    cfg.family = CovarianceFamily::kDiag;
    cfg.train = ExperimentTraining();
    cfg.master_seed = s;
    const double fed = Accuracy(clients, w.test, cfg, RunMode::kCentralized);
    const double ens = Accuracy(clients, w.test, cfg, RunMode::kEnsembleBaseline);
    const double avg = Accuracy(clients, w.test, cfg, RunMode::kAverageBaseline);
    pass &= fed > ens && fed > avg && fed - ens > 0.03;
    detail += absl::StrFormat("[%.3f/%.3f/%.3f]", fed, ens, avg);
  }
  return {pass, "gmm/ensemble/average per seed " + detail};
}

// 7. Five-client chain with 100 samples per client.
Outcome DecentralizedAccumulation() {
  bool pass = true;
  double final_sum = 0, oracle_sum = 0;
  double worst_drop = 0;
  std::string per_seed;
  for (uint64_t s = 0; s < 5; ++s) {
    SynthMixtureOptions opts;
    opts.num_classes = 10;
    opts.dim = 16;
    opts.components = 1;
    opts.family = CovarianceFamily::kDiag;
    opts.class_separation = 4.0;
    opts.seed = DeriveSeed(7, {s});
    World w = MakeWorld(opts, 50, 200);
    std::vector<FeatureDataset> clients = *Partition(
        w.train, {ExplicitScheme{IidAssignment(w.train.size(), 5, s)}, 5, 0});
    RunConfig cfg;
    cfg.num_components = 1;
    cfg.family = CovarianceFamily::kDiag;
    cfg.train = ExperimentTraining();
    cfg.master_seed = s;
    cfg.mode = RunMode::kDecentralizedChain;
    absl::StatusOr<ExperimentReport> chain = RunExperiment(clients, w.test, cfg);
    if (!chain.ok()) return {false, chain.status().ToString()};
    const double oracle =
        Accuracy(clients, w.test, cfg, RunMode::kOracleCentralized);
    const auto& acc = chain->client_accuracies;
    double best = acc.front().accuracy;
    for (const ClientAccuracy& a : acc) {
      worst_drop = std::max(worst_drop, best - a.accuracy);
      best = std::max(best, a.accuracy);
    }
    pass &= chain->accuracy >= oracle - 0.03;
    per_seed += absl::StrFormat("[%.3f/%.3f]", chain->accuracy, oracle);
    final_sum += chain->accuracy / 5;
    oracle_sum += oracle / 5;
  }
  pass &= worst_drop <= 0.02;
  return {pass, absl::StrFormat("final client %.4f vs oracle %.4f (mean of 5), "
                                "largest drop along chain %.3f; final/oracle per seed %s",
                                final_sum, oracle_sum, worst_drop, per_seed)};
}

// 8. Local accuracy bound on synthetic ground-truth instances.
Outcome BoundVerification() {
  int holds = 0, evaluated = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    SynthMixtureOptions opts;
    opts.num_classes = 3;
    opts.dim = 3;
    opts.components = 1;
    opts.family = CovarianceFamily::kFull;
    opts.class_separation = 3.0;
    opts.seed = DeriveSeed(8, {s});
    World w = MakeWorld(opts, 300, 10);
    RunConfig cfg;
    cfg.num_components = 1;
    cfg.family = CovarianceFamily::kFull;
    cfg.train = ExperimentTraining();
    cfg.master_seed = s;
    cfg.compute_bounds = true;
    absl::StatusOr<ExperimentReport> r = RunExperiment({w.train}, w.test, cfg);
    if (!r.ok() || r->bounds.size() != 1) continue;
    ++evaluated;
    holds += r->bounds.begin()->second.holds;
  }
  const double zero = *LocalBound({{0, 0, 0, 0.5}, {0, 0, 0, 0.5}});
  const double one = *LocalBound({{1, 3, -2, 0.3}, {1, 0, -5, 0.7}});
  return {holds >= 99 && zero == 0.0 && one == 1.0,
          absl::StrFormat("bound held in %d/%d instances; limits %.1f and %.1f",
                          holds, evaluated, zero, one)};
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

// 9. Byte-identical reports across repeats and thread counts.
Outcome Reproducibility() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       absl::StrFormat("pft_acceptance_repro_%d", getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "synth.ini")
      << "[synth]\nclasses = 6\ndim = 8\ncomponents = 2\ntrain_per_class = "
         "200\ntest_per_class = 50\nseed = 9\n";
  std::ostringstream sink;
  if (RunCli({"gen-synth", "--config", (dir / "synth.ini").string(), "--out",
              (dir / "data").string()},
             sink, sink) != 0) {
    return {false, "gen-synth failed: " + sink.str()};
  }
  int runs = 0, identical = 0;
  for (const char* mode : {"centralized", "decentralized_chain", "centralized_dp"}) {
    std::ofstream(dir / "run.ini")
        << "[data]\ntrain = data/train.fpft\ntest = data/test.fpft\n"
           "[partition]\nscheme = dirichlet\nbeta = 0.5\nclients = 4\nseed = 2\n"
           "[run]\nmode = "
        << mode
        << "\ncomponents = " << (std::string(mode) == "centralized_dp" ? 1 : 2)
        << "\nfamily = " << (std::string(mode) == "centralized_dp" ? "full" : "diag")
        << "\nseed = 17\nbounds = " << (std::string(mode) == "centralized" ? "true" : "false")
        << "\n[train]\nepochs = 20\nstep_size = 0.05\n";
    std::string reference;
    for (const char* threads : {"1", "4"}) {
      for (int rep = 0; rep < 3; ++rep) {
        const fs::path out = dir / absl::StrFormat("%s_%s_%d", mode, threads, rep);
        if (RunCli({"run", "--config", (dir / "run.ini").string(), "--out",
                    out.string(), "--threads", threads},
                   sink, sink) != 0) {
          return {false, std::string(mode) + " run failed: " + sink.str()};
        }
        const std::string text = Slurp(out / "report.json");
        if (reference.empty()) reference = text;
        ++runs;
        identical += text == reference;
      }
    }
  }
  fs::remove_all(dir);
  return {identical == runs,
          absl::StrFormat("%d/%d reports byte-identical (3 modes x 3 repeats "
                          "x threads {1,4})",
                          identical, runs)};
}

}  // namespace
}  // namespace pft

// Usage: acceptance_test [--only N]
int main(int argc, char** argv) {
  int only = 0;
  if (argc == 3 && std::string(argv[1]) == "--only") only = std::atoi(argv[2]);
  struct Criterion {
    int id;
    const char* name;
    std::function<pft::Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "communication formulas", pft::CommunicationFormulas},
      {2, "dp calibration", pft::DpCalibration},
      {3, "em correctness", pft::EmCorrectness},
      {4, "classifier correctness", pft::ClassifierCorrectness},
      {5, "pipeline fidelity", pft::PipelineFidelity},
      {6, "heterogeneity pattern", pft::HeterogeneityPattern},
      {7, "decentralized accumulation", pft::DecentralizedAccumulation},
      {8, "bound verification", pft::BoundVerification},
      {9, "reproducibility", pft::Reproducibility},
  };
  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    const pft::Outcome o = c.run();
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    failures += !o.pass;
    std::printf("[criterion %d] %s  %s (%.1fs): %s\n", c.id,
                o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  if (ran == 0) return 2;
  return failures == 0 ? 0 : 1;
}
