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

#include "pft/orchestrator.h"

#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "pft/features.h"
#include "pft/random.h"
#include "pft/report.h"
#include "test_util.h"

namespace pft {
namespace {

struct World {
  std::vector<GmmParams> models;
  FeatureDataset train;
  FeatureDataset test;
};

World MakeWorld(int classes, int dim, int components, CovarianceFamily family,
                int64_t train_per_class, uint64_t seed) {
  SynthMixtureOptions opts;
  opts.num_classes = classes;
  opts.dim = dim;
  opts.components = components;
  opts.family = family;
  opts.seed = seed;
  World w;
  w.models = *RandomClassModels(opts);
  w.train = *SynthGenerate({w.models, train_per_class, seed + 1, "train"});
  w.test = *SynthGenerate({w.models, 100, seed + 2, "test"});
  return w;
}

std::vector<FeatureDataset> Iid(const FeatureDataset& ds, int clients,
                                uint64_t seed) {
  return *Partition(
      ds, {ExplicitScheme{IidAssignment(ds.size(), clients, seed)}, clients, 0});
}

RunConfig BaseConfig(RunMode mode) {
  RunConfig cfg;
  cfg.mode = mode;
  cfg.train.step_size = 0.05;
  cfg.train.epochs = 30;
  cfg.master_seed = 7;
  return cfg;
}

TEST(RunModeTest, NamesRoundTrip) {
  for (RunMode m : {RunMode::kCentralized, RunMode::kCentralizedDp,
                    RunMode::kDecentralizedChain, RunMode::kEnsembleBaseline,
                    RunMode::kAverageBaseline, RunMode::kOracleCentralized}) {
    ASSERT_OK_AND_ASSIGN(RunMode back, ParseRunMode(RunModeName(m)));
    EXPECT_EQ(back, m);
  }
  EXPECT_FALSE(ParseRunMode("federated_averaging").ok());
}

TEST(RunConfigTest, DpRequiresSingleFullGaussian) {
  RunConfig cfg = BaseConfig(RunMode::kCentralizedDp);
  cfg.family = CovarianceFamily::kFull;
  EXPECT_OK(cfg.Validate());
  cfg.num_components = 2;
  EXPECT_EQ(cfg.Validate().code(), absl::StatusCode::kInvalidArgument);
  cfg.num_components = 1;
  cfg.family = CovarianceFamily::kDiag;
  EXPECT_FALSE(cfg.Validate().ok());
}

TEST(CentralizedTest, OneMessagePerPresentClassAndExactAccounting) {
  World w = MakeWorld(6, 5, 1, CovarianceFamily::kDiag, 60, 1);
  std::vector<FeatureDataset> clients =
      *Partition(w.train, {DirichletScheme{0.2}, 4, 3});
  RunConfig cfg = BaseConfig(RunMode::kCentralized);
  PipelineTrace trace;
  ASSERT_OK_AND_ASSIGN(ExperimentReport r,
                       RunCentralized(clients, w.test, cfg, &trace));
  int64_t present = 0;
  std::set<int> covered;
  for (const FeatureDataset& c : clients) {
    std::vector<int64_t> counts = c.ClassCounts();
    for (int k = 0; k < 6; ++k) {
      if (counts[k] > 0) {
        ++present;
        covered.insert(k);
      }
    }
  }
  EXPECT_EQ(static_cast<int64_t>(trace.transmitted.size()), present);
  CommReport again = Account(trace.transmitted);
  EXPECT_EQ(r.comm.total_bytes, again.total_bytes);
  EXPECT_EQ(r.comm.total_scalars, again.total_scalars);
  EXPECT_EQ(r.transmitted_bytes, again.total_bytes);

  std::set<int> synth_classes;
  int64_t synth_rows = 0;
  for (const auto& [key, rows] : trace.synthetic) {
    synth_classes.insert(key.second);
    synth_rows += rows.rows();
    EXPECT_EQ(rows.rows(), clients[key.first].ClassCounts()[key.second]);
  }
  EXPECT_EQ(synth_classes, covered);
  EXPECT_EQ(synth_rows, r.synthetic_samples);
  EXPECT_GE(r.accuracy, 0.0);
  EXPECT_LE(r.accuracy, 1.0);
  EXPECT_EQ(r.client_accuracies.size(), 4u);
}

TEST(CentralizedTest, DecodedParametersAreQuantized) {
  World w = MakeWorld(3, 4, 1, CovarianceFamily::kFull, 80, 2);
  RunConfig cfg = BaseConfig(RunMode::kCentralized);
  cfg.family = CovarianceFamily::kFull;
  PipelineTrace trace;
  ASSERT_OK(RunCentralized({w.train}, w.test, cfg, &trace).status());
  for (const GmmMessage& m : trace.transmitted) {
    for (int j = 0; j < m.params.dim(); ++j) {
      const double v = m.params.means(0, j);
      EXPECT_EQ(v, static_cast<double>(Eigen::half(static_cast<float>(v))));
    }
  }
}

TEST(CentralizedTest, SingleClientCloseToOracle) {
  World w = MakeWorld(5, 8, 2, CovarianceFamily::kDiag, 300, 3);
  RunConfig cfg = BaseConfig(RunMode::kCentralized);
  cfg.num_components = 2;
  ASSERT_OK_AND_ASSIGN(ExperimentReport fed, RunCentralized({w.train}, w.test, cfg));
  cfg.mode = RunMode::kOracleCentralized;
  ASSERT_OK_AND_ASSIGN(ExperimentReport oracle, RunOracle({w.train}, w.test, cfg));
  EXPECT_GE(fed.accuracy, oracle.accuracy - 0.02);
}

TEST(CentralizedTest, EmptyClientWarnsAndAllEmptyFails) {
  World w = MakeWorld(3, 3, 1, CovarianceFamily::kDiag, 30, 4);
  FeatureDataset empty = w.train.Subset({});
  RunConfig cfg = BaseConfig(RunMode::kCentralized);
  ASSERT_OK_AND_ASSIGN(ExperimentReport r,
                       RunCentralized({w.train, empty}, w.test, cfg));
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_FALSE(RunCentralized({empty, empty}, w.test, cfg).ok());
  EXPECT_FALSE(RunCentralized({}, w.test, cfg).ok());
}

TEST(CentralizedDpTest, RunsOnNormalizedData) {
  World w = MakeWorld(3, 4, 1, CovarianceFamily::kFull, 200, 5);
  RunConfig cfg = BaseConfig(RunMode::kCentralizedDp);
  cfg.family = CovarianceFamily::kFull;
  cfg.dp.epsilon = 50;
  PipelineTrace trace;
  ASSERT_OK_AND_ASSIGN(ExperimentReport r,
                       RunExperiment(Iid(w.train, 2, 1), w.test, cfg, &trace));
  EXPECT_EQ(trace.transmitted.size(), 6u);
  ASSERT_EQ(r.fits.size(), 6u);
  for (const ClassFitRecord& f : r.fits) {
    ASSERT_TRUE(f.dp.has_value());
    EXPECT_GT(f.dp->sigma, 0.0);
  }
  EXPECT_GT(r.accuracy, 0.5);
}

TEST(ChainTest, EmptySecondClientReproducesFirstMixture) {
  World w = MakeWorld(2, 3, 1, CovarianceFamily::kFull, 2000, 6);
  FeatureDataset empty = w.train.Subset({});
  RunConfig cfg = BaseConfig(RunMode::kDecentralizedChain);
  cfg.family = CovarianceFamily::kFull;
  PipelineTrace trace;
  ASSERT_OK(RunDecentralizedChain({w.train, empty}, w.test, cfg, &trace).status());
  ASSERT_EQ(trace.transmitted.size(), 2u);
  ASSERT_EQ(trace.final_models.size(), 2u);
  for (int c = 0; c < 2; ++c) {
    Matrix held_out = *Sample(trace.transmitted[c].params, 20000, 99 + c);
    const double first = *AvgLogLikelihood(trace.transmitted[c].params, held_out);
    const double second = *AvgLogLikelihood(trace.final_models[c].params, held_out);
    EXPECT_LE(std::abs(first - second), 0.1);
  }
}

TEST(ChainTest, ReportsEveryClientAndRejectsShortChain) {
  World w = MakeWorld(4, 4, 1, CovarianceFamily::kDiag, 100, 7);
  std::vector<FeatureDataset> clients = Iid(w.train, 3, 2);
  RunConfig cfg = BaseConfig(RunMode::kDecentralizedChain);
  PipelineTrace trace;
  ASSERT_OK_AND_ASSIGN(ExperimentReport r,
                       RunDecentralizedChain(clients, w.test, cfg, &trace));
  ASSERT_EQ(r.client_accuracies.size(), 3u);
  EXPECT_EQ(r.client_accuracy_basis, "test");
  EXPECT_EQ(r.accuracy, r.client_accuracies.back().accuracy);
  // Forwarded sample counts accumulate along the chain.
  for (const GmmMessage& m : trace.transmitted) {
    if (m.client_id != 1) continue;
    int64_t expected = 0;
    for (int i = 0; i < 2; ++i) expected += clients[i].ClassCounts()[m.class_id];
    EXPECT_EQ(m.sample_count, expected);
  }
  EXPECT_FALSE(RunDecentralizedChain({clients[0]}, w.test, cfg).ok());
}

TEST(BaselineTest, EnsembleAndAverage) {
  World w = MakeWorld(4, 4, 1, CovarianceFamily::kDiag, 100, 8);
  std::vector<FeatureDataset> clients =
      *Partition(w.train, {DisjointLabelScheme{}, 2, 0});
  RunConfig cfg = BaseConfig(RunMode::kEnsembleBaseline);
  PipelineTrace trace;
  ASSERT_OK_AND_ASSIGN(ExperimentReport e, RunBaseline(clients, w.test, cfg, &trace));
  EXPECT_EQ(trace.heads.size(), 2u);
  EXPECT_EQ(e.transmitted_bytes, 2 * 4 * (4 * 4 + 4));
  cfg.mode = RunMode::kAverageBaseline;
  ASSERT_OK_AND_ASSIGN(ExperimentReport a, RunBaseline(clients, w.test, cfg));
  EXPECT_GE(a.accuracy, 0.0);
  cfg.average_weighting = AverageWeighting::kSampleCount;
  EXPECT_OK(RunBaseline(clients, w.test, cfg).status());
}

TEST(OracleTest, BytesAreRawFeaturePayload) {
  World w = MakeWorld(3, 5, 1, CovarianceFamily::kDiag, 50, 9);
  RunConfig cfg = BaseConfig(RunMode::kOracleCentralized);
  ASSERT_OK_AND_ASSIGN(ExperimentReport r,
                       RunOracle(Iid(w.train, 3, 1), w.test, cfg));
  EXPECT_EQ(r.transmitted_bytes, 150 * (4 * 5 + 2));
  EXPECT_GT(r.accuracy, 0.8);
}

TEST(EvaluateTest, ComplementOfZeroOneLoss) {
  World w = MakeWorld(5, 3, 1, CovarianceFamily::kDiag, 10, 10);
  ClassifierHead h = ClassifierHead::Zeros(5, 3);
  h.weights.setRandom();
  ASSERT_OK_AND_ASSIGN(double acc, Evaluate(h, w.test));
  ASSERT_OK_AND_ASSIGN(double loss, ZeroOneLoss(h, w.test));
  EXPECT_DOUBLE_EQ(acc, 1.0 - loss);
}

TEST(EvaluateTest, RandomLabelsGiveChanceAccuracy) {
  const int c = 10, n = 5000;
  FeatureDataset ds;
  ds.num_classes = c;
  ds.features = Matrix::Zero(n, 2);
  Rng rng(11);
  std::uniform_int_distribution<int> u(0, c - 1);
  for (int i = 0; i < n; ++i) {
    ds.labels.push_back(i % c);
    ds.features(i, 0) = u(rng);
  }
  // Head predicts the class encoded in feature 0, independent of the label.
  ClassifierHead h = ClassifierHead::Zeros(c, 2);
  for (int k = 0; k < c; ++k) {
    h.weights(k, 0) = 2.0 * k;
    h.bias(k) = -static_cast<double>(k) * k;
  }
  ASSERT_OK_AND_ASSIGN(double acc, Evaluate(h, ds));
  const double sd = std::sqrt(0.1 * 0.9 / n);
  EXPECT_NEAR(acc, 0.1, 3 * sd);
}

TEST(ReproducibilityTest, ThreadCountDoesNotChangeReport) {
  World w = MakeWorld(4, 4, 2, CovarianceFamily::kDiag, 80, 12);
  std::vector<FeatureDataset> clients = Iid(w.train, 3, 5);
  RunConfig cfg = BaseConfig(RunMode::kCentralized);
  cfg.num_components = 2;
  cfg.compute_bounds = true;
  std::string first;
  for (int threads : {1, 3, 1}) {
    cfg.threads = threads;
    ASSERT_OK_AND_ASSIGN(ExperimentReport r, RunExperiment(clients, w.test, cfg));
    std::string json = DumpJson(ReportToJson(r));
    if (first.empty()) first = json;
    EXPECT_EQ(json, first);
  }
}

}  // namespace
}  // namespace pft
