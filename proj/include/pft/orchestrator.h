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

#ifndef PFT_ORCHESTRATOR_H_
#define PFT_ORCHESTRATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "pft/bounds.h"
#include "pft/classifier.h"
#include "pft/dp.h"
#include "pft/features.h"
#include "pft/gmm.h"
#include "pft/protocol.h"

namespace pft {

enum class RunMode {
  kCentralized,
  kCentralizedDp,
  kDecentralizedChain,
  kEnsembleBaseline,
  kAverageBaseline,
  kOracleCentralized,
};

std::string RunModeName(RunMode mode);
absl::StatusOr<RunMode> ParseRunMode(const std::string& s);

enum class AverageWeighting { kUniform, kSampleCount };

struct RunConfig {
  RunMode mode = RunMode::kCentralized;
  int num_components = 1;
  CovarianceFamily family = CovarianceFamily::kDiag;
  EmConfig em;
  // Only read in kCentralizedDp. When `dp_delta_per_class` is set, delta is
  // 1 / |F^{i,c}| for every class release and `dp.delta` is ignored.
  DpConfig dp;
  bool dp_delta_per_class = true;
  TrainConfig train;
  uint64_t master_seed = 0;
  // Synthetic rows drawn per message = multiplier * sample_count.
  int sample_multiplier = 1;
  // Clip features (train and test) into the unit ball. Always on for DP.
  bool normalize = false;
  // Evaluate the local accuracy guarantee per client (centralized only).
  bool compute_bounds = false;
  AverageWeighting average_weighting = AverageWeighting::kUniform;
  // Worker threads for per-(client, class) tasks; never affects results.
  int threads = 1;

  // Seeds in `em`, `dp` and `train` are replaced by per-task seeds derived
  // from `master_seed`.
  absl::Status Validate() const;
};

struct ClassFitRecord {
  int client = 0;
  int class_id = 0;
  int64_t samples = 0;
  int components = 0;
  // EM statistics (non-private modes).
  std::optional<FitStats> fit;
  // Release statistics (DP mode).
  std::optional<DpReleaseStats> dp;
};

struct ClientAccuracy {
  int client = 0;
  int64_t samples = 0;
  double accuracy = 0.0;
};

struct ExperimentReport {
  RunConfig config;
  // Accuracy on the test set of the global head (the last client's head in
  // chain mode, the ensemble or averaged head for the baselines).
  double accuracy = 0.0;
  // "local_data": the global head on each client's own rows.
  // "test": each client's own head on the test set.
  std::string client_accuracy_basis;
  std::vector<ClientAccuracy> client_accuracies;
  CommReport comm;
  // Bytes sent over the network: PFTG messages for the GMM modes, 32-bit
  // heads for the baselines, FPFT1 payload for the oracle.
  int64_t transmitted_bytes = 0;
  std::vector<ClassFitRecord> fits;
  int64_t synthetic_samples = 0;
  std::map<int, BoundReport> bounds;  // by client
  std::vector<std::string> warnings;
};

// Artifacts behind a report, for tests and tooling.
struct PipelineTrace {
  // Decoded messages in send order.
  std::vector<GmmMessage> transmitted;
  // Chain mode: the last client's refitted mixtures (never transmitted).
  std::vector<GmmMessage> final_models;
  // The global head, or one head per client in chain/baseline modes
  // (empty clients get an all-zero head).
  std::vector<ClassifierHead> heads;
  // Server-side synthetic rows keyed by (client, class).
  std::map<std::pair<int, int>, Matrix> synthetic;
};

// Dispatches on cfg.mode.
absl::StatusOr<ExperimentReport> RunExperiment(
    const std::vector<FeatureDataset>& clients, const FeatureDataset& test,
    const RunConfig& cfg, PipelineTrace* trace = nullptr);

// One-shot parametric transfer: every client fits (or privately releases) one mixture per
// present class, the messages pass through the PFTG codec, and the server
// trains a head on rows sampled from the decoded mixtures.
absl::StatusOr<ExperimentReport> RunCentralized(
    const std::vector<FeatureDataset>& clients, const FeatureDataset& test,
    const RunConfig& cfg, PipelineTrace* trace = nullptr);

// Linear topology: client i refits on its rows plus rows sampled from client
// i-1's mixtures, trains its own head on that union and forwards the refit.
absl::StatusOr<ExperimentReport> RunDecentralizedChain(
    const std::vector<FeatureDataset>& clients, const FeatureDataset& test,
    const RunConfig& cfg, PipelineTrace* trace = nullptr);

// Heads trained on each client's real rows, combined by max-probability
// ensemble or parameter averaging.
absl::StatusOr<ExperimentReport> RunBaseline(
    const std::vector<FeatureDataset>& clients, const FeatureDataset& test,
    const RunConfig& cfg, PipelineTrace* trace = nullptr);

// Head trained on the pooled real rows of all clients.
absl::StatusOr<ExperimentReport> RunOracle(
    const std::vector<FeatureDataset>& clients, const FeatureDataset& test,
    const RunConfig& cfg, PipelineTrace* trace = nullptr);

// 1 - ZeroOneLoss.
absl::StatusOr<double> Evaluate(const ClassifierHead& head,
                                const FeatureDataset& test);

}  // namespace pft

#endif  // PFT_ORCHESTRATOR_H_
