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

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "pft/random.h"

namespace pft {
namespace {

// Regularizer added to privately released covariances before sampling.
constexpr double kDpSamplingRegularizer = 1e-6;

// Runs fn(0..count-1) on up to `threads` workers. Every task writes only its
// own slot, so results do not depend on scheduling; the first failing index
// determines the returned error.
absl::Status ParallelFor(int64_t count, int threads,
                         const std::function<absl::Status(int64_t)>& fn) {
  std::vector<absl::Status> status(count);
  const int workers =
      static_cast<int>(std::max<int64_t>(1, std::min<int64_t>(threads, count)));
  if (workers <= 1) {
    for (int64_t i = 0; i < count; ++i) status[i] = fn(i);
  } else {
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int64_t i = next++; i < count; i = next++) status[i] = fn(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const absl::Status& s : status) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status CheckFederation(const std::vector<FeatureDataset>& clients,
                             const FeatureDataset& test) {
  if (clients.empty()) return absl::InvalidArgumentError("no clients");
  for (size_t i = 0; i < clients.size(); ++i) {
    if (absl::Status s = clients[i].Validate(); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("client ", i, ": ", s.message()));
    }
    if (clients[i].dim() != clients[0].dim() ||
        clients[i].num_classes != clients[0].num_classes) {
      return absl::InvalidArgumentError(
          absl::StrCat("client ", i, " disagrees on (d, C)"));
    }
  }
  if (absl::Status s = test.Validate(); !s.ok()) {
    return absl::InvalidArgumentError(absl::StrCat("test set: ", s.message()));
  }
  if (test.dim() != clients[0].dim() ||
      test.num_classes != clients[0].num_classes) {
    return absl::InvalidArgumentError("test set disagrees on (d, C)");
  }
  if (test.size() == 0) return absl::InvalidArgumentError("empty test set");
  return absl::OkStatus();
}

bool UsesNormalization(const RunConfig& cfg) {
  return cfg.normalize || cfg.mode == RunMode::kCentralizedDp;
}

std::vector<FeatureDataset> Prepare(const std::vector<FeatureDataset>& in,
                                    const RunConfig& cfg) {
  if (!UsesNormalization(cfg)) return in;
  std::vector<FeatureDataset> out;
  out.reserve(in.size());
  for (const auto& ds : in) out.push_back(NormalizeToUnitBall(ds));
  return out;
}

FeatureDataset Prepare(const FeatureDataset& in, const RunConfig& cfg) {
  return UsesNormalization(cfg) ? NormalizeToUnitBall(in) : in;
}

TrainConfig TrainFor(const RunConfig& cfg, uint64_t task) {
  TrainConfig t = cfg.train;
  t.seed = DeriveSeed(cfg.master_seed, SeedStream::kTrain, {task});
  return t;
}

EmConfig EmFor(const RunConfig& cfg, int client, int c) {
  EmConfig em = cfg.em;
  em.seed = DeriveSeed(cfg.master_seed, SeedStream::kFit,
                       {static_cast<uint64_t>(client),
                        static_cast<uint64_t>(c)});
  return em;
}

// Round trip through the wire format; the decoded copy is what the receiver
// works with.
absl::StatusOr<GmmMessage> Transmit(const GmmMessage& msg) {
  absl::StatusOr<std::vector<uint8_t>> bytes = Encode(msg);
  if (!bytes.ok()) {
    return absl::Status(bytes.status().code(),
                        absl::StrCat("client ", msg.client_id, " class ",
                                     msg.class_id, ": ",
                                     bytes.status().message()));
  }
  return Decode(*bytes);
}

// Client accuracies of one head on each client's own rows.
absl::StatusOr<std::vector<ClientAccuracy>> LocalAccuracies(
    const ClassifierHead& head, const std::vector<FeatureDataset>& clients) {
  std::vector<ClientAccuracy> out;
  for (size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].size() == 0) continue;
    absl::StatusOr<double> acc = Evaluate(head, clients[i]);
    if (!acc.ok()) return acc.status();
    out.push_back({static_cast<int>(i), clients[i].size(), *acc});
  }
  return out;
}

// Concatenates row blocks and their labels.
struct LabeledRows {
  Matrix x;
  std::vector<int> y;
};

LabeledRows Stack(const std::vector<const Matrix*>& blocks,
                  const std::vector<int>& labels, int d) {
  int64_t total = 0;
  for (const Matrix* b : blocks) total += b->rows();
  LabeledRows out;
  out.x.resize(total, d);
  out.y.reserve(total);
  int64_t row = 0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    out.x.middleRows(row, blocks[i]->rows()) = *blocks[i];
    out.y.insert(out.y.end(), blocks[i]->rows(), labels[i]);
    row += blocks[i]->rows();
  }
  return out;
}

}  // namespace

std::string RunModeName(RunMode mode) {
  switch (mode) {
    case RunMode::kCentralized:
      return "centralized";
    case RunMode::kCentralizedDp:
      return "centralized_dp";
    case RunMode::kDecentralizedChain:
      return "decentralized_chain";
    case RunMode::kEnsembleBaseline:
      return "ensemble_baseline";
    case RunMode::kAverageBaseline:
      return "average_baseline";
    case RunMode::kOracleCentralized:
      return "oracle_centralized";
  }
  return "unknown";
}

absl::StatusOr<RunMode> ParseRunMode(const std::string& s) {
  for (RunMode m :
       {RunMode::kCentralized, RunMode::kCentralizedDp,
        RunMode::kDecentralizedChain, RunMode::kEnsembleBaseline,
        RunMode::kAverageBaseline, RunMode::kOracleCentralized}) {
    if (RunModeName(m) == s) return m;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown run mode '", s, "'"));
}

absl::Status RunConfig::Validate() const {
  if (num_components < 1) {
    return absl::InvalidArgumentError("components must be >= 1");
  }
  if (mode == RunMode::kCentralizedDp) {
    if (num_components != 1 || family != CovarianceFamily::kFull) {
      return absl::InvalidArgumentError(
          "centralized_dp requires components = 1 and family = full");
    }
    DpConfig probe = dp;
    if (dp_delta_per_class) probe.delta = 0.5;
    if (absl::Status s = probe.Validate(); !s.ok()) return s;
  }
  if (sample_multiplier < 1) {
    return absl::InvalidArgumentError("sample_multiplier must be >= 1");
  }
  if (threads < 1) return absl::InvalidArgumentError("threads must be >= 1");
  if (absl::Status s = em.Validate(); !s.ok()) return s;
  return train.Validate();
}

absl::StatusOr<double> Evaluate(const ClassifierHead& head,
                                const FeatureDataset& test) {
  absl::StatusOr<double> loss = ZeroOneLoss(head, test);
  if (!loss.ok()) return loss.status();
  return 1.0 - *loss;
}

absl::StatusOr<ExperimentReport> RunExperiment(
    const std::vector<FeatureDataset>& clients, const FeatureDataset& test,
    const RunConfig& cfg, PipelineTrace* trace) {
  switch (cfg.mode) {
    case RunMode::kCentralized:
    case RunMode::kCentralizedDp:
      return RunCentralized(clients, test, cfg, trace);
    case RunMode::kDecentralizedChain:
      return RunDecentralizedChain(clients, test, cfg, trace);
    case RunMode::kEnsembleBaseline:
    case RunMode::kAverageBaseline:
      return RunBaseline(clients, test, cfg, trace);
    case RunMode::kOracleCentralized:
      return RunOracle(clients, test, cfg, trace);
  }
  return absl::InvalidArgumentError("unknown run mode");
}

absl::StatusOr<ExperimentReport> RunCentralized(
    const std::vector<FeatureDataset>& raw_clients,
    const FeatureDataset& raw_test, const RunConfig& cfg,
    PipelineTrace* trace) {
  if (cfg.mode != RunMode::kCentralized &&
      cfg.mode != RunMode::kCentralizedDp) {
    return absl::InvalidArgumentError("RunCentralized needs a centralized mode");
  }
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (absl::Status s = CheckFederation(raw_clients, raw_test); !s.ok()) {
    return s;
  }
  const bool private_mode = cfg.mode == RunMode::kCentralizedDp;
  const std::vector<FeatureDataset> clients = Prepare(raw_clients, cfg);
  const FeatureDataset test = Prepare(raw_test, cfg);
  const int d = test.dim();
  const int num_classes = test.num_classes;

  ExperimentReport report;
  report.config = cfg;
  report.client_accuracy_basis = "local_data";

  // One task per (client, present class).
  struct Task {
    int client;
    int class_id;
    Matrix rows;
    bool skipped = false;
    ClassFitRecord record;
    GmmMessage decoded;
    Matrix synthetic;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].size() == 0) {
      report.warnings.push_back(
          absl::StrCat("client ", i, " holds no samples; skipped"));
      continue;
    }
    const std::vector<int64_t> counts = clients[i].ClassCounts();
    for (int c = 0; c < num_classes; ++c) {
      if (counts[c] == 0) continue;
      Task t;
      t.client = static_cast<int>(i);
      t.class_id = c;
      t.rows = *ClassConditional(clients[i], c);
      tasks.push_back(std::move(t));
    }
  }
  if (tasks.empty()) {
    return absl::FailedPreconditionError("every client is empty");
  }

  // Client side: fit or privately release, then transmit.
  absl::Status fit_status = ParallelFor(
      static_cast<int64_t>(tasks.size()), cfg.threads,
      [&](int64_t idx) -> absl::Status {
        Task& t = tasks[idx];
        const int64_t n = t.rows.rows();
        GmmMessage msg;
        msg.client_id = static_cast<uint32_t>(t.client);
        msg.class_id = static_cast<uint16_t>(t.class_id);
        msg.sample_count = static_cast<uint32_t>(n);
        t.record.client = t.client;
        t.record.class_id = t.class_id;
        t.record.samples = n;
        if (private_mode) {
          if (n < 2) {
            t.skipped = true;
            return absl::OkStatus();
          }
          DpConfig dp = cfg.dp;
          if (cfg.dp_delta_per_class) dp.delta = 1.0 / static_cast<double>(n);
          dp.seed = DeriveSeed(cfg.master_seed, SeedStream::kPrivacy,
                               {static_cast<uint64_t>(t.client),
                                static_cast<uint64_t>(t.class_id)});
          absl::StatusOr<DpRelease> rel = DpReleaseGaussian(t.rows, dp);
          if (!rel.ok()) return rel.status();
          msg.params = std::move(rel->params);
          t.record.dp = rel->stats;
        } else {
          absl::StatusOr<GmmFit> fit =
              EmFit(t.rows, cfg.num_components, cfg.family,
                    EmFor(cfg, t.client, t.class_id));
          if (!fit.ok()) {
            return absl::Status(fit.status().code(),
                                absl::StrCat("client ", t.client, " class ",
                                             t.class_id, ": ",
                                             fit.status().message()));
          }
          msg.params = std::move(fit->params);
          t.record.fit = std::move(fit->stats);
        }
        t.record.components = msg.params.num_components();
        absl::StatusOr<GmmMessage> decoded = Transmit(msg);
        if (!decoded.ok()) return decoded.status();
        t.decoded = *std::move(decoded);
        return absl::OkStatus();
      });
  if (!fit_status.ok()) return fit_status;

  // Server side: sample |F^{i,c}| rows per received message.
  absl::Status sample_status = ParallelFor(
      static_cast<int64_t>(tasks.size()), cfg.threads,
      [&](int64_t idx) -> absl::Status {
        Task& t = tasks[idx];
        if (t.skipped) return absl::OkStatus();
        GmmParams params = t.decoded.params;
        if (private_mode) params.AddToDiagonal(kDpSamplingRegularizer);
        const int64_t count =
            static_cast<int64_t>(t.decoded.sample_count) * cfg.sample_multiplier;
        absl::StatusOr<Matrix> rows = Sample(
            params, count,
            DeriveSeed(cfg.master_seed, SeedStream::kServerSample,
                       {static_cast<uint64_t>(t.client),
                        static_cast<uint64_t>(t.class_id)}));
        if (!rows.ok()) return rows.status();
        t.synthetic = *std::move(rows);
        return absl::OkStatus();
      });
  if (!sample_status.ok()) return sample_status;

  std::vector<GmmMessage> transmitted;
  std::vector<const Matrix*> blocks;
  std::vector<int> block_labels;
  for (Task& t : tasks) {
    if (t.skipped) {
      report.warnings.push_back(
          absl::StrCat("client ", t.client, " class ", t.class_id,
                       ": fewer than 2 samples, skipped on the DP path"));
      continue;
    }
    report.fits.push_back(t.record);
    transmitted.push_back(t.decoded);
    blocks.push_back(&t.synthetic);
    block_labels.push_back(t.class_id);
  }
  if (blocks.empty()) {
    return absl::FailedPreconditionError("no class could be transmitted");
  }
  LabeledRows server = Stack(blocks, block_labels, d);
  report.synthetic_samples = server.x.rows();

  absl::StatusOr<TrainResult> trained =
      TrainHead(server.x, server.y, num_classes, TrainFor(cfg, 0));
  if (!trained.ok()) return trained.status();
  absl::StatusOr<double> acc = Evaluate(trained->head, test);
  if (!acc.ok()) return acc.status();
  report.accuracy = *acc;
  absl::StatusOr<std::vector<ClientAccuracy>> local =
      LocalAccuracies(trained->head, clients);
  if (!local.ok()) return local.status();
  report.client_accuracies = *std::move(local);
  report.comm = Account(transmitted);
  report.transmitted_bytes = report.comm.total_bytes;

  if (cfg.compute_bounds) {
    if (private_mode) {
      report.warnings.push_back(
          "bounds need EM log-likelihoods; not computed in DP mode");
    } else {
      for (size_t i = 0; i < clients.size(); ++i) {
        if (clients[i].size() == 0) continue;
        std::map<int, Matrix> synthetic;
        std::map<int, double> ll;
        for (const Task& t : tasks) {
          if (t.client != static_cast<int>(i)) continue;
          synthetic[t.class_id] = t.synthetic;
          ll[t.class_id] = t.record.fit->final_avg_log_likelihood;
        }
        BoundOptions opts;
        opts.seed = DeriveSeed(cfg.master_seed, SeedStream::kEntropy,
                               {static_cast<uint64_t>(i)});
        absl::StatusOr<BoundReport> b =
            VerifyBound(clients[i], synthetic, ll, trained->head, opts);
        if (!b.ok()) {
          report.warnings.push_back(
              absl::StrCat("client ", i, " bound: ", b.status().message()));
          continue;
        }
        for (const auto& [c, why] : b->excluded) {
          report.warnings.push_back(absl::StrCat(
              "client ", i, " class ", c, " excluded from bound: ", why));
        }
        report.bounds[static_cast<int>(i)] = *std::move(b);
      }
    }
  }

  if (trace != nullptr) {
    trace->transmitted = transmitted;
    trace->heads = {trained->head};
    for (Task& t : tasks) {
      if (!t.skipped) {
        trace->synthetic[{t.client, t.class_id}] = std::move(t.synthetic);
      }
    }
  }
  return report;
}

absl::StatusOr<ExperimentReport> RunDecentralizedChain(
    const std::vector<FeatureDataset>& raw_clients,
    const FeatureDataset& raw_test, const RunConfig& cfg,
    PipelineTrace* trace) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (raw_clients.size() < 2) {
    return absl::InvalidArgumentError("a chain needs at least 2 clients");
  }
  if (absl::Status s = CheckFederation(raw_clients, raw_test); !s.ok()) {
    return s;
  }
  const std::vector<FeatureDataset> clients = Prepare(raw_clients, cfg);
  const FeatureDataset test = Prepare(raw_test, cfg);
  const int d = test.dim();
  const int num_classes = test.num_classes;
  const int num_clients = static_cast<int>(clients.size());

  ExperimentReport report;
  report.config = cfg;
  report.client_accuracy_basis = "test";
  std::vector<GmmMessage> transmitted;
  std::vector<GmmMessage> received;  // from the previous client
  if (trace != nullptr) trace->heads.clear();

  for (int i = 0; i < num_clients; ++i) {
    std::map<int, const GmmMessage*> incoming;
    for (const GmmMessage& m : received) incoming[m.class_id] = &m;

    // Per class: local rows followed by rows sampled from the received model.
    std::vector<Matrix> unions(num_classes);
    std::vector<int64_t> mass(num_classes, 0);
    absl::Status status = ParallelFor(
        num_classes, cfg.threads, [&](int64_t c) -> absl::Status {
          absl::StatusOr<Matrix> local =
              ClassConditional(clients[i], static_cast<int>(c));
          if (!local.ok()) return local.status();
          auto it = incoming.find(static_cast<int>(c));
          if (it == incoming.end()) {
            unions[c] = *std::move(local);
            mass[c] = unions[c].rows();
            return absl::OkStatus();
          }
          const GmmMessage& msg = *it->second;
          absl::StatusOr<Matrix> synth = Sample(
              msg.params,
              static_cast<int64_t>(msg.sample_count) * cfg.sample_multiplier,
              DeriveSeed(cfg.master_seed, SeedStream::kChainSample,
                         {static_cast<uint64_t>(i),
                          static_cast<uint64_t>(c)}));
          if (!synth.ok()) return synth.status();
          unions[c].resize(local->rows() + synth->rows(), d);
          unions[c] << *local, *synth;
          mass[c] = local->rows() + msg.sample_count;
          return absl::OkStatus();
        });
    if (!status.ok()) return status;

    // Refit and transmit (the last client keeps its models).
    std::vector<std::optional<GmmMessage>> outgoing(num_classes);
    std::vector<ClassFitRecord> records(num_classes);
    status = ParallelFor(
        num_classes, cfg.threads, [&](int64_t c) -> absl::Status {
          if (unions[c].rows() == 0) return absl::OkStatus();
          absl::StatusOr<GmmFit> fit =
              EmFit(unions[c], cfg.num_components, cfg.family,
                    EmFor(cfg, i, static_cast<int>(c)));
          if (!fit.ok()) {
            return absl::Status(fit.status().code(),
                                absl::StrCat("client ", i, " class ", c, ": ",
                                             fit.status().message()));
          }
          GmmMessage msg;
          msg.client_id = static_cast<uint32_t>(i);
          msg.class_id = static_cast<uint16_t>(c);
          msg.sample_count = static_cast<uint32_t>(mass[c]);
          msg.params = std::move(fit->params);
          records[c] = {i, static_cast<int>(c), unions[c].rows(),
                        msg.params.num_components(), std::move(fit->stats),
                        std::nullopt};
          absl::StatusOr<GmmMessage> decoded = Transmit(msg);
          if (!decoded.ok()) return decoded.status();
          outgoing[c] = *std::move(decoded);
          return absl::OkStatus();
        });
    if (!status.ok()) return status;

    received.clear();
    for (int c = 0; c < num_classes; ++c) {
      if (!outgoing[c]) continue;
      report.fits.push_back(records[c]);
      if (i + 1 < num_clients) {
        transmitted.push_back(*outgoing[c]);
        received.push_back(*outgoing[c]);
      } else if (trace != nullptr) {
        trace->final_models.push_back(*outgoing[c]);
      }
    }

    // Local head on the union.
    std::vector<const Matrix*> blocks;
    std::vector<int> labels;
    for (int c = 0; c < num_classes; ++c) {
      if (unions[c].rows() == 0) continue;
      blocks.push_back(&unions[c]);
      labels.push_back(c);
    }
    if (blocks.empty()) {
      report.warnings.push_back(absl::StrCat(
          "client ", i, " has neither local nor received data; no head"));
      if (trace != nullptr) {
        trace->heads.push_back(ClassifierHead::Zeros(num_classes, d));
      }
      continue;
    }
    LabeledRows rows = Stack(blocks, labels, d);
    absl::StatusOr<TrainResult> trained = TrainHead(
        rows.x, rows.y, num_classes, TrainFor(cfg, static_cast<uint64_t>(i)));
    if (!trained.ok()) return trained.status();
    absl::StatusOr<double> acc = Evaluate(trained->head, test);
    if (!acc.ok()) return acc.status();
    report.client_accuracies.push_back({i, rows.x.rows(), *acc});
    if (i + 1 == num_clients) {
      report.accuracy = *acc;
      report.synthetic_samples = rows.x.rows() - clients[i].size();
    }
    if (trace != nullptr) trace->heads.push_back(trained->head);
  }

  report.comm = Account(transmitted);
  report.transmitted_bytes = report.comm.total_bytes;
  if (trace != nullptr) trace->transmitted = std::move(transmitted);
  return report;
}

absl::StatusOr<ExperimentReport> RunBaseline(
    const std::vector<FeatureDataset>& raw_clients,
    const FeatureDataset& raw_test, const RunConfig& cfg,
    PipelineTrace* trace) {
  if (cfg.mode != RunMode::kEnsembleBaseline &&
      cfg.mode != RunMode::kAverageBaseline) {
    return absl::InvalidArgumentError("RunBaseline needs a baseline mode");
  }
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (absl::Status s = CheckFederation(raw_clients, raw_test); !s.ok()) {
    return s;
  }
  const std::vector<FeatureDataset> clients = Prepare(raw_clients, cfg);
  const FeatureDataset test = Prepare(raw_test, cfg);
  const int num_classes = test.num_classes;

  ExperimentReport report;
  report.config = cfg;
  report.client_accuracy_basis = "test";

  std::vector<int> active;
  for (size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].size() == 0) {
      report.warnings.push_back(
          absl::StrCat("client ", i, " holds no samples; skipped"));
    } else {
      active.push_back(static_cast<int>(i));
    }
  }
  if (active.empty()) {
    return absl::FailedPreconditionError("every client is empty");
  }
  std::vector<ClassifierHead> heads(active.size());
  absl::Status status = ParallelFor(
      static_cast<int64_t>(active.size()), cfg.threads,
      [&](int64_t a) -> absl::Status {
        const FeatureDataset& ds = clients[active[a]];
        absl::StatusOr<TrainResult> r =
            TrainHead(ds.features, ds.labels, num_classes,
                      TrainFor(cfg, static_cast<uint64_t>(active[a])));
        if (!r.ok()) return r.status();
        heads[a] = std::move(r->head);
        return absl::OkStatus();
      });
  if (!status.ok()) return status;

  for (size_t a = 0; a < active.size(); ++a) {
    absl::StatusOr<double> acc = Evaluate(heads[a], test);
    if (!acc.ok()) return acc.status();
    report.client_accuracies.push_back(
        {active[a], clients[active[a]].size(), *acc});
  }

  if (cfg.mode == RunMode::kEnsembleBaseline) {
    absl::StatusOr<std::vector<int>> pred =
        EnsemblePredict(heads, test.features);
    if (!pred.ok()) return pred.status();
    int64_t right = 0;
    for (size_t j = 0; j < pred->size(); ++j) right += (*pred)[j] == test.labels[j];
    report.accuracy =
        static_cast<double>(right) / static_cast<double>(test.size());
  } else {
    std::vector<double> weights;
    for (int i : active) {
      weights.push_back(cfg.average_weighting == AverageWeighting::kSampleCount
                            ? static_cast<double>(clients[i].size())
                            : 1.0);
    }
    absl::StatusOr<ClassifierHead> avg = AverageHeads(heads, weights);
    if (!avg.ok()) return avg.status();
    absl::StatusOr<double> acc = Evaluate(*avg, test);
    if (!acc.ok()) return acc.status();
    report.accuracy = *acc;
  }
  // Each client ships one 32-bit head of C * d + C parameters.
  report.transmitted_bytes = static_cast<int64_t>(active.size()) * 4 *
                             (num_classes * test.dim() + num_classes);
  if (trace != nullptr) trace->heads = std::move(heads);
  return report;
}

absl::StatusOr<ExperimentReport> RunOracle(
    const std::vector<FeatureDataset>& raw_clients,
    const FeatureDataset& raw_test, const RunConfig& cfg,
    PipelineTrace* trace) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (absl::Status s = CheckFederation(raw_clients, raw_test); !s.ok()) {
    return s;
  }
  const std::vector<FeatureDataset> clients = Prepare(raw_clients, cfg);
  const FeatureDataset test = Prepare(raw_test, cfg);

  Matrix pooled;
  std::vector<int> labels;
  int64_t total = 0;
  for (const auto& c : clients) total += c.size();
  if (total == 0) return absl::FailedPreconditionError("every client is empty");
  pooled.resize(total, test.dim());
  int64_t row = 0;
  for (const auto& c : clients) {
    pooled.middleRows(row, c.size()) = c.features;
    labels.insert(labels.end(), c.labels.begin(), c.labels.end());
    row += c.size();
  }
  absl::StatusOr<TrainResult> trained =
      TrainHead(pooled, labels, test.num_classes, TrainFor(cfg, 0));
  if (!trained.ok()) return trained.status();

  ExperimentReport report;
  report.config = cfg;
  report.client_accuracy_basis = "local_data";
  absl::StatusOr<double> acc = Evaluate(trained->head, test);
  if (!acc.ok()) return acc.status();
  report.accuracy = *acc;
  absl::StatusOr<std::vector<ClientAccuracy>> local =
      LocalAccuracies(trained->head, clients);
  if (!local.ok()) return local.status();
  report.client_accuracies = *std::move(local);
  // Raw FPFT1 payload: 32-bit features plus 16-bit labels.
  report.transmitted_bytes = total * (4 * test.dim() + 2);
  if (trace != nullptr) trace->heads = {trained->head};
  return report;
}

}  // namespace pft
