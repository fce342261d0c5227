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

#include "pft/report.h"

namespace pft {

using nlohmann::ordered_json;

namespace {

const char* AverageWeightingName(AverageWeighting w) {
  return w == AverageWeighting::kSampleCount ? "samples" : "uniform";
}

ordered_json CommToJson(const CommReport& comm) {
  ordered_json clients = ordered_json::array();
  for (const ClientComm& c : comm.clients) {
    clients.push_back({{"client", c.client_id},
                       {"messages", c.messages},
                       {"params", c.scalars},
                       {"bytes", c.bytes}});
  }
  return {{"total_messages", comm.total_messages},
          {"total_params", comm.total_scalars},
          {"total_bytes", comm.total_bytes},
          {"clients", clients}};
}

}  // namespace

ordered_json RunConfigToJson(const RunConfig& cfg) {
  ordered_json j;
  j["mode"] = RunModeName(cfg.mode);
  j["components"] = cfg.num_components;
  j["family"] = CovarianceFamilyName(cfg.family);
  j["sample_multiplier"] = cfg.sample_multiplier;
  j["normalize"] = cfg.normalize;
  j["compute_bounds"] = cfg.compute_bounds;
  j["em"] = {{"max_iters", cfg.em.max_iters},
             {"tol", cfg.em.tol},
             {"reg_covar", cfg.em.reg_covar},
             {"n_init", cfg.em.n_init}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"step_size", cfg.train.step_size},
                {"weight_decay", cfg.train.weight_decay},
                {"momentum", cfg.train.momentum}};
  if (cfg.mode == RunMode::kCentralizedDp) {
    ordered_json dp;
    dp["epsilon"] = cfg.dp.epsilon;
    if (cfg.dp_delta_per_class) {
      dp["delta"] = "per_class";
    } else {
      dp["delta"] = cfg.dp.delta;
    }
    dp["constant"] =
        cfg.dp.constant == NoiseConstant::kStated ? "stated" : "derived";
    j["dp"] = dp;
  }
  if (cfg.mode == RunMode::kAverageBaseline) {
    j["average_weighting"] = AverageWeightingName(cfg.average_weighting);
  }
  return j;
}

ordered_json BoundReportToJson(const BoundReport& b) {
  ordered_json classes = ordered_json::array();
  for (const ClassBound& c : b.classes) {
    classes.push_back({{"class", c.class_id},
                       {"real_count", c.real_count},
                       {"synthetic_count", c.synthetic_count},
                       {"synthetic_loss", c.synthetic_loss},
                       {"self_entropy", c.self_entropy},
                       {"log_likelihood", c.log_likelihood},
                       {"kl_surrogate", c.kl_surrogate},
                       {"weight", c.weight},
                       {"term", c.term},
                       {"term_clamped", c.term_clamped}});
  }
  ordered_json excluded = ordered_json::array();
  for (const auto& [c, why] : b.excluded) {
    excluded.push_back({{"class", c}, {"reason", why}});
  }
  return {{"bound", b.bound},
          {"bound_clamped", b.bound_clamped},
          {"actual_loss", b.actual_loss},
          {"holds", b.holds},
          {"classes", classes},
          {"excluded", excluded}};
}

ordered_json ReportToJson(const ExperimentReport& report) {
  ordered_json j;
  j["format"] = "pft-report/1";
  j["mode"] = RunModeName(report.config.mode);
  j["family"] = CovarianceFamilyName(report.config.family);
  j["components"] = report.config.num_components;
  j["epsilon"] = report.config.mode == RunMode::kCentralizedDp
                     ? ordered_json(report.config.dp.epsilon)
                     : ordered_json(nullptr);
  j["accuracy"] = report.accuracy;
  j["transmitted_bytes"] = report.transmitted_bytes;
  j["client_accuracy_basis"] = report.client_accuracy_basis;
  ordered_json clients = ordered_json::array();
  for (const ClientAccuracy& c : report.client_accuracies) {
    clients.push_back(
        {{"client", c.client}, {"samples", c.samples}, {"accuracy", c.accuracy}});
  }
  j["client_accuracies"] = clients;
  j["comm"] = CommToJson(report.comm);
  j["synthetic_samples"] = report.synthetic_samples;

  ordered_json fits = ordered_json::array();
  for (const ClassFitRecord& f : report.fits) {
    ordered_json r;
    r["client"] = f.client;
    r["class"] = f.class_id;
    r["samples"] = f.samples;
    r["components"] = f.components;
    if (f.fit) {
      r["avg_log_likelihood"] = f.fit->final_avg_log_likelihood;
      r["iterations"] = f.fit->iterations;
      r["converged"] = f.fit->converged;
    }
    if (f.dp) {
      r["sigma"] = f.dp->sigma;
      r["clipped_eigenvalues"] = f.dp->clipped_eigenvalues;
    }
    fits.push_back(r);
  }
  j["fits"] = fits;

  if (!report.bounds.empty()) {
    ordered_json bounds = ordered_json::array();
    for (const auto& [client, b] : report.bounds) {
      ordered_json entry = BoundReportToJson(b);
      entry["client"] = client;
      bounds.push_back(entry);
    }
    j["bounds"] = bounds;
  }
  j["warnings"] = report.warnings;
  j["config"] = RunConfigToJson(report.config);
  j["seeds"] = {{"master", report.config.master_seed}};
  return j;
}

std::string DumpJson(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace pft
