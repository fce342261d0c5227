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

#include "pft/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json.hpp"
#include "pft/features.h"
#include "pft/orchestrator.h"
#include "pft/random.h"
#include "pft/report.h"

namespace pft {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// INI file with section.key lookups. Every key must be read by the time
// CheckAllConsumed() runs; leftovers are treated as typos.
class IniConfig {
 public:
  static absl::StatusOr<IniConfig> Load(const std::string& path) {
    IniConfig cfg;
    try {
      boost::property_tree::ini_parser::read_ini(path, cfg.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot parse config: ", e.what()));
    }
    cfg.dir_ = fs::path(path).parent_path();
    return cfg;
  }

  std::optional<std::string> Raw(const std::string& section,
                                 const std::string& key) {
    const std::string full = section + "." + key;
    auto v = tree_.get_optional<std::string>(
        boost::property_tree::ptree::path_type(full, '.'));
    consumed_.insert(full);
    if (!v) return std::nullopt;
    return std::string(absl::StripAsciiWhitespace(*v));
  }

  absl::StatusOr<std::string> String(const std::string& section,
                                     const std::string& key,
                                     std::optional<std::string> fallback) {
    if (auto v = Raw(section, key)) return *v;
    if (fallback) return *fallback;
    return absl::InvalidArgumentError(
        absl::StrCat("config is missing [", section, "] ", key));
  }

  template <typename T>
  absl::StatusOr<T> Number(const std::string& section, const std::string& key,
                           std::optional<T> fallback) {
    std::optional<std::string> v = Raw(section, key);
    if (!v) {
      if (fallback) return *fallback;
      return absl::InvalidArgumentError(
          absl::StrCat("config is missing [", section, "] ", key));
    }
    T out;
    bool ok;
    if constexpr (std::is_floating_point_v<T>) {
      ok = absl::SimpleAtod(*v, &out);
    } else {
      ok = absl::SimpleAtoi(*v, &out);
    }
    if (!ok) {
      return absl::InvalidArgumentError(absl::StrCat(
          "[", section, "] ", key, " = '", *v, "' is not a valid number"));
    }
    return out;
  }

  absl::StatusOr<bool> Bool(const std::string& section, const std::string& key,
                            bool fallback) {
    std::optional<std::string> v = Raw(section, key);
    if (!v) return fallback;
    bool out;
    if (!absl::SimpleAtob(*v, &out)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "[", section, "] ", key, " = '", *v, "' is not a boolean"));
    }
    return out;
  }

  // Paths are relative to the config file.
  std::string ResolvePath(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? p : (dir_ / path).string();
  }

  absl::Status CheckAllConsumed() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown top-level config key '", section, "'"));
      }
      for (const auto& [key, value] : body) {
        if (!consumed_.count(section + "." + key)) {
          return absl::InvalidArgumentError(
              absl::StrCat("unknown config key [", section, "] ", key));
        }
      }
    }
    return absl::OkStatus();
  }

 private:
  boost::property_tree::ptree tree_;
  fs::path dir_;
  std::set<std::string> consumed_;
};

#define PFT_ASSIGN_OR_RETURN_IMPL(tmp, lhs, expr) \
  auto tmp = (expr);                              \
  if (!tmp.ok()) return tmp.status();             \
  lhs = *std::move(tmp)
#define PFT_CONCAT_INNER(a, b) a##b
#define PFT_CONCAT(a, b) PFT_CONCAT_INNER(a, b)
#define PFT_ASSIGN_OR_RETURN(lhs, expr) \
  PFT_ASSIGN_OR_RETURN_IMPL(PFT_CONCAT(status_or_, __LINE__), lhs, expr)
#define PFT_RETURN_IF_ERROR(expr)          \
  do {                                     \
    if (absl::Status s_ = (expr); !s_.ok()) return s_; \
  } while (0)

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
};

absl::Status WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) return absl::UnavailableError(absl::StrCat("cannot write ", path.string()));
  f << text;
  if (!f) return absl::UnavailableError(absl::StrCat("write failed: ", path.string()));
  return absl::OkStatus();
}

absl::Status MakeOutputDir(const std::string& out) {
  if (out.empty()) return absl::InvalidArgumentError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    return absl::UnavailableError(
        absl::StrCat("cannot create output directory ", out));
  }
  return absl::OkStatus();
}

int ResolveThreads(const std::optional<int>& flag) {
  if (flag) return std::max(1, *flag);
  if (const char* env = std::getenv("PFT_THREADS")) {
    int n;
    if (absl::SimpleAtoi(env, &n) && n >= 1) return n;
  }
  return 1;
}

ordered_json GmmToJson(const GmmParams& g) {
  ordered_json j;
  j["family"] = CovarianceFamilyName(g.family);
  j["weights"] = std::vector<double>(g.weights.data(),
                                     g.weights.data() + g.weights.size());
  ordered_json means = ordered_json::array();
  ordered_json covs = ordered_json::array();
  for (int k = 0; k < g.num_components(); ++k) {
    std::vector<double> m(g.dim());
    for (int j2 = 0; j2 < g.dim(); ++j2) m[j2] = g.means(k, j2);
    means.push_back(m);
    switch (g.family) {
      case CovarianceFamily::kFull: {
        ordered_json rows = ordered_json::array();
        for (int r = 0; r < g.dim(); ++r) {
          std::vector<double> row(g.dim());
          for (int c = 0; c < g.dim(); ++c) row[c] = g.full_covariances[k](r, c);
          rows.push_back(row);
        }
        covs.push_back(rows);
        break;
      }
      case CovarianceFamily::kDiag: {
        std::vector<double> v(g.dim());
        for (int j2 = 0; j2 < g.dim(); ++j2) v[j2] = g.diag_covariances(k, j2);
        covs.push_back(v);
        break;
      }
      case CovarianceFamily::kSpherical:
        covs.push_back(g.spherical_covariances(k));
        break;
    }
  }
  j["means"] = means;
  j["covariances"] = covs;
  return j;
}

absl::Status GenSynth(const CommonFlags& flags, std::ostream& out) {
  PFT_ASSIGN_OR_RETURN(IniConfig ini, IniConfig::Load(flags.config));
  SynthMixtureOptions opts;
  PFT_ASSIGN_OR_RETURN(opts.num_classes, ini.Number<int>("synth", "classes", 10));
  PFT_ASSIGN_OR_RETURN(opts.dim, ini.Number<int>("synth", "dim", 16));
  PFT_ASSIGN_OR_RETURN(opts.components,
                       ini.Number<int>("synth", "components", 1));
  PFT_ASSIGN_OR_RETURN(std::string family,
                       ini.String("synth", "family", "diag"));
  PFT_ASSIGN_OR_RETURN(opts.family, ParseCovarianceFamily(family));
  PFT_ASSIGN_OR_RETURN(opts.class_separation,
                       ini.Number<double>("synth", "class_separation", 6.0));
  PFT_ASSIGN_OR_RETURN(opts.component_spread,
                       ini.Number<double>("synth", "component_spread", 3.0));
  PFT_ASSIGN_OR_RETURN(opts.noise_scale,
                       ini.Number<double>("synth", "noise_scale", 1.0));
  PFT_ASSIGN_OR_RETURN(opts.seed, ini.Number<uint64_t>("synth", "seed", 0));
  PFT_ASSIGN_OR_RETURN(int64_t train_n,
                       ini.Number<int64_t>("synth", "train_per_class", 200));
  PFT_ASSIGN_OR_RETURN(int64_t test_n,
                       ini.Number<int64_t>("synth", "test_per_class", 100));
  PFT_RETURN_IF_ERROR(ini.CheckAllConsumed());
  if (flags.seed) opts.seed = *flags.seed;
  if (train_n < 0 || test_n < 0) {
    return absl::InvalidArgumentError("per-class sample counts must be >= 0");
  }

  PFT_ASSIGN_OR_RETURN(std::vector<GmmParams> models, RandomClassModels(opts));
  SynthSpec train_spec{models, train_n, DeriveSeed(opts.seed, {0}), "train"};
  SynthSpec test_spec{models, test_n, DeriveSeed(opts.seed, {1}), "test"};
  PFT_ASSIGN_OR_RETURN(FeatureDataset train, SynthGenerate(train_spec));
  PFT_ASSIGN_OR_RETURN(FeatureDataset test, SynthGenerate(test_spec));

  PFT_RETURN_IF_ERROR(MakeOutputDir(flags.out));
  const fs::path dir(flags.out);
  PFT_RETURN_IF_ERROR(SaveFeatures(train, (dir / "train.fpft").string()));
  PFT_RETURN_IF_ERROR(SaveFeatures(test, (dir / "test.fpft").string()));

  ordered_json truth;
  truth["format"] = "pft-ground-truth/1";
  truth["classes"] = opts.num_classes;
  truth["dim"] = opts.dim;
  truth["components"] = opts.components;
  truth["family"] = CovarianceFamilyName(opts.family);
  truth["seed"] = opts.seed;
  truth["train_per_class"] = train_n;
  truth["test_per_class"] = test_n;
  ordered_json per_class = ordered_json::array();
  for (const GmmParams& g : models) per_class.push_back(GmmToJson(g));
  truth["models"] = per_class;
  PFT_RETURN_IF_ERROR(WriteText(dir / "ground_truth.json", DumpJson(truth)));
  out << "wrote " << (dir / "train.fpft").string() << ", "
      << (dir / "test.fpft").string() << ", "
      << (dir / "ground_truth.json").string() << "\n";
  return absl::OkStatus();
}

struct RunSetup {
  RunConfig cfg;
  std::string train_path;
  std::string test_path;
  PartitionSpec partition;
  std::string scheme_name;
};

absl::StatusOr<RunSetup> ParseRunConfig(const CommonFlags& flags) {
  PFT_ASSIGN_OR_RETURN(IniConfig ini, IniConfig::Load(flags.config));
  RunSetup setup;
  RunConfig& cfg = setup.cfg;

  PFT_ASSIGN_OR_RETURN(std::string train, ini.String("data", "train", {}));
  PFT_ASSIGN_OR_RETURN(std::string test, ini.String("data", "test", {}));
  setup.train_path = ini.ResolvePath(train);
  setup.test_path = ini.ResolvePath(test);

  PFT_ASSIGN_OR_RETURN(setup.scheme_name,
                       ini.String("partition", "scheme", "iid"));
  PFT_ASSIGN_OR_RETURN(setup.partition.num_clients,
                       ini.Number<int>("partition", "clients", 1));
  PFT_ASSIGN_OR_RETURN(setup.partition.seed,
                       ini.Number<uint64_t>("partition", "seed", 0));
  PFT_ASSIGN_OR_RETURN(double beta,
                       ini.Number<double>("partition", "beta", 0.1));
  if (setup.scheme_name == "dirichlet") {
    setup.partition.scheme = DirichletScheme{beta};
  } else if (setup.scheme_name == "disjoint_label") {
    setup.partition.scheme = DisjointLabelScheme{};
  } else if (setup.scheme_name != "iid") {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown partition scheme '", setup.scheme_name, "'"));
  }

  PFT_ASSIGN_OR_RETURN(std::string mode, ini.String("run", "mode", {}));
  PFT_ASSIGN_OR_RETURN(cfg.mode, ParseRunMode(mode));
  PFT_ASSIGN_OR_RETURN(cfg.num_components,
                       ini.Number<int>("run", "components", 1));
  PFT_ASSIGN_OR_RETURN(std::string family, ini.String("run", "family", "diag"));
  PFT_ASSIGN_OR_RETURN(cfg.family, ParseCovarianceFamily(family));
  PFT_ASSIGN_OR_RETURN(cfg.master_seed, ini.Number<uint64_t>("run", "seed", 0));
  PFT_ASSIGN_OR_RETURN(cfg.sample_multiplier,
                       ini.Number<int>("run", "sample_multiplier", 1));
  PFT_ASSIGN_OR_RETURN(cfg.normalize, ini.Bool("run", "normalize", false));
  PFT_ASSIGN_OR_RETURN(cfg.compute_bounds, ini.Bool("run", "bounds", false));
  PFT_ASSIGN_OR_RETURN(std::string weighting,
                       ini.String("run", "average_weighting", "uniform"));
  if (weighting == "uniform") {
    cfg.average_weighting = AverageWeighting::kUniform;
  } else if (weighting == "samples") {
    cfg.average_weighting = AverageWeighting::kSampleCount;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown average_weighting '", weighting, "'"));
  }

  PFT_ASSIGN_OR_RETURN(cfg.em.max_iters,
                       ini.Number<int>("em", "max_iters", cfg.em.max_iters));
  PFT_ASSIGN_OR_RETURN(cfg.em.tol, ini.Number<double>("em", "tol", cfg.em.tol));
  PFT_ASSIGN_OR_RETURN(cfg.em.reg_covar,
                       ini.Number<double>("em", "reg_covar", cfg.em.reg_covar));
  PFT_ASSIGN_OR_RETURN(cfg.em.n_init,
                       ini.Number<int>("em", "n_init", cfg.em.n_init));

  PFT_ASSIGN_OR_RETURN(cfg.train.epochs,
                       ini.Number<int>("train", "epochs", cfg.train.epochs));
  PFT_ASSIGN_OR_RETURN(
      cfg.train.batch_size,
      ini.Number<int>("train", "batch_size", cfg.train.batch_size));
  PFT_ASSIGN_OR_RETURN(
      cfg.train.step_size,
      ini.Number<double>("train", "step_size", cfg.train.step_size));
  PFT_ASSIGN_OR_RETURN(
      cfg.train.weight_decay,
      ini.Number<double>("train", "weight_decay", cfg.train.weight_decay));
  PFT_ASSIGN_OR_RETURN(
      cfg.train.momentum,
      ini.Number<double>("train", "momentum", cfg.train.momentum));

  PFT_ASSIGN_OR_RETURN(cfg.dp.epsilon,
                       ini.Number<double>("dp", "epsilon", cfg.dp.epsilon));
  PFT_ASSIGN_OR_RETURN(std::string delta,
                       ini.String("dp", "delta", "per_class"));
  if (delta == "per_class") {
    cfg.dp_delta_per_class = true;
  } else {
    cfg.dp_delta_per_class = false;
    if (!absl::SimpleAtod(delta, &cfg.dp.delta)) {
      return absl::InvalidArgumentError(
          absl::StrCat("[dp] delta = '", delta, "' is not a number"));
    }
  }
  PFT_ASSIGN_OR_RETURN(std::string constant,
                       ini.String("dp", "constant", "stated"));
  if (constant == "stated") {
    cfg.dp.constant = NoiseConstant::kStated;
  } else if (constant == "derived") {
    cfg.dp.constant = NoiseConstant::kDerived;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown [dp] constant '", constant, "'"));
  }

  PFT_RETURN_IF_ERROR(ini.CheckAllConsumed());
  if (flags.seed) cfg.master_seed = *flags.seed;
  cfg.threads = ResolveThreads(flags.threads);
  PFT_RETURN_IF_ERROR(cfg.Validate());
  if (setup.partition.num_clients < 1) {
    return absl::InvalidArgumentError("[partition] clients must be >= 1");
  }
  if (const auto* d = std::get_if<DirichletScheme>(&setup.partition.scheme);
      d != nullptr && !(d->beta > 0)) {
    return absl::InvalidArgumentError("[partition] beta must be > 0");
  }
  return setup;
}

struct LoadedRun {
  std::vector<FeatureDataset> clients;
  FeatureDataset test;
};

absl::StatusOr<LoadedRun> LoadRunData(RunSetup& setup) {
  LoadedRun data;
  PFT_ASSIGN_OR_RETURN(FeatureDataset train, LoadFeatures(setup.train_path));
  PFT_ASSIGN_OR_RETURN(data.test, LoadFeatures(setup.test_path));
  if (setup.scheme_name == "iid") {
    setup.partition.scheme = ExplicitScheme{IidAssignment(
        train.size(), setup.partition.num_clients, setup.partition.seed)};
  }
  PFT_ASSIGN_OR_RETURN(data.clients, Partition(train, setup.partition));
  return data;
}

ordered_json PartitionToJson(const RunSetup& setup) {
  ordered_json j;
  j["scheme"] = setup.scheme_name;
  j["clients"] = setup.partition.num_clients;
  if (const auto* d = std::get_if<DirichletScheme>(&setup.partition.scheme)) {
    j["beta"] = d->beta;
  }
  j["seed"] = setup.partition.seed;
  j["train"] = fs::path(setup.train_path).filename().string();
  j["test"] = fs::path(setup.test_path).filename().string();
  return j;
}

absl::Status Run(const CommonFlags& flags, std::ostream& out) {
  PFT_ASSIGN_OR_RETURN(RunSetup setup, ParseRunConfig(flags));
  PFT_RETURN_IF_ERROR(MakeOutputDir(flags.out));
  PFT_ASSIGN_OR_RETURN(LoadedRun data, LoadRunData(setup));
  PFT_ASSIGN_OR_RETURN(ExperimentReport report,
                       RunExperiment(data.clients, data.test, setup.cfg));
  ordered_json j = ReportToJson(report);
  j["partition"] = PartitionToJson(setup);
  const fs::path path = fs::path(flags.out) / "report.json";
  PFT_RETURN_IF_ERROR(WriteText(path, DumpJson(j)));
  out << absl::StrFormat("%s: accuracy %.4f, %d bytes -> %s\n",
                         RunModeName(setup.cfg.mode), report.accuracy,
                         report.transmitted_bytes, path.string());
  return absl::OkStatus();
}

absl::Status Bound(const CommonFlags& flags, std::ostream& out) {
  PFT_ASSIGN_OR_RETURN(RunSetup setup, ParseRunConfig(flags));
  if (setup.cfg.mode != RunMode::kCentralized) {
    return absl::InvalidArgumentError(
        "bound evaluation needs [run] mode = centralized");
  }
  setup.cfg.compute_bounds = true;
  PFT_RETURN_IF_ERROR(MakeOutputDir(flags.out));
  PFT_ASSIGN_OR_RETURN(LoadedRun data, LoadRunData(setup));
  PFT_ASSIGN_OR_RETURN(ExperimentReport report,
                       RunExperiment(data.clients, data.test, setup.cfg));
  ordered_json j;
  j["format"] = "pft-bounds/1";
  j["accuracy"] = report.accuracy;
  ordered_json clients = ordered_json::array();
  for (const auto& [client, b] : report.bounds) {
    ordered_json entry;
    entry["client"] = client;
    const ordered_json fields = BoundReportToJson(b);
    for (const auto& [k, v] : fields.items()) entry[k] = v;
    clients.push_back(entry);
    out << absl::StrFormat("client %d: actual 0-1 loss %.4f <= bound %.4f: %s\n",
                           client, b.actual_loss, b.bound,
                           b.holds ? "holds" : "VIOLATED");
  }
  j["clients"] = clients;
  j["warnings"] = report.warnings;
  j["config"] = RunConfigToJson(setup.cfg);
  j["partition"] = PartitionToJson(setup);
  j["seeds"] = {{"master", setup.cfg.master_seed}};
  return WriteText(fs::path(flags.out) / "bounds.json", DumpJson(j));
}

struct ReportRow {
  std::string file;
  std::string mode;
  std::string family;
  int64_t components = 0;
  std::string epsilon;
  double accuracy = 0.0;
  int64_t bytes = 0;
};

absl::StatusOr<ReportRow> ReadReportRow(const std::string& path) {
  std::ifstream f(path);
  if (!f) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  nlohmann::json j = nlohmann::json::parse(f, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": not valid JSON"));
  }
  ReportRow row;
  row.file = path;
  try {
    row.mode = j.at("mode").get<std::string>();
    row.family = j.at("family").get<std::string>();
    row.components = j.at("components").get<int64_t>();
    if (!j.at("epsilon").is_null()) {
      row.epsilon = absl::StrFormat("%g", j.at("epsilon").get<double>());
    }
    row.accuracy = j.at("accuracy").get<double>();
    row.bytes = j.at("transmitted_bytes").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": malformed report (", e.what(), ")"));
  }
  return row;
}

absl::Status Report(const std::vector<std::string>& files,
                    const std::string& csv_path, std::ostream& out) {
  if (files.empty()) return absl::InvalidArgumentError("no report files given");
  std::vector<ReportRow> rows;
  for (const std::string& f : files) {
    PFT_ASSIGN_OR_RETURN(ReportRow row, ReadReportRow(f));
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     return a.bytes < b.bytes;
                   });
  std::ostringstream csv;
  csv << "report,mode,family,components,epsilon,accuracy,bytes\n";
  out << absl::StrFormat("%-22s %-10s %4s %8s %9s %12s\n", "mode", "family",
                         "K", "epsilon", "accuracy", "bytes");
  for (const ReportRow& r : rows) {
    csv << absl::StrFormat("%s,%s,%s,%d,%s,%.6f,%d\n", r.file, r.mode,
                           r.family, r.components, r.epsilon, r.accuracy,
                           r.bytes);
    out << absl::StrFormat("%-22s %-10s %4d %8s %9.4f %12d\n", r.mode, r.family,
                           r.components, r.epsilon.empty() ? "-" : r.epsilon,
                           r.accuracy, r.bytes);
  }
  if (csv_path.empty()) {
    out << "\n" << csv.str();
    return absl::OkStatus();
  }
  return WriteText(csv_path, csv.str());
}

std::string StatusCodeName(absl::StatusCode code) {
  return absl::StatusCodeToString(code);
}

void ReportError(const absl::Status& status, const std::string& out_dir,
                 std::ostream& err) {
  ordered_json j;
  j["error"] = {{"code", StatusCodeName(status.code())},
                {"message", std::string(status.message())}};
  const std::string text = DumpJson(j);
  err << text;
  std::error_code ec;
  if (!out_dir.empty() && (fs::create_directories(out_dir, ec) || fs::is_directory(out_dir))) {
    (void)WriteText(fs::path(out_dir) / "error.json", text);
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"One-shot federated learning by parametric feature transfer"};
  app.require_subcommand(1);

  CommonFlags synth_flags, run_flags, bound_flags;
  auto add_common = [](CLI::App* sub, CommonFlags& f, bool threads) {
    sub->add_option("--config", f.config, "Config file (INI)")->required();
    sub->add_option("--out", f.out, "Output directory")->required();
    sub->add_option("--seed", f.seed, "Override the config seed");
    if (threads) {
      sub->add_option("--threads", f.threads,
                      "Worker threads (default: $PFT_THREADS or 1)");
    }
  };
  CLI::App* gen = app.add_subcommand("gen-synth", "Generate synthetic features");
  add_common(gen, synth_flags, false);
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, run_flags, true);
  CLI::App* bound = app.add_subcommand("bound", "Evaluate local accuracy bounds");
  add_common(bound, bound_flags, true);
  CLI::App* report = app.add_subcommand("report", "Summarize report files");
  std::vector<std::string> report_files;
  std::string csv_path;
  report->add_option("reports", report_files, "Report JSON files")->required();
  report->add_option("--out", csv_path, "CSV output path");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    ReportError(absl::InvalidArgumentError(e.what()), "", err);
    return 2;
  }

  absl::Status status;
  std::string out_dir;
  if (gen->parsed()) {
    out_dir = synth_flags.out;
    status = GenSynth(synth_flags, out);
  } else if (run->parsed()) {
    out_dir = run_flags.out;
    status = Run(run_flags, out);
  } else if (bound->parsed()) {
    out_dir = bound_flags.out;
    status = Bound(bound_flags, out);
  } else {
    status = Report(report_files, csv_path, out);
  }
  if (!status.ok()) {
    ReportError(status, out_dir, err);
    return 1;
  }
  return 0;
}

}  // namespace pft
