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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "json.hpp"
#include "pft/features.h"
#include "test_util.h"

namespace pft {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pft_cli_" + std::string(::testing::UnitTest::GetInstance()
                                         ->current_test_info()
                                         ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int Cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return RunCli(args, out_, err_);
  }

  static std::string Slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  }

  void GenSynth(int classes = 4, int per_class = 150) {
    const std::string cfg = Write(
        "synth.ini", "[synth]\nclasses = " + std::to_string(classes) +
                         "\ndim = 5\ntrain_per_class = " +
                         std::to_string(per_class) +
                         "\ntest_per_class = 50\nseed = 3\n");
    ASSERT_EQ(Cli({"gen-synth", "--config", cfg, "--out",
                   (dir_ / "data").string()}),
              0)
        << err_.str();
  }

  std::string RunConfig(const std::string& run_section) {
    return Write("run.ini",
                 "[data]\ntrain = data/train.fpft\ntest = data/test.fpft\n"
                 "[partition]\nscheme = iid\nclients = 3\nseed = 1\n"
                 "[train]\nepochs = 20\nstep_size = 0.05\n"
                 "[run]\n" + run_section);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, GenSynthWritesLoadableDeterministicFiles) {
  GenSynth(1, 2000);
  ASSERT_OK_AND_ASSIGN(FeatureDataset train,
                       LoadFeatures((dir_ / "data/train.fpft").string()));
  ASSERT_OK_AND_ASSIGN(FeatureDataset test,
                       LoadFeatures((dir_ / "data/test.fpft").string()));
  EXPECT_EQ(train.size(), 2000);
  EXPECT_EQ(test.size(), 50);
  const std::string first = Slurp(dir_ / "data/train.fpft");
  GenSynth(1, 2000);
  EXPECT_EQ(Slurp(dir_ / "data/train.fpft"), first);

  // Sample statistics agree with the ground-truth sidecar.
  nlohmann::json truth =
      nlohmann::json::parse(Slurp(dir_ / "data/ground_truth.json"));
  const auto& model = truth["models"][0];
  Vector mean = train.features.colwise().mean();
  for (int j = 0; j < 5; ++j) {
    const double mu = model["means"][0][j].get<double>();
    const double var = model["covariances"][0][j].get<double>();
    EXPECT_LE(std::abs(mean(j) - mu), 4 * std::sqrt(var / 2000));
  }
}

TEST_F(CliTest, RunWritesReportAndIsReproducible) {
  GenSynth();
  const std::string cfg = RunConfig("mode = centralized\nseed = 5\n");
  ASSERT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "r1").string()}), 0)
      << err_.str();
  ASSERT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "r2").string(),
                 "--threads", "2"}),
            0);
  const std::string a = Slurp(dir_ / "r1/report.json");
  EXPECT_EQ(a, Slurp(dir_ / "r2/report.json"));
  nlohmann::json j = nlohmann::json::parse(a);
  EXPECT_GE(j["accuracy"].get<double>(), 0.0);
  EXPECT_LE(j["accuracy"].get<double>(), 1.0);
  EXPECT_GT(j["comm"]["total_bytes"].get<int64_t>(), 0);

  ASSERT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "r3").string(),
                 "--seed", "6"}),
            0);
  EXPECT_NE(Slurp(dir_ / "r3/report.json"), a);
}

TEST_F(CliTest, DpWithTwoComponentsIsRejectedUpFront) {
  // No data files exist: rejection must happen before any loading.
  const std::string cfg =
      RunConfig("mode = centralized_dp\nfamily = full\ncomponents = 2\n");
  EXPECT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "o").string()}), 1);
  nlohmann::json err = nlohmann::json::parse(Slurp(dir_ / "o/error.json"));
  EXPECT_EQ(err["error"]["code"], "INVALID_ARGUMENT");
  EXPECT_NE(err_.str().find("error"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagsAndKeysAreErrors) {
  GenSynth();
  const std::string cfg = RunConfig("mode = centralized\n");
  EXPECT_NE(Cli({"run", "--config", cfg, "--out", "x", "--colour"}), 0);
  EXPECT_NE(Cli({"launch"}), 0);
  const std::string typo = RunConfig("mode = centralized\ncomponets = 2\n");
  EXPECT_EQ(Cli({"run", "--config", typo, "--out", (dir_ / "t").string()}), 1);
  EXPECT_NE(err_.str().find("componets"), std::string::npos);
}

TEST_F(CliTest, MissingDataIsReported) {
  const std::string cfg = RunConfig("mode = centralized\n");
  EXPECT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "m").string()}), 1);
  EXPECT_TRUE(fs::exists(dir_ / "m/error.json"));
}

TEST_F(CliTest, ReportSortsByBytesAndMatchesComm) {
  GenSynth();
  std::vector<std::string> reports;
  for (int k : {3, 1, 2}) {
    const std::string cfg = RunConfig("mode = centralized\ncomponents = " +
                                      std::to_string(k) + "\n");
    const fs::path out = dir_ / ("k" + std::to_string(k));
    ASSERT_EQ(Cli({"run", "--config", cfg, "--out", out.string()}), 0);
    reports.push_back((out / "report.json").string());
  }
  std::vector<std::string> args = {"report", "--out",
                                   (dir_ / "summary.csv").string()};
  args.insert(args.end(), reports.begin(), reports.end());
  ASSERT_EQ(Cli(args), 0) << err_.str();

  std::ifstream csv(dir_ / "summary.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "report,mode,family,components,epsilon,accuracy,bytes");
  int64_t prev = -1;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const std::string path = line.substr(0, line.find(','));
    const int64_t bytes = std::stoll(line.substr(line.rfind(',') + 1));
    EXPECT_GE(bytes, prev);
    prev = bytes;
    nlohmann::json j = nlohmann::json::parse(Slurp(path));
    EXPECT_EQ(bytes, j["comm"]["total_bytes"].get<int64_t>());
  }
  EXPECT_EQ(rows, 3);

  ASSERT_EQ(Cli({"report", "--out", (dir_ / "one.csv").string(), reports[0]}),
            0);
  std::ifstream one(dir_ / "one.csv");
  int lines = 0;
  while (std::getline(one, line)) ++lines;
  EXPECT_EQ(lines, 2);
}

TEST_F(CliTest, ReportRejectsMalformedFile) {
  const std::string bad = Write("bad.json", "{\"mode\": 3");
  EXPECT_EQ(Cli({"report", bad}), 1);
  const std::string partial = Write("partial.json", "{\"mode\": \"x\"}");
  EXPECT_EQ(Cli({"report", partial}), 1);
}

TEST_F(CliTest, BoundWritesPerClientReports) {
  GenSynth();
  const std::string cfg = RunConfig("mode = centralized\n");
  ASSERT_EQ(Cli({"bound", "--config", cfg, "--out", (dir_ / "b").string()}), 0)
      << err_.str();
  nlohmann::json j = nlohmann::json::parse(Slurp(dir_ / "b/bounds.json"));
  EXPECT_EQ(j["clients"].size(), 3u);
  const std::string chain = RunConfig("mode = decentralized_chain\n");
  EXPECT_EQ(Cli({"bound", "--config", chain, "--out", (dir_ / "c").string()}),
            1);
}

TEST_F(CliTest, ThreadsFallBackToEnvironment) {
  GenSynth();
  const std::string cfg = RunConfig("mode = centralized\n");
  setenv("PFT_THREADS", "3", 1);
  ASSERT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "e").string()}), 0);
  unsetenv("PFT_THREADS");
  ASSERT_EQ(Cli({"run", "--config", cfg, "--out", (dir_ / "f").string()}), 0);
  EXPECT_EQ(Slurp(dir_ / "e/report.json"), Slurp(dir_ / "f/report.json"));
}

}  // namespace
}  // namespace pft
