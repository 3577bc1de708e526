/*
 * Copyright 2026 The InCTRL-cpp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

#include "inctrl/cli.hpp"
#include "inctrl/io.hpp"
#include "inctrl/synthetic.hpp"
#include "support.hpp"

namespace inctrl {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t CountFiles(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    SyntheticConfig s;
    s.categories = {"a", "b"};
    s.train_normals = 6;
    s.train_anomalies = 3;
    s.test_normals = 3;
    s.test_anomalies = 3;
    s.image_size = 32;
    data_ = new DatasetManifest(WriteSyntheticDataset(s, dir_->path() / "data", "toy"));
    WriteFileAtomic(dir_->path() / "cfg.json",
                    std::string(R"({"preprocess": {"resolution": 32},
                                    "encoder": {"mock": {"patch_dim": 8}},
                                    "training": {"epochs": 1, "batch_size": 8}})"));
    const CliRun r = Cli({"train", "--data", Manifest(), "--out", Ckpt(), "--config", Config()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete data_;
    delete dir_;
  }

  static std::string Manifest() { return (dir_->path() / "data" / "manifest.csv").string(); }
  static std::string Ckpt() { return (dir_->path() / "ckpt").string(); }
  static std::string Config() { return (dir_->path() / "cfg.json").string(); }
  static std::string Image(std::size_t i) { return data_->entries[i].path; }
  static fs::path Scratch(const std::string& name) { return dir_->path() / "scratch" / name; }

  static testing::TempDir* dir_;
  static DatasetManifest* data_;
};

testing::TempDir* CliTest::dir_ = nullptr;
DatasetManifest* CliTest::data_ = nullptr;

TEST_F(CliTest, TrainWroteCheckpoint) {
  EXPECT_TRUE(fs::exists(fs::path(Ckpt()) / "metadata.json"));
  EXPECT_TRUE(fs::exists(fs::path(Ckpt()) / "loss_history.csv"));
  const auto meta = nlohmann::json::parse(ReadFileText(fs::path(Ckpt()) / "metadata.json"));
  EXPECT_EQ(meta.at("config").at("preprocess").at("resolution"), 32);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"score", "--ckpt", Ckpt(), "--image", Image(0), "--prompts", Image(1),
                 "--bogus"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"train", "--data", Manifest()}).code, kExitUsage);
  const CliRun bad_key = Cli({"score", "--ckpt", Ckpt(), "--image", Image(0), "--prompts",
                           Image(1), "--set", "training.epoch=3"});
  EXPECT_EQ(bad_key.code, kExitUsage);
  EXPECT_NE(bad_key.err.find("training.epoch"), std::string::npos);
}

TEST_F(CliTest, MissingCheckpointExitsTwoWithoutSideEffects) {
  const auto before = CountFiles(dir_->path());
  for (const auto& cmd : std::vector<std::vector<std::string>>{
           {"score", "--ckpt", Scratch("absent").string(), "--image", Image(0), "--prompts",
            Image(1)},
           {"eval", "--ckpt", Scratch("absent").string(), "--data", Manifest(), "--out",
            Scratch("eval").string()},
           {"visualize", "--ckpt", Scratch("absent").string(), "--image", Image(0),
            "--prompts", Image(1), "--out", Scratch("vis").string()}}) {
    const CliRun r = Cli(cmd);
    EXPECT_EQ(r.code, kExitUsage) << cmd[0];
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("checkpoint"), std::string::npos) << r.err;
  }
  EXPECT_EQ(CountFiles(dir_->path()), before);
  EXPECT_FALSE(fs::exists(Scratch("")));
}

TEST_F(CliTest, ScoreIsBitStable) {
  const std::vector<std::string> cmd = {"score", "--ckpt", Ckpt(), "--image", Image(0),
                                        Image(10), "--prompts", Image(1), Image(2)};
  const CliRun a = Cli(cmd);
  const CliRun b = Cli(cmd);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  std::istringstream lines(a.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    EXPECT_TRUE(std::isfinite(std::stod(line.substr(tab + 1))));
  }
  EXPECT_EQ(n, 2);
}

TEST_F(CliTest, SelfMatchHasZeroPatchScore) {
  const CliRun r = Cli({"visualize", "--ckpt", Ckpt(), "--image", Image(0), "--prompts",
                     Image(0), Image(1), "--out", Scratch("self").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto stem = fs::path(Image(0)).stem().string();
  const std::string side = ReadFileText(Scratch("self") / (stem + "_heatmap.txt"));
  EXPECT_EQ(side.rfind("s_p\t0\n", 0), 0u) << side;
  const RawImage img = ReadImage(Scratch("self") / (stem + "_heatmap.png"));
  EXPECT_EQ(img.width, 32);
}

TEST_F(CliTest, EvalWritesReports) {
  const CliRun r = Cli({"eval", "--ckpt", Ckpt(), "--data", Manifest(), "--out",
                     Scratch("eval").string(), "--k", "2", "--seeds", "1,2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("data\tK=2\tAUROC "), std::string::npos) << r.out;
  const std::string csv = ReadFileText(Scratch("eval") / "report.csv");
  EXPECT_EQ(csv.rfind("dataset,K,seed,auroc,auprc\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);

  const CliRun sweep = Cli({"eval", "--ckpt", Ckpt(), "--data", Manifest(), "--out",
                         Scratch("sweep").string(), "--k", "2", "--seeds", "1", "--sweep",
                         "1,2"});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  EXPECT_TRUE(fs::exists(Scratch("sweep") / "class_count_2" / "report.json"));
  EXPECT_EQ(Cli({"eval", "--ckpt", Ckpt(), "--data", Manifest(), "--seeds", "x"}).code,
            kExitUsage);
}

TEST_F(CliTest, BackendMismatchIsFailure) {
  const CliRun r = Cli({"score", "--ckpt", Ckpt(), "--image", Image(0), "--prompts", Image(1),
                     "--set", "encoder.mock.seed=7"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("incompatible"), std::string::npos) << r.err;
}

TEST_F(CliTest, EnvironmentConfigAndPrintConfig) {
  ::setenv("INCTRL_CONFIG", Config().c_str(), 1);
  const CliRun r = Cli({"train", "--data", Manifest(), "--out", Scratch("env_ckpt").string(),
                     "--epochs", "1", "--seed", "3", "--print-config"});
  ::unsetenv("INCTRL_CONFIG");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("preprocess.resolution = 32  (file"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("training.seed = 3  (flag"), std::string::npos);
  EXPECT_NE(r.out.find("trained "), std::string::npos);
}

}  // namespace
}  // namespace inctrl
