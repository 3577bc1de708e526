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

#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

#include "inctrl/config.hpp"
#include "inctrl/error.hpp"
#include "inctrl/io.hpp"
#include "support.hpp"

namespace inctrl {
namespace {

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kContract;
}

TEST(RunConfig, DefaultsMatchTypedConfigs) {
  const RunConfig c;
  EXPECT_NO_THROW(c.Validate());
  const TrainConfig t = ToTrainConfig(c);
  EXPECT_EQ(t.epochs, 10);
  EXPECT_EQ(t.batch_size, 48);
  EXPECT_EQ(t.learning_rate, 1e-3);
  EXPECT_EQ(t.k, 2);
  const ModelConfig m = ToModelConfig(c);
  EXPECT_EQ(m.classifier_hidden, (std::vector<int>{128, 64}));
  EXPECT_EQ(m.head_hidden, (std::vector<int>{64, 32}));
  EXPECT_EQ(m.alpha, 1.0);
  EXPECT_EQ(m.focal.gamma, 2.0);
  EXPECT_EQ(m.focal.pos_weight, 0.25);
  EXPECT_TRUE(m.layers.empty());
  EXPECT_EQ(ToPreprocessConfig(c).resolution, 240);
  const EvalOptions e = ToEvalOptions(c);
  EXPECT_EQ(e.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_FALSE(e.class_count.has_value());
  EXPECT_EQ(c.source("training.epochs"), ConfigSource::kDefault);
}

TEST(RunConfig, PrecedenceAndProvenance) {
  testing::TempDir dir;
  WriteFileAtomic(dir / "c.json",
                  std::string("{ // comment\n \"training\": {\"epochs\": 4, \"k\": 8},\n"
                              " /* block */ \"scoring\": {\"alpha\": 0.5}}"));
  RunConfig c;
  c.Merge({{"scoring", {{"alpha", 2.0}}}, {"adapter", {{"hidden", 7}}}},
          ConfigSource::kCheckpoint);
  c.MergeFile(dir / "c.json");
  c.Set("training.epochs=6");
  EXPECT_EQ(c.at("training.epochs"), 6);
  EXPECT_EQ(c.source("training.epochs"), ConfigSource::kFlag);
  EXPECT_EQ(c.at("training.k"), 8);
  EXPECT_EQ(c.source("training.k"), ConfigSource::kFile);
  EXPECT_EQ(c.origin("training.k"), (dir / "c.json").string());
  EXPECT_EQ(c.at("scoring.alpha"), 0.5);
  EXPECT_EQ(c.at("adapter.hidden"), 7);
  EXPECT_EQ(c.source("adapter.hidden"), ConfigSource::kCheckpoint);
  const std::string d = c.Describe();
  EXPECT_NE(d.find("training.epochs = 6  (flag)"), std::string::npos) << d;
}

TEST(RunConfig, SetParsesJsonOrString) {
  RunConfig c;
  c.Set("text_prior.style=semantic");
  EXPECT_EQ(c.at("text_prior.style"), "semantic");
  c.Set("classifier.hidden=[32,16]");
  EXPECT_EQ(ToModelConfig(c).classifier_hidden, (std::vector<int>{32, 16}));
  c.Set("patch_residual.layers=[0,2]");
  EXPECT_EQ(ToModelConfig(c).layers, (std::vector<int>{0, 2}));
  c.Set("patch_residual.layers=all");
  EXPECT_TRUE(ToModelConfig(c).layers.empty());
  c.Set("scoring.alpha=1");  // integers are valid for real keys
  EXPECT_EQ(ToModelConfig(c).alpha, 1.0);
}

TEST(RunConfig, UsageErrors) {
  RunConfig c;
  EXPECT_EQ(KindOf([&] { c.Set("training.epoch=3"); }), ErrorKind::kUsage);
  EXPECT_EQ(KindOf([&] { c.Set("training=3"); }), ErrorKind::kUsage);
  EXPECT_EQ(KindOf([&] { c.Set("training.epochs=2.5"); }), ErrorKind::kUsage);
  EXPECT_EQ(KindOf([&] { c.Set("training.epochs"); }), ErrorKind::kUsage);
  EXPECT_EQ(KindOf([&] { c.Set("a/b=1"); }), ErrorKind::kUsage);
  EXPECT_EQ(KindOf([&] { c.MergeFile("/nonexistent/inctrl.json"); }), ErrorKind::kUsage);
  testing::TempDir dir;
  WriteFileAtomic(dir / "bad.json", std::string("{\"training\": "));
  EXPECT_EQ(KindOf([&] { c.MergeFile(dir / "bad.json"); }), ErrorKind::kParse);
}

TEST(RunConfig, DomainValidation) {
  for (const char* bad : {"training.epochs=-1", "training.learning_rate=-0.1",
                          "scoring.focal.pos_weight=0", "preprocess.resolution=0",
                          "encoder.backend=\"clip\"", "text_prior.temperature=0",
                          "eval.class_count=5", "data.protocol.mode=\"one_vs_all\"",
                          "encoder.mock.grid=0"}) {
    RunConfig c;
    c.Set(bad);
    EXPECT_THROW(c.Validate(), Error) << bad;
  }
}

TEST(RunConfig, ModelSnapshotSections) {
  const auto snap = RunConfig().ModelSnapshot();
  for (const char* s : {"encoder", "preprocess", "patch_residual", "adapter", "classifier",
                        "scoring", "text_prior"}) {
    EXPECT_TRUE(snap.contains(s)) << s;
  }
  EXPECT_FALSE(snap.contains("training"));
  EXPECT_FALSE(snap.contains("eval"));
}

TEST(RunConfig, MockBackendFollowsConfig) {
  RunConfig c;
  c.Set("preprocess.resolution=64");
  c.Set("encoder.mock.patch_dim=12");
  const auto backend = MakeBackend(c);
  EXPECT_EQ(backend->geometry().resolution, 64);
  EXPECT_EQ(backend->geometry().patch_dim, 12);
  c.Set("encoder.mock.seed=9");
  EXPECT_NE(MakeBackend(c)->identifier(), backend->identifier());
}

}  // namespace
}  // namespace inctrl
