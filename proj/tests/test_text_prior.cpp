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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "inctrl/digest.hpp"
#include "inctrl/error.hpp"
#include "inctrl/text_prior.hpp"
#include "support.hpp"

namespace inctrl {
namespace {

// Text-only backend: each prompt maps to a fixed random vector seeded by
// its digest, unnormalized unless asked.
class TableBackend final : public EncoderBackend {
 public:
  explicit TableBackend(int dim) { geometry_.global_dim = dim; }
  std::string identifier() const override { return "table"; }
  const BackendGeometry& geometry() const override { return geometry_; }
  PatchTokenMaps EncodeImage(const ImageTensor&) const override {
    Fail(ErrorKind::kContract, "test", "no images");
  }
  Vec EncodeText(std::string_view prompt, bool normalize) const override {
    CheckPrompt(prompt);
    const auto d = Sha256(prompt);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | static_cast<std::uint8_t>(d[i]);
    Rng rng(seed);
    Vec v = testing::RandomVec(rng, geometry_.global_dim);
    if (normalize) v.normalize();
    return v;
  }

 private:
  BackendGeometry geometry_;
};

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

TEST(PromptBank, DefectStyleHasFlawlessInspectionPrompt) {
  const PromptBank bank = BuildPromptBank("bottle", PromptStyle::kDefect);
  EXPECT_TRUE(Contains(bank.NormalPrompts(),
                       "a photo of a flawless bottle for visual inspection."));
}

TEST(PromptBank, SemanticStyleAbnormalPrompt) {
  const PromptBank bank = BuildPromptBank("airplane", PromptStyle::kSemantic);
  EXPECT_EQ(bank.AbnormalPrompts(),
            std::vector<std::string>{"a photo without airplane for anomaly detection."});
  EXPECT_EQ(bank.NormalPrompts(),
            std::vector<std::string>{"a photo of airplane for anomaly detection."});
}

TEST(PromptBank, SubstitutionIsComplete) {
  for (auto style : {PromptStyle::kDefect, PromptStyle::kSemantic}) {
    const PromptBank bank = BuildPromptBank("x", style);
    ASSERT_FALSE(bank.NormalPrompts().empty());
    ASSERT_FALSE(bank.AbnormalPrompts().empty());
    for (const auto& list : {bank.NormalPrompts(), bank.AbnormalPrompts()}) {
      for (const auto& p : list) {
        EXPECT_NE(p.find('x'), std::string::npos) << p;
        EXPECT_EQ(p.find("[c]"), std::string::npos) << p;
      }
    }
  }
}

TEST(PromptBank, Errors) {
  EXPECT_THROW(BuildPromptBank("", PromptStyle::kDefect), Error);
  EXPECT_THROW(ParsePromptStyle("cartoon"), Error);
  EXPECT_EQ(ParsePromptStyle("semantic"), PromptStyle::kSemantic);
  // Two slots in one template, and a template without any.
  EXPECT_THROW(ParsePromptTemplates("[normal]\n[c] [c]\n[abnormal]\nbad [c]\n", "a"), Error);
  EXPECT_THROW(ParsePromptTemplates("[normal]\nplain\n[abnormal]\nbad [c]\n", "a"), Error);
  EXPECT_THROW(ParsePromptTemplates("[normal]\ngood [c]\n", "a"), Error);
}

TEST(PromptBank, ParsesCommentsAndBlankLines) {
  const PromptBank bank =
      ParsePromptTemplates("# header\n[normal]\n\ngood [c]\n[abnormal]\n# x\nbad [c]\n", "cup");
  EXPECT_EQ(bank.NormalPrompts(), std::vector<std::string>{"good cup"});
  EXPECT_EQ(bank.AbnormalPrompts(), std::vector<std::string>{"bad cup"});
}

TEST(TextPrototypes, SingleTemplateIsItsEmbedding) {
  const TableBackend backend(6);
  const PromptBank bank = ParsePromptTemplates("[normal]\ngood [c]\n[abnormal]\nbad [c]\n", "cup");
  const TextPrototypes p = ComputeTextPrototypes(bank, backend, false);
  EXPECT_EQ(p.normal, backend.EncodeText("good cup", false));
  EXPECT_EQ(p.abnormal, backend.EncodeText("bad cup", false));
}

TEST(TextPrototypes, MatchesPerDimensionMean) {
  const TableBackend backend(5);
  const PromptBank bank = BuildPromptBank("screw", PromptStyle::kDefect);
  for (bool normalize : {false, true}) {
    const TextPrototypes p = ComputeTextPrototypes(bank, backend, normalize);
    const auto prompts = bank.NormalPrompts();
    for (int d = 0; d < 5; ++d) {
      double sum = 0.0;
      for (const auto& s : prompts) sum += backend.EncodeText(s, normalize)(d);
      EXPECT_NEAR(p.normal(d), sum / static_cast<double>(prompts.size()), 1e-12);
    }
  }
}

TEST(TextPrototypes, DuplicatedListLeavesMeanUnchanged) {
  const TableBackend backend(4);
  const PromptBank once =
      ParsePromptTemplates("[normal]\ngood [c]\nnice [c]\n[abnormal]\nbad [c]\n", "cup");
  const PromptBank twice = ParsePromptTemplates(
      "[normal]\ngood [c]\nnice [c]\ngood [c]\nnice [c]\n[abnormal]\nbad [c]\nbad [c]\n", "cup");
  const TextPrototypes a = ComputeTextPrototypes(once, backend, true);
  const TextPrototypes b = ComputeTextPrototypes(twice, backend, true);
  EXPECT_LE((a.normal - b.normal).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((a.abnormal - b.abnormal).cwiseAbs().maxCoeff(), 1e-15);
}

TextPrototypes Protos(double n0, double a0) {
  return {(Vec(2) << n0, 0).finished(), (Vec(2) << a0, 0).finished()};
}

TEST(TextPriorScore, Examples) {
  TextPriorOptions raw;
  raw.normalize = false;
  const Vec v = (Vec(2) << 1, 0).finished();
  EXPECT_EQ(TextPriorScore(v, Protos(0.3, 0.3), raw), 0.5);
  EXPECT_NEAR(TextPriorScore(v, Protos(0.0, std::log(3.0)), raw), 0.75, 1e-15);
  const double big = TextPriorScore(v, Protos(0.0, 1000.0), raw);
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_GT(big, 1.0 - 1e-9);
  EXPECT_LT(big, 1.0);
  const double small = TextPriorScore(v, Protos(1000.0, 0.0), raw);
  EXPECT_GT(small, 0.0);
  EXPECT_LT(small, 1e-9);
}

TEST(TextPriorScore, TemperatureDividesLogits) {
  TextPriorOptions o;
  o.normalize = false;
  o.temperature = 0.5;
  const Vec v = (Vec(2) << 1, 0).finished();
  EXPECT_NEAR(TextPriorScore(v, Protos(0.0, std::log(3.0) / 2.0), o), 0.75, 1e-15);
  o.temperature = 0.0;
  EXPECT_THROW(TextPriorScore(v, Protos(0, 0), o), Error);
}

TEST(TextPriorScore, SwapComplementAndRange) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec v = testing::RandomVec(rng, 7, -3, 3);
    const TextPrototypes p{testing::RandomVec(rng, 7, -3, 3), testing::RandomVec(rng, 7, -3, 3)};
    for (bool normalize : {false, true}) {
      TextPriorOptions o;
      o.normalize = normalize;
      const double s = TextPriorScore(v, p, o);
      const double swapped = TextPriorScore(v, {p.abnormal, p.normal}, o);
      EXPECT_GT(s, 0.0);
      EXPECT_LT(s, 1.0);
      EXPECT_NEAR(s + swapped, 1.0, 1e-12);
    }
  }
}

TEST(TextPriorScore, LogitShiftInvariance) {
  // An extra image dimension where both prototypes hold the same value
  // adds the same constant to both logits.
  TextPriorOptions raw;
  raw.normalize = false;
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec v = testing::RandomVec(rng, 3);
    const TextPrototypes p{testing::RandomVec(rng, 3), testing::RandomVec(rng, 3)};
    const double c = rng.Uniform(-20, 20);
    Vec v4(4), n4(4), a4(4);
    v4 << v, 1.0;
    n4 << p.normal, c;
    a4 << p.abnormal, c;
    EXPECT_NEAR(TextPriorScore(v4, {n4, a4}, raw), TextPriorScore(v, p, raw), 1e-12);
  }
}

TEST(TextPriorScore, DimensionMismatchIsContractError) {
  try {
    TextPriorScore(Vec::Ones(3), Protos(0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

}  // namespace
}  // namespace inctrl
