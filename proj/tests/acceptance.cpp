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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "inctrl/cli.hpp"
#include "inctrl/config.hpp"
#include "inctrl/data.hpp"
#include "inctrl/detector.hpp"
#include "inctrl/error.hpp"
#include "inctrl/eval.hpp"
#include "inctrl/model.hpp"
#include "inctrl/patch_residual.hpp"
#include "inctrl/synthetic.hpp"
#include "inctrl/training.hpp"
#include "support.hpp"

namespace inctrl {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1. Aggregated patch residual against the per-layer brute-force loop.
Outcome PatchResidualOracle() {
  const auto start = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int h = 1 + static_cast<int>(rng.Below(4));
    const int w = 1 + static_cast<int>(rng.Below(4));
    const int d = 1 + static_cast<int>(rng.Below(8));
    const int k = 1 + static_cast<int>(rng.Below(3));
    const int layers = 1 + static_cast<int>(rng.Below(3));
    const PatchTokenMaps q = testing::RandomTokens(rng, {h, w}, layers, d, 4);
    std::vector<PatchTokenMaps> prompts;
    for (int i = 0; i < k; ++i) prompts.push_back(testing::RandomTokens(rng, {h, w}, layers, d, 4));
    const Mat got = PatchResidualMap(q, prompts, {}).values;
    std::vector<std::vector<double>> mean(h, std::vector<double>(w, 0.0));
    for (int l = 0; l < layers; ++l) {
      std::vector<PatchMat> layer_prompts;
      for (const auto& p : prompts) layer_prompts.push_back(p.layers[l]);
      const auto oracle = testing::BruteForceResidual(q.layers[l], layer_prompts, h, w);
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) mean[i][j] += oracle[i][j] / layers;
      }
    }
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) worst = std::max(worst, std::abs(got(i, j) - mean[i][j]));
    }
  }
  const double secs = Seconds(start);
  return {worst <= 1e-6 && secs < 10.0,
          "500 instances, max deviation " + Fmt("%.3g", worst) + ", " + Fmt("%.2f", secs) + " s"};
}

MockEncoderConfig AcceptanceMock(int resolution) {
  MockEncoderConfig m;
  m.resolution = resolution;
  m.patch_dim = 16;
  return m;
}

ImageTensor RandomTensor(Rng& rng, int resolution) {
  PreprocessConfig p;
  p.resolution = resolution;
  return PreprocessImage(testing::PatternImage(resolution, 3, rng.Next()), p);
}

// 2. Query included in its own prompt set.
Outcome SelfMatch() {
  const MockEncoder enc(AcceptanceMock(64));
  Rng rng(2);
  double worst = 0.0;
  double worst_sp = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const PatchTokenMaps q = enc.EncodeImage(RandomTensor(rng, 64));
    std::vector<PatchTokenMaps> prompts;
    const int k = 1 + static_cast<int>(rng.Below(4));
    for (int i = 0; i < k; ++i) prompts.push_back(enc.EncodeImage(RandomTensor(rng, 64)));
    prompts.insert(prompts.begin() + static_cast<long>(rng.Below(prompts.size() + 1)), q);
    const ResidualMap m = PatchResidualMap(q, prompts, {});
    worst = std::max(worst, m.values.maxCoeff());
    worst_sp = std::max(worst_sp, PatchLevelScore(m));
  }
  return {worst <= 1e-6 && worst_sp == 0.0,
          "50 images, max element " + Fmt("%.3g", worst) + ", max s_p " + Fmt("%.3g", worst_sp)};
}

// 3. Final score under prompt permutation and duplication.
Outcome PromptInvariance() {
  auto features = testing::TileAlignedFeatures(32, 4);
  ModelConfig cfg;
  Rng rng(3);
  const ModelParams params = InitModelParams(features->backend().geometry(), cfg, rng);
  const Detector det(features, cfg, params);
  const auto& enc = features->backend();
  const TextPrototypes& text = det.TextFor("object");
  double drift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const PatchTokenMaps q = enc.EncodeImage(RandomTensor(rng, 32));
    std::vector<PatchTokenMaps> prompts;
    for (int i = 0; i < 4; ++i) prompts.push_back(enc.EncodeImage(RandomTensor(rng, 32)));
    const double base = det.Score(q, prompts, text).score;
    std::vector<int> order = {0, 1, 2, 3};
    do {
      std::vector<PatchTokenMaps> permuted;
      for (int i : order) permuted.push_back(prompts[i]);
      drift = std::max(drift, std::abs(det.Score(q, permuted, text).score - base));
    } while (std::next_permutation(order.begin(), order.end()));
    std::vector<PatchTokenMaps> doubled = prompts;
    doubled.insert(doubled.end(), prompts.begin(), prompts.end());
    drift = std::max(drift, std::abs(det.Score(q, doubled, text).score - base));
  }
  return {drift <= 1e-9, "20 queries x 24 orders + duplication, max drift " + Fmt("%.3g", drift)};
}

// 4. Analytic gradients of the combined loss against central differences.
Outcome GradientCheck() {
  Rng rng(4);
  double worst[3] = {0, 0, 0};
  const FocalLossConfig focal;
  for (int trial = 0; trial < 20; ++trial) {
    BackendGeometry g;
    g.grid = {1 + static_cast<int>(rng.Below(3)), 1 + static_cast<int>(rng.Below(3))};
    g.global_dim = 4 + static_cast<int>(rng.Below(5));
    ModelConfig cfg;
    cfg.adapter_hidden = 2 + static_cast<int>(rng.Below(3));
    cfg.classifier_hidden = {5, 3};
    cfg.head_hidden = {4, 3};
    ModelParams p = MakeModelParams(g, cfg);
    for (Mlp* m : {&p.adapter, &p.classifier, &p.scorer.head}) {
      m->InitRandom(rng, 1.0);
      for (auto& l : m->layers()) l.bias = testing::RandomVec(rng, l.bias.size(), -0.3, 0.3);
    }
    p.scorer.alpha = rng.Uniform(0.0, 2.0);
    std::vector<EpisodeInputs> batch;
    for (int b = 0; b < 4; ++b) {
      EpisodeInputs in;
      in.patch_map.values.resize(g.grid.height, g.grid.width);
      for (int i = 0; i < g.grid.size(); ++i) {
        in.patch_map.values(i / g.grid.width, i % g.grid.width) = rng.Uniform(0, 2);
      }
      in.query_global = testing::RandomVec(rng, g.global_dim);
      for (int k = 0; k <= b % 3; ++k) in.prompt_globals.push_back(testing::RandomVec(rng, g.global_dim));
      in.text_score = rng.Uniform(0.05, 0.95);
      in.label = b % 2;
      batch.push_back(in);
    }
    ModelParams grad = p;
    grad.SetZero();
    ComputeLoss(p, batch, focal, &grad);

    const std::vector<std::pair<Mlp*, const Mlp*>> groups = {
        {&p.adapter, &grad.adapter}, {&p.classifier, &grad.classifier},
        {&p.scorer.head, &grad.scorer.head}};
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      Mlp& net = *groups[gi].first;
      const Vec flat = net.Flatten();
      Vec numeric(flat.size());
      for (Eigen::Index i = 0; i < flat.size(); ++i) {
        Vec x = flat;
        x(i) = flat(i) + 1e-4;
        net.Unflatten(x);
        const double up = ComputeLoss(p, batch, focal).total;
        x(i) = flat(i) - 1e-4;
        net.Unflatten(x);
        const double down = ComputeLoss(p, batch, focal).total;
        numeric(i) = (up - down) / 2e-4;
      }
      net.Unflatten(flat);
      const Vec analytic = groups[gi].second->Flatten();
      const double scale = std::max(analytic.norm(), numeric.norm());
      const double rel = scale == 0.0 ? 0.0 : (analytic - numeric).norm() / scale;
      worst[gi] = std::max(worst[gi], rel);
    }
  }
  const double m = std::max({worst[0], worst[1], worst[2]});
  return {m < 1e-3, "20 parameterizations, max relative error adapter " + Fmt("%.2g", worst[0]) +
                        ", classifier " + Fmt("%.2g", worst[1]) + ", head " +
                        Fmt("%.2g", worst[2])};
}

// 5. AUROC against the pairwise oracle plus transform invariance.
Outcome MetricOracle() {
  Rng rng(5);
  int exact = 0;
  bool invariant = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(199));
    std::vector<double> s(n);
    std::vector<int> y(n);
    const int levels = 1 + static_cast<int>(rng.Below(40));
    for (int i = 0; i < n; ++i) {
      s[i] = rng.Below(2) == 0 ? rng.Uniform(-2, 2) : static_cast<double>(rng.Below(levels)) / 8;
      y[i] = static_cast<int>(rng.Below(2));
    }
    y[0] = 0;
    y[1] = 1;
    const double a = Auroc(s, y);
    exact += a == testing::PairwiseAuroc(s, y);
    std::vector<double> affine, expo;
    for (double v : s) {
      affine.push_back(0.5 * v - 3.0);
      expo.push_back(std::exp(v));
    }
    invariant &= Auroc(affine, y) == a && Auroc(expo, y) == a;
  }
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y = {0, 0, 1, 1};
  const double example = Auroc(s, y);
  return {exact == 200 && invariant && example == 0.75,
          std::to_string(exact) + "/200 exact, example " + Fmt("%.17g", example) +
              (invariant ? ", affine/exp invariant" : ", transform invariance broken")};
}

// Settings shared by the end-to-end checks: 64 px images on a 4x4 grid.
RunConfig EndToEndConfig() {
  RunConfig c;
  c.Set("preprocess.resolution", 64, ConfigSource::kFlag);
  c.Set("encoder.mock.patch_dim", 16, ConfigSource::kFlag);
  c.Set("training.epochs", 10, ConfigSource::kFlag);
  c.Validate();
  return c;
}

struct Trained {
  RunConfig config;
  std::shared_ptr<const FeatureCache> features;
  Checkpoint checkpoint;
  double seconds = 0.0;
};

Trained TrainOn(const DatasetManifest& aux) {
  Trained t;
  t.config = EndToEndConfig();
  t.features = std::make_shared<const FeatureCache>(MakeBackend(t.config),
                                                    ToPreprocessConfig(t.config));
  const auto start = Clock::now();
  t.checkpoint = Fit(aux, *t.features, ToModelConfig(t.config), ToTrainConfig(t.config));
  t.seconds = Seconds(start);
  t.checkpoint.config = t.config.tree();
  return t;
}

SyntheticConfig Synth(std::vector<std::string> categories, std::uint64_t seed) {
  SyntheticConfig s;
  s.categories = std::move(categories);
  s.seed = seed;
  return s;
}

// 6. Train on auxiliary categories, evaluate on unseen ones.
Outcome EndToEnd(const fs::path& root, Trained* trained_out) {
  const DatasetManifest aux =
      WriteSyntheticDataset(Synth({"a0", "a1", "a2", "a3"}, 1), root / "aux", "aux");
  const DatasetManifest target =
      WriteSyntheticDataset(Synth({"t0", "t1", "t2"}, 2), root / "target", "target");
  SyntheticConfig mm = Synth({"m0", "m1", "m2"}, 3);
  mm.modes_per_category = 4;
  mm.motifs_per_mode = 2;
  mm.train_normals = 30;
  const DatasetManifest multimodal = WriteSyntheticDataset(mm, root / "multimodal", "multimodal");

  Trained t = TrainOn(aux);
  const Detector det(t.features, ToModelConfig(t.config), t.checkpoint.params);

  EvalOptions o;
  o.k = 2;
  o.per_category = true;
  const double held_out = Evaluate(det, target, o).auroc.mean;

  o.seeds = {1, 2, 3, 4, 5};
  std::vector<double> by_k;
  for (int k : {2, 4, 8}) {
    o.k = k;
    by_k.push_back(Evaluate(det, multimodal, o).auroc.mean);
  }
  const bool monotone = by_k[0] <= by_k[1] && by_k[1] <= by_k[2];
  const bool pass = held_out >= 0.95 && monotone && t.checkpoint.epochs <= 10 && t.seconds < 120;
  *trained_out = std::move(t);
  return {pass, "fit " + std::to_string(trained_out->checkpoint.epochs) + " epochs in " +
                    Fmt("%.2f", trained_out->seconds) + " s; held-out AUROC (K=2) " +
                    Fmt("%.4f", held_out) + "; multi-modal AUROC K=2/4/8 " +
                    Fmt("%.4f", by_k[0]) + "/" + Fmt("%.4f", by_k[1]) + "/" +
                    Fmt("%.4f", by_k[2])};
}

// 7. MNIST protocol counts from a manifest with the per-class test sizes.
Outcome ProtocolCounts() {
  const int sizes[10] = {980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009};
  DatasetManifest m;
  m.name = "mnist";
  for (int d = 0; d < 10; ++d) {
    for (int i = 0; i < sizes[d]; ++i) {
      m.entries.push_back({"mnist/test/" + std::to_string(d) + "/" + std::to_string(i) + ".png",
                           0, std::to_string(d), Split::kTest});
    }
  }
  const auto one = BuildProtocol(m, {ProtocolMode::kOneVsAll, "0"});
  const auto even = BuildProtocol(m, {ProtocolMode::kMultiClass, "even_number"});
  const auto n1 = one.CountLabel(0, Split::kTest), a1 = one.CountLabel(1, Split::kTest);
  const auto n2 = even.CountLabel(0, Split::kTest), a2 = even.CountLabel(1, Split::kTest);
  return {n1 == 980 && a1 == 9020 && n2 == 4926 && a2 == 5074,
          "one-vs-all '0': " + std::to_string(n1) + "/" + std::to_string(a1) +
              "; even_number: " + std::to_string(n2) + "/" + std::to_string(a2)};
}

// 8. Repeat fit, checkpoint round trip, repeated `score`.
Outcome Determinism(const fs::path& root, const Trained& first) {
  const DatasetManifest aux = LoadManifest(root / "aux" / "manifest.csv");
  const Trained second = TrainOn(aux);
  const bool same_history = first.checkpoint.loss_history == second.checkpoint.loss_history &&
                            !first.checkpoint.loss_history.empty();
  const bool same_params = first.checkpoint.params == second.checkpoint.params;

  const fs::path ckpt = root / "ckpt";
  SaveCheckpoint(first.checkpoint, ckpt);
  const Checkpoint back = LoadCheckpoint(ckpt, first.checkpoint.backend_id);
  const Vec a = first.checkpoint.params.Flatten(), b = back.params.Flatten();
  const bool bitwise = a.size() == b.size() &&
                       std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0 &&
                       back.loss_history == first.checkpoint.loss_history;

  const std::vector<std::string> args = {
      "score", "--ckpt", ckpt.string(), "--image", aux.entries[0].path, aux.entries.back().path,
      "--prompts", aux.entries[1].path, aux.entries[2].path};
  std::ostringstream out1, out2, err;
  const int c1 = RunCli(args, out1, err);
  const int c2 = RunCli(args, out2, err);
  const bool stable = c1 == 0 && c2 == 0 && out1.str() == out2.str() && !out1.str().empty();
  return {same_history && same_params && bitwise && stable,
          std::string("loss history ") + (same_history ? "identical" : "differs") +
              " over " + std::to_string(first.checkpoint.loss_history.size()) + " steps; params " +
              (same_params ? "identical" : "differ") + "; checkpoint round trip " +
              (bitwise ? "bitwise" : "NOT bitwise") + "; score output " +
              (stable ? "bit-stable" : "unstable: " + err.str())};
}

// 9. Random pipelines end to end.
Outcome RangeFuzz() {
  Rng rng(9);
  long violations = 0;
  double min_r = 1e9, max_r = -1e9, min_p = 1.0, max_p = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    MockEncoderConfig m;
    m.layers = 1 + static_cast<int>(rng.Below(3));
    m.grid = 1 + static_cast<int>(rng.Below(4));
    m.patch_dim = 1 + static_cast<int>(rng.Below(8));
    m.global_dim = 2 + static_cast<int>(rng.Below(10));
    m.seed = rng.Below(1000);
    m.resolution = m.grid * 4 + static_cast<int>(rng.Below(8));
    const MockEncoder enc(m);
    PreprocessConfig pre;
    pre.resolution = m.resolution;

    auto image = [&]() {
      // Mostly textured, sometimes flat (zero-contrast patches).
      if (rng.Below(5) == 0) {
        return PreprocessImage(
            MakeRawImage(m.resolution, m.resolution, 3, static_cast<float>(rng.Uniform())), pre);
      }
      return PreprocessImage(testing::PatternImage(m.resolution, 3, rng.Next()), pre);
    };
    const PatchTokenMaps q = enc.EncodeImage(image());
    std::vector<PatchTokenMaps> prompts;
    const int k = 1 + static_cast<int>(rng.Below(4));
    for (int i = 0; i < k; ++i) prompts.push_back(enc.EncodeImage(image()));

    ModelConfig cfg;
    cfg.classifier_hidden = {1 + static_cast<int>(rng.Below(8))};
    cfg.head_hidden = {1 + static_cast<int>(rng.Below(8)), 1 + static_cast<int>(rng.Below(4))};
    cfg.alpha = rng.Uniform(0, 3);
    cfg.text.temperature = rng.Uniform(0.01, 2.0);
    cfg.text.normalize = rng.Below(2) == 0;
    cfg.prompt_style = rng.Below(2) == 0 ? PromptStyle::kDefect : PromptStyle::kSemantic;
    ModelParams params = MakeModelParams(enc.geometry(), cfg);
    const double scale = std::pow(10.0, rng.Uniform(-2, 2));
    for (Mlp* net : {&params.adapter, &params.classifier, &params.scorer.head}) {
      net->InitRandom(rng, scale);
      for (auto& l : net->layers()) l.bias = testing::RandomVec(rng, l.bias.size(), -scale, scale);
    }
    params.scorer.alpha = cfg.alpha;

    const TextPrototypes text =
        ComputeTextPrototypes(BuildPromptBank("item", cfg.prompt_style), enc);
    std::vector<EpisodeInputs> batch;
    batch.push_back(PrepareEpisode(q, prompts, text, cfg, static_cast<int>(rng.Below(2))));
    batch.push_back(PrepareEpisode(prompts[0], prompts, text, cfg, 0));
    for (const auto& in : batch) {
      for (const auto& layer : LayerResidualMaps(q, prompts, {})) {
        min_r = std::min(min_r, layer.values.minCoeff());
        max_r = std::max(max_r, layer.values.maxCoeff());
        violations += layer.values.minCoeff() < 0.0 || layer.values.maxCoeff() > 2.0;
      }
      const ScoreBreakdown b = Forward(params, in);
      min_r = std::min(min_r, b.patch_map.values.minCoeff());
      max_r = std::max(max_r, b.patch_map.values.maxCoeff());
      violations += b.patch_map.values.minCoeff() < 0.0 || b.patch_map.values.maxCoeff() > 2.0;
      for (double p : {b.image_score, b.text_score}) {
        min_p = std::min(min_p, p);
        max_p = std::max(max_p, p);
        violations += !(p > 0.0 && p < 1.0);
      }
      violations += !std::isfinite(b.score);
    }
    const BatchLoss loss = ComputeLoss(params, batch, cfg.focal);
    violations += !std::isfinite(loss.total) || loss.total < 0.0;
  }
  return {violations == 0,
          "1000 pipelines, " + std::to_string(violations) + " violations; residuals in [" +
              Fmt("%.3g", min_r) + ", " + Fmt("%.3g", max_r) + "], s_i/s_a in [" +
              Fmt("%.3g", min_p) + ", " + Fmt("%.17g", max_p) + "]"};
}

Outcome Guard(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace
}  // namespace inctrl

int main() {
  using namespace inctrl;
  testing::TempDir root;
  Trained trained;
  bool trained_ok = false;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"patch-residual oracle equivalence", PatchResidualOracle},
      {"self-match invariant", SelfMatch},
      {"prompt permutation/duplication invariance", PromptInvariance},
      {"gradient checks", GradientCheck},
      {"metric oracle", MetricOracle},
      {"end-to-end synthetic separability",
       [&] {
         Outcome o = EndToEnd(root.path(), &trained);
         trained_ok = true;
         return o;
       }},
      {"protocol counts", ProtocolCounts},
      {"determinism and persistence",
       [&]() -> Outcome {
         if (!trained_ok) return {false, "no trained model from criterion 6"};
         return Determinism(root.path(), trained);
       }},
      {"range invariants", RangeFuzz},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = Guard(criteria[i].second);
    failures += !o.pass;
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
