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

#include "inctrl/model.hpp"

#include <cmath>

#include "inctrl/error.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "model";

int AdapterHidden(const BackendGeometry& geometry, const ModelConfig& config) {
  return config.adapter_hidden > 0 ? config.adapter_hidden
                                   : std::max(1, geometry.global_dim / 4);
}

Mlp MakeHead(int inputs, const std::vector<int>& hidden) {
  std::vector<int> widths{inputs};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  return Mlp(widths);
}

}  // namespace

void ModelConfig::Validate() const {
  if (adapter_hidden < 0) {
    Fail(ErrorKind::kInvalidInput, kModule, "adapter.hidden must be >= 0");
  }
  for (int w : classifier_hidden) {
    if (w <= 0) Fail(ErrorKind::kInvalidInput, kModule, "classifier widths must be > 0");
  }
  for (int w : head_hidden) {
    if (w <= 0) Fail(ErrorKind::kInvalidInput, kModule, "head widths must be > 0");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    Fail(ErrorKind::kInvalidInput, kModule, "scoring.alpha must be >= 0");
  }
  for (int l : layers) {
    if (l < 0) Fail(ErrorKind::kInvalidInput, kModule, "layer indices must be >= 0");
  }
  if (!(text.temperature > 0.0)) {
    Fail(ErrorKind::kInvalidInput, kModule, "text_prior.temperature must be > 0");
  }
  focal.Validate();
}

Eigen::Index ModelParams::ParameterCount() const {
  return adapter.ParameterCount() + classifier.ParameterCount() +
         scorer.head.ParameterCount();
}

Vec ModelParams::Flatten() const {
  Vec flat(ParameterCount());
  flat << adapter.Flatten(), classifier.Flatten(), scorer.head.Flatten();
  return flat;
}

void ModelParams::Unflatten(const Vec& flat) {
  if (flat.size() != ParameterCount()) {
    Fail(ErrorKind::kContract, kModule, "flat parameter size mismatch");
  }
  Eigen::Index k = 0;
  for (Mlp* net : {&adapter, &classifier, &scorer.head}) {
    const auto n = net->ParameterCount();
    net->Unflatten(flat.segment(k, n));
    k += n;
  }
}

void ModelParams::SetZero() {
  adapter.SetZero();
  classifier.SetZero();
  scorer.head.SetZero();
}

bool ModelParams::AllFinite() const {
  return adapter.AllFinite() && classifier.AllFinite() &&
         scorer.head.AllFinite() && std::isfinite(scorer.alpha);
}

ModelParams MakeModelParams(const BackendGeometry& geometry,
                            const ModelConfig& config) {
  config.Validate();
  ModelParams p;
  p.adapter = MakeAdapter(geometry.global_dim, AdapterHidden(geometry, config));
  p.classifier = MakeImageClassifier(geometry.global_dim, config.classifier_hidden);
  p.scorer.head = MakeHead(geometry.grid.size(), config.head_hidden);
  p.scorer.alpha = config.alpha;
  return p;
}

ModelParams InitModelParams(const BackendGeometry& geometry,
                            const ModelConfig& config, Rng& rng) {
  ModelParams p = MakeModelParams(geometry, config);
  p.adapter.InitRandom(rng, 0.1);
  p.classifier.InitRandom(rng, 0.1);
  p.scorer.head.InitRandom(rng, 0.1);
  return p;
}

EpisodeInputs PrepareEpisode(const PatchTokenMaps& query,
                             std::span<const PatchTokenMaps> prompts,
                             const TextPrototypes& text,
                             const ModelConfig& config, int label) {
  if (label != 0 && label != 1) {
    Fail(ErrorKind::kInvalidInput, kModule, "label must be 0 or 1");
  }
  EpisodeInputs in;
  in.patch_map = PatchResidualMap(query, prompts, config.layers);
  in.query_global = query.class_embedding;
  for (const auto& p : prompts) in.prompt_globals.push_back(p.class_embedding);
  in.text_score = TextPriorScore(query.class_embedding, text, config.text);
  in.label = label;
  return in;
}

ScoreBreakdown Forward(const ModelParams& params, const EpisodeInputs& inputs) {
  ScoreBreakdown out;
  out.patch_map = inputs.patch_map;
  out.patch_score = PatchLevelScore(inputs.patch_map);
  const Vec prototype = PromptPrototype(inputs.prompt_globals, params.adapter);
  const Vec residual = ImageResidual(inputs.query_global, prototype, params.adapter);
  out.image_score = ImageLevelClassify(residual, params.classifier);
  out.text_score = inputs.text_score;
  out.holistic_map = MakeHolisticMap(inputs.patch_map, out.image_score, out.text_score);
  out.head_output = params.scorer.head.Forward(out.holistic_map.Flatten())(0);
  out.score = AnomalyScore(out.holistic_map, inputs.patch_map, params.scorer);
  return out;
}

BatchLoss ComputeLoss(const ModelParams& params,
                      std::span<const EpisodeInputs> batch,
                      const FocalLossConfig& focal, ModelParams* grad) {
  if (batch.empty()) Fail(ErrorKind::kInvalidInput, kModule, "empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  BatchLoss loss;

  for (const auto& item : batch) {
    const std::size_t k = item.prompt_globals.size();
    if (k == 0) Fail(ErrorKind::kInvalidInput, kModule, "episode without prompts");

    // Image-level branch.
    std::vector<MlpTrace> prompt_traces(k);
    Vec prototype = Vec::Zero(params.adapter.output_dim());
    for (std::size_t j = 0; j < k; ++j) {
      prototype += params.adapter.Forward(item.prompt_globals[j], &prompt_traces[j]);
    }
    prototype /= static_cast<double>(k);
    MlpTrace query_trace;
    const Vec adapted = params.adapter.Forward(item.query_global, &query_trace);
    const Vec residual = adapted - prototype;
    MlpTrace classifier_trace;
    const double logit = params.classifier.Forward(residual, &classifier_trace)(0);
    const double raw_si = Sigmoid(logit);
    const double s_i = ClampOpenUnit(raw_si);

    // Holistic branch.
    const HolisticMap hmap = MakeHolisticMap(item.patch_map, s_i, item.text_score);
    MlpTrace head_trace;
    const double head =
        params.scorer.head.Forward(hmap.Flatten(), &head_trace)(0);
    const double score =
        head + params.scorer.alpha * PatchLevelScore(item.patch_map);
    const double p = Sigmoid(score);

    const double irl_i = FocalLoss(s_i, item.label, focal);
    const double hol_i = FocalLoss(p, item.label, focal);
    if (!std::isfinite(irl_i) || !std::isfinite(hol_i)) {
      Fail(ErrorKind::kNumeric, kModule, "non-finite loss in batch item");
    }
    loss.irl += irl_i * inv_n;
    loss.holistic += hol_i * inv_n;

    if (grad == nullptr) continue;

    const double d_score = FocalLossGradient(p, item.label, focal) * p * (1.0 - p) * inv_n;
    Vec d_head_out(1);
    d_head_out(0) = d_score;
    const Vec d_hmap = params.scorer.head.Backward(head_trace, d_head_out, &grad->scorer.head);

    double d_si = FocalLossGradient(s_i, item.label, focal) * inv_n + d_hmap.sum();
    const bool clamped = raw_si != s_i;
    const double d_logit = clamped ? 0.0 : d_si * raw_si * (1.0 - raw_si);
    Vec d_logit_vec(1);
    d_logit_vec(0) = d_logit;
    const Vec d_residual =
        params.classifier.Backward(classifier_trace, d_logit_vec, &grad->classifier);

    params.adapter.Backward(query_trace, d_residual, &grad->adapter);
    const Vec d_prompt = -d_residual / static_cast<double>(k);
    for (std::size_t j = 0; j < k; ++j) {
      params.adapter.Backward(prompt_traces[j], d_prompt, &grad->adapter);
    }
  }
  loss.total = TotalLoss(loss.irl, loss.holistic);
  return loss;
}

}  // namespace inctrl
