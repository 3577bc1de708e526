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

#ifndef INCTRL_MODEL_HPP_
#define INCTRL_MODEL_HPP_

#include <span>
#include <string>
#include <vector>

#include "inctrl/encoder.hpp"
#include "inctrl/image_residual.hpp"
#include "inctrl/mlp.hpp"
#include "inctrl/patch_residual.hpp"
#include "inctrl/random.hpp"
#include "inctrl/scoring.hpp"
#include "inctrl/text_prior.hpp"

namespace inctrl {

struct ModelConfig {
  LayerSelection layers;  // empty = all backend layers
  int adapter_hidden = 0;  // 0 = global_dim / 4
  std::vector<int> classifier_hidden = {128, 64};
  std::vector<int> head_hidden = {64, 32};
  double alpha = 1.0;
  FocalLossConfig focal;
  TextPriorOptions text;
  PromptStyle prompt_style = PromptStyle::kDefect;

  void Validate() const;
};

// Everything that learns: adapter, image-level classifier, holistic head.
struct ModelParams {
  Mlp adapter;
  Mlp classifier;
  HolisticScorerParams scorer;

  Eigen::Index ParameterCount() const;
  Vec Flatten() const;
  void Unflatten(const Vec& flat);
  void SetZero();
  bool AllFinite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Zero-valued parameters shaped for the backend geometry.
ModelParams MakeModelParams(const BackendGeometry& geometry,
                            const ModelConfig& config);

// Adapter hidden layer He-initialized with a small output layer, classifier
// and head He-initialized with a reduced output layer, all biases zero.
ModelParams InitModelParams(const BackendGeometry& geometry,
                            const ModelConfig& config, Rng& rng);

// Parameter-free inputs of one query/prompt-set pair. The patch map and
// text score do not depend on learnable parameters, so they are computed
// once per episode.
struct EpisodeInputs {
  ResidualMap patch_map;
  Vec query_global;
  std::vector<Vec> prompt_globals;
  double text_score = 0.5;
  int label = 0;
};

EpisodeInputs PrepareEpisode(const PatchTokenMaps& query,
                             std::span<const PatchTokenMaps> prompts,
                             const TextPrototypes& text,
                             const ModelConfig& config, int label = 0);

struct ScoreBreakdown {
  ResidualMap patch_map;
  HolisticMap holistic_map;
  double patch_score = 0.0;  // s_p
  double image_score = 0.0;  // s_i
  double text_score = 0.0;   // s_a
  double head_output = 0.0;
  double score = 0.0;        // s(x)
};

ScoreBreakdown Forward(const ModelParams& params, const EpisodeInputs& inputs);

struct BatchLoss {
  double irl = 0.0;
  double holistic = 0.0;
  double total = 0.0;
};

// Batch losses; when `grad` is given (shaped like params), the gradient of
// the total loss is accumulated into it.
BatchLoss ComputeLoss(const ModelParams& params,
                      std::span<const EpisodeInputs> batch,
                      const FocalLossConfig& focal, ModelParams* grad = nullptr);

}  // namespace inctrl

#endif  // INCTRL_MODEL_HPP_
