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

#ifndef INCTRL_IMAGE_RESIDUAL_HPP_
#define INCTRL_IMAGE_RESIDUAL_HPP_

#include <span>
#include <vector>

#include "inctrl/mlp.hpp"
#include "inctrl/scoring.hpp"
#include "inctrl/types.hpp"

namespace inctrl {

// Adapter psi: global_dim -> hidden (ReLU) -> global_dim.
Mlp MakeAdapter(int global_dim, int hidden);

// Image-level classifier eta: global_dim -> hidden... -> 1 logit.
Mlp MakeImageClassifier(int global_dim, std::span<const int> hidden);

Vec AdaptFeature(const Vec& global, const Mlp& adapter);

// Mean of the adapted prompt features.
Vec PromptPrototype(std::span<const Vec> prompts, const Mlp& adapter);

// Adapted query feature minus the prompt prototype.
Vec ImageResidual(const Vec& query_global, const Vec& prototype,
                  const Mlp& adapter);

// Sigmoid of the classifier logit; always in (0, 1) barring saturation.
double ImageLevelClassify(const Vec& residual, const Mlp& classifier);

// Mean focal loss of image-level predictions.
double IrlLoss(std::span<const double> predictions, std::span<const int> labels,
               const FocalLossConfig& config);

}  // namespace inctrl

#endif  // INCTRL_IMAGE_RESIDUAL_HPP_
