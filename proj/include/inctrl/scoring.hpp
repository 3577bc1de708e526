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

#ifndef INCTRL_SCORING_HPP_
#define INCTRL_SCORING_HPP_

#include <algorithm>
#include <cmath>
#include <span>

#include "inctrl/mlp.hpp"
#include "inctrl/patch_residual.hpp"
#include "inctrl/types.hpp"

namespace inctrl {

struct FocalLossConfig {
  double gamma = 2.0;
  double pos_weight = 0.25;

  void Validate() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Image and text scores are kept this far inside (0, 1) so a saturated
// sigmoid or softmax still satisfies the open-interval contract.
inline constexpr double kScoreEpsilon = 1e-12;

inline double ClampOpenUnit(double p) {
  return std::clamp(p, kScoreEpsilon, 1.0 - kScoreEpsilon);
}

template <typename Scalar>
Scalar Sigmoid(Scalar x) {
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// -w_t (1 - p_t)^gamma log(p_t), with p clamped to [1e-7, 1 - 1e-7].
template <typename Scalar>
Scalar FocalLoss(Scalar p, int label, const FocalLossConfig& config) {
  const Scalar q = std::clamp(p, Scalar(kProbabilityClamp),
                              Scalar(1.0 - kProbabilityClamp));
  const Scalar pt = label == 1 ? q : Scalar(1) - q;
  const Scalar wt = label == 1 ? Scalar(config.pos_weight)
                               : Scalar(1.0 - config.pos_weight);
  return -wt * std::pow(Scalar(1) - pt, Scalar(config.gamma)) * std::log(pt);
}

// d FocalLoss / d p; zero where the clamp is active.
double FocalLossGradient(double p, int label, const FocalLossConfig& config);

// M_x with s_i and s_a broadcast-added to every cell.
struct HolisticMap {
  Mat values;

  // Row-major flattening (index i * w + j), the head's input layout.
  Vec Flatten() const;
};

HolisticMap MakeHolisticMap(const ResidualMap& patch_map, double image_score,
                            double text_score);

struct HolisticScorerParams {
  Mlp head;  // (h*w) -> hidden... -> 1
  double alpha = 1.0;

  friend bool operator==(const HolisticScorerParams&,
                         const HolisticScorerParams&) = default;
};

// head(flattened map) + alpha * max(patch_map). Unbounded; only its ranking
// matters downstream.
double AnomalyScore(const HolisticMap& map, const ResidualMap& patch_map,
                    const HolisticScorerParams& params);

// Mean focal loss over sigmoid(score).
double HolisticLoss(std::span<const double> scores, std::span<const int> labels,
                    const FocalLossConfig& config);

double TotalLoss(double irl, double holistic);

}  // namespace inctrl

#endif  // INCTRL_SCORING_HPP_
