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

#include "inctrl/scoring.hpp"

#include <string>

#include "inctrl/error.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "scoring";

void CheckLabels(std::span<const int> labels) {
  for (int y : labels) {
    if (y != 0 && y != 1) {
      Fail(ErrorKind::kInvalidInput, kModule, "labels must be 0 or 1");
    }
  }
}

}  // namespace

void FocalLossConfig::Validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    Fail(ErrorKind::kInvalidInput, kModule, "focal gamma must be >= 0");
  }
  if (!(pos_weight > 0.0 && pos_weight <= 1.0)) {
    Fail(ErrorKind::kInvalidInput, kModule, "focal pos_weight must be in (0, 1]");
  }
}

double FocalLossGradient(double p, int label, const FocalLossConfig& config) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  const double pt = label == 1 ? p : 1.0 - p;
  const double wt = label == 1 ? config.pos_weight : 1.0 - config.pos_weight;
  const double sign = label == 1 ? 1.0 : -1.0;
  const double g = config.gamma;
  const double one_minus = 1.0 - pt;
  double d_pt = -wt * std::pow(one_minus, g) / pt;
  if (g != 0.0) {
    d_pt += wt * g * std::pow(one_minus, g - 1.0) * std::log(pt);
  }
  return sign * d_pt;
}

Vec HolisticMap::Flatten() const {
  Vec flat(values.size());
  const Eigen::Index w = values.cols();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < w; ++j) flat(i * w + j) = values(i, j);
  }
  return flat;
}

HolisticMap MakeHolisticMap(const ResidualMap& patch_map, double image_score,
                            double text_score) {
  if (!(image_score > 0.0 && image_score < 1.0) ||
      !(text_score > 0.0 && text_score < 1.0)) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "image and text scores must lie in (0, 1)");
  }
  HolisticMap out;
  out.values = patch_map.values.array() + (image_score + text_score);
  return out;
}

double AnomalyScore(const HolisticMap& map, const ResidualMap& patch_map,
                    const HolisticScorerParams& params) {
  if (map.values.size() != params.head.input_dim()) {
    Fail(ErrorKind::kContract, kModule,
         "holistic map has " + std::to_string(map.values.size()) +
             " cells, head expects " + std::to_string(params.head.input_dim()));
  }
  if (params.head.output_dim() != 1) {
    Fail(ErrorKind::kContract, kModule, "holistic head must emit one value");
  }
  const double head = params.head.Forward(map.Flatten())(0);
  const double score = head + params.alpha * PatchLevelScore(patch_map);
  if (!std::isfinite(score)) {
    Fail(ErrorKind::kNumeric, kModule, "non-finite anomaly score");
  }
  return score;
}

double HolisticLoss(std::span<const double> scores, std::span<const int> labels,
                    const FocalLossConfig& config) {
  if (scores.size() != labels.size() || scores.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "scores and labels must be nonempty and equally long");
  }
  CheckLabels(labels);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += FocalLoss(Sigmoid(scores[i]), labels[i], config);
  }
  return total / static_cast<double>(scores.size());
}

double TotalLoss(double irl, double holistic) {
  if (!std::isfinite(irl) || !std::isfinite(holistic)) {
    Fail(ErrorKind::kNumeric, kModule, "non-finite loss component");
  }
  return irl + holistic;
}

}  // namespace inctrl
