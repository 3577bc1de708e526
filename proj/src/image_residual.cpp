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

#include "inctrl/image_residual.hpp"

#include <cmath>
#include <string>

#include "inctrl/error.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "image_residual";

std::string DescribeParams(const Mlp& net) {
  std::string out = "widths=";
  for (int w : net.widths()) out += std::to_string(w) + ",";
  out += net.AllFinite() ? " params finite" : " params contain non-finite values";
  return out;
}

}  // namespace

Mlp MakeAdapter(int global_dim, int hidden) {
  return Mlp{global_dim, hidden, global_dim};
}

Mlp MakeImageClassifier(int global_dim, std::span<const int> hidden) {
  std::vector<int> widths{global_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  return Mlp(widths);
}

Vec AdaptFeature(const Vec& global, const Mlp& adapter) {
  if (global.size() != adapter.input_dim()) {
    Fail(ErrorKind::kContract, kModule, "global feature dimension mismatch");
  }
  Vec out = adapter.Forward(global);
  if (!out.allFinite()) {
    Fail(ErrorKind::kNumeric, kModule,
         "non-finite adapter output (" + DescribeParams(adapter) + ")");
  }
  return out;
}

Vec PromptPrototype(std::span<const Vec> prompts, const Mlp& adapter) {
  if (prompts.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "empty prompt list");
  }
  Vec sum = Vec::Zero(adapter.output_dim());
  for (const auto& p : prompts) sum += AdaptFeature(p, adapter);
  return sum / static_cast<double>(prompts.size());
}

Vec ImageResidual(const Vec& query_global, const Vec& prototype,
                  const Mlp& adapter) {
  if (prototype.size() != adapter.output_dim()) {
    Fail(ErrorKind::kContract, kModule, "prototype dimension mismatch");
  }
  return AdaptFeature(query_global, adapter) - prototype;
}

double ImageLevelClassify(const Vec& residual, const Mlp& classifier) {
  if (residual.size() != classifier.input_dim() ||
      classifier.output_dim() != 1) {
    Fail(ErrorKind::kContract, kModule, "classifier shape mismatch");
  }
  const double logit = classifier.Forward(residual)(0);
  if (!std::isfinite(logit)) {
    Fail(ErrorKind::kNumeric, kModule,
         "non-finite classifier logit (" + DescribeParams(classifier) + ")");
  }
  return ClampOpenUnit(Sigmoid(logit));
}

double IrlLoss(std::span<const double> predictions, std::span<const int> labels,
               const FocalLossConfig& config) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "predictions and labels must be nonempty and equally long");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = predictions[i];
    // Saturated sigmoids reach exactly 0 or 1 in double; the focal clamp
    // absorbs those, anything beyond is a caller bug.
    if (!(p >= 0.0 && p <= 1.0)) {
      Fail(ErrorKind::kInvalidInput, kModule,
           "prediction outside (0, 1): " + std::to_string(p));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      Fail(ErrorKind::kInvalidInput, kModule, "labels must be 0 or 1");
    }
    total += FocalLoss(p, labels[i], config);
  }
  return total / static_cast<double>(predictions.size());
}

}  // namespace inctrl
