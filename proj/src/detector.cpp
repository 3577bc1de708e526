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

#include "inctrl/detector.hpp"

#include <algorithm>

#include "inctrl/error.hpp"

namespace inctrl {

FeatureCache::FeatureCache(std::shared_ptr<const EncoderBackend> backend,
                           PreprocessConfig preprocess)
    : backend_(std::move(backend)), preprocess_(std::move(preprocess)) {
  if (!backend_) Fail(ErrorKind::kInvalidInput, "encoder", "null backend");
  if (preprocess_.resolution != backend_->geometry().resolution) {
    Fail(ErrorKind::kContract, "encoder",
         "preprocess resolution " + std::to_string(preprocess_.resolution) +
             " does not match backend resolution " +
             std::to_string(backend_->geometry().resolution));
  }
}

const PatchTokenMaps& FeatureCache::Encode(const std::string& image_path) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = images_.find(image_path); it != images_.end()) {
      return it->second;
    }
  }
  PatchTokenMaps tokens =
      backend_->EncodeImage(LoadImageTensor(image_path, preprocess_));
  tokens.Validate();
  std::lock_guard lock(mutex_);
  return images_.try_emplace(image_path, std::move(tokens)).first->second;
}

std::vector<PatchTokenMaps> FeatureCache::EncodeAll(
    std::span<const std::string> paths) const {
  std::vector<PatchTokenMaps> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(Encode(p));
  return out;
}

const TextPrototypes& FeatureCache::TextFor(const std::string& class_label,
                                            PromptStyle style) const {
  const auto key = std::make_pair(style, class_label);
  {
    std::lock_guard lock(mutex_);
    if (auto it = text_.find(key); it != text_.end()) return it->second;
  }
  auto protos =
      ComputeTextPrototypes(BuildPromptBank(class_label, style), *backend_);
  std::lock_guard lock(mutex_);
  return text_.try_emplace(key, std::move(protos)).first->second;
}

Detector::Detector(std::shared_ptr<const FeatureCache> features,
                   ModelConfig config, ModelParams params)
    : features_(std::move(features)),
      config_(std::move(config)),
      params_(std::move(params)) {
  if (!features_) Fail(ErrorKind::kInvalidInput, "detector", "null feature cache");
  config_.Validate();
  const auto& geo = features_->backend().geometry();
  if (params_.adapter.input_dim() != geo.global_dim ||
      params_.classifier.input_dim() != geo.global_dim ||
      params_.scorer.head.input_dim() != geo.grid.size()) {
    Fail(ErrorKind::kContract, "detector",
         "parameters do not match the backend geometry");
  }
}

ScoreBreakdown Detector::Score(const std::string& query,
                               std::span<const std::string> prompts,
                               const std::string& class_label) const {
  const auto prompt_tokens = features_->EncodeAll(prompts);
  return Score(features_->Encode(query), prompt_tokens, TextFor(class_label));
}

ScoreBreakdown Detector::Score(const PatchTokenMaps& query,
                               std::span<const PatchTokenMaps> prompts,
                               const TextPrototypes& text) const {
  return Forward(params_, PrepareEpisode(query, prompts, text, config_));
}

std::string MajorityCategory(std::span<const std::string> categories) {
  if (categories.empty()) {
    Fail(ErrorKind::kInvalidInput, "detector", "no categories to vote on");
  }
  std::map<std::string, int> counts;
  for (const auto& c : categories) ++counts[c];
  const std::string& winner =
      std::max_element(counts.begin(), counts.end(),
                       [](const auto& a, const auto& b) {
                         return a.second < b.second;
                       })
          ->first;
  return winner.empty() ? std::string(kDefaultClassLabel) : winner;
}

}  // namespace inctrl
