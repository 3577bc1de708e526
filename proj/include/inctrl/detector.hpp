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

#ifndef INCTRL_DETECTOR_HPP_
#define INCTRL_DETECTOR_HPP_

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inctrl/encoder.hpp"
#include "inctrl/image.hpp"
#include "inctrl/model.hpp"

namespace inctrl {

// Memoized frozen-encoder outputs. The encoder never changes, so cached
// entries never go stale. Thread-safe.
class FeatureCache {
 public:
  FeatureCache(std::shared_ptr<const EncoderBackend> backend,
               PreprocessConfig preprocess);

  const EncoderBackend& backend() const { return *backend_; }
  const PreprocessConfig& preprocess() const { return preprocess_; }

  const PatchTokenMaps& Encode(const std::string& image_path) const;
  std::vector<PatchTokenMaps> EncodeAll(std::span<const std::string> paths) const;
  const TextPrototypes& TextFor(const std::string& class_label,
                                PromptStyle style) const;

 private:
  std::shared_ptr<const EncoderBackend> backend_;
  PreprocessConfig preprocess_;

  mutable std::mutex mutex_;
  mutable std::map<std::string, PatchTokenMaps> images_;
  mutable std::map<std::pair<PromptStyle, std::string>, TextPrototypes> text_;
};

// Inference pipeline: cached encoder features plus learned parameters.
class Detector {
 public:
  Detector(std::shared_ptr<const FeatureCache> features, ModelConfig config,
           ModelParams params);

  const FeatureCache& features() const { return *features_; }
  const EncoderBackend& backend() const { return features_->backend(); }
  const ModelConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }

  const TextPrototypes& TextFor(const std::string& class_label) const {
    return features_->TextFor(class_label, config_.prompt_style);
  }

  ScoreBreakdown Score(const std::string& query,
                       std::span<const std::string> prompts,
                       const std::string& class_label) const;
  ScoreBreakdown Score(const PatchTokenMaps& query,
                       std::span<const PatchTokenMaps> prompts,
                       const TextPrototypes& text) const;

 private:
  std::shared_ptr<const FeatureCache> features_;
  ModelConfig config_;
  ModelParams params_;
};

inline constexpr std::string_view kDefaultClassLabel = "object";

// Text-prompt class label for a prompt set: the most frequent category
// (ties go to the lexicographically smallest; an unnamed category maps to
// kDefaultClassLabel).
std::string MajorityCategory(std::span<const std::string> categories);

}  // namespace inctrl

#endif  // INCTRL_DETECTOR_HPP_
