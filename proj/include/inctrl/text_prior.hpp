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

#ifndef INCTRL_TEXT_PRIOR_HPP_
#define INCTRL_TEXT_PRIOR_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "inctrl/encoder.hpp"
#include "inctrl/types.hpp"

namespace inctrl {

enum class PromptStyle { kDefect, kSemantic };

PromptStyle ParsePromptStyle(std::string_view name);
std::string_view PromptStyleName(PromptStyle style);

inline constexpr std::string_view kClassSlot = "[c]";

// Normal and abnormal template lists, each template holding one `[c]` slot.
struct PromptBank {
  std::vector<std::string> normal_templates;
  std::vector<std::string> abnormal_templates;
  std::string class_label;

  std::vector<std::string> NormalPrompts() const;
  std::vector<std::string> AbnormalPrompts() const;
  void Validate() const;
};

// Parses the template file format: `[normal]` and `[abnormal]` section
// headers, one template per line, `#` comments and blank lines ignored.
PromptBank ParsePromptTemplates(std::string_view text, std::string class_label);

// Bundled template text for a style (the contents of data/prompts/*.txt).
std::string_view BundledPromptTemplates(PromptStyle style);

PromptBank BuildPromptBank(std::string class_label, PromptStyle style);

struct TextPrototypes {
  Vec normal;
  Vec abnormal;
};

// Mean text embedding of each template list. `normalize_each` L2-normalizes
// the individual prompt embeddings before averaging.
TextPrototypes ComputeTextPrototypes(const PromptBank& bank,
                                     const EncoderBackend& backend,
                                     bool normalize_each = true);

struct TextPriorOptions {
  double temperature = 1.0;
  bool normalize = true;  // L2-normalize image and prototype vectors
};

// Two-way softmax probability of the abnormal prototype.
double TextPriorScore(const Vec& image_global, const TextPrototypes& protos,
                      const TextPriorOptions& options = {});

}  // namespace inctrl

#endif  // INCTRL_TEXT_PRIOR_HPP_
