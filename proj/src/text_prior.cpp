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

#include "inctrl/text_prior.hpp"

#include <cmath>
#include <sstream>

#include "inctrl/error.hpp"
#include "inctrl/scoring.hpp"
#include "prompt_templates.inc"

namespace inctrl {
namespace {

constexpr char kModule[] = "text_prior";

std::string Render(const std::string& tmpl, const std::string& label) {
  const auto pos = tmpl.find(kClassSlot);
  return tmpl.substr(0, pos) + label + tmpl.substr(pos + kClassSlot.size());
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Vec MeanEmbedding(const std::vector<std::string>& prompts,
                  const EncoderBackend& backend, bool normalize_each) {
  Vec sum = Vec::Zero(backend.geometry().global_dim);
  for (const auto& p : prompts) sum += backend.EncodeText(p, normalize_each);
  return sum / static_cast<double>(prompts.size());
}

}  // namespace

PromptStyle ParsePromptStyle(std::string_view name) {
  if (name == "defect") return PromptStyle::kDefect;
  if (name == "semantic") return PromptStyle::kSemantic;
  Fail(ErrorKind::kInvalidInput, kModule,
       "unknown prompt style '" + std::string(name) + "'");
}

std::string_view PromptStyleName(PromptStyle style) {
  return style == PromptStyle::kDefect ? "defect" : "semantic";
}

std::vector<std::string> PromptBank::NormalPrompts() const {
  std::vector<std::string> out;
  for (const auto& t : normal_templates) out.push_back(Render(t, class_label));
  return out;
}

std::vector<std::string> PromptBank::AbnormalPrompts() const {
  std::vector<std::string> out;
  for (const auto& t : abnormal_templates) out.push_back(Render(t, class_label));
  return out;
}

void PromptBank::Validate() const {
  if (class_label.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "empty class label");
  }
  if (normal_templates.empty() || abnormal_templates.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "prompt bank needs normal and abnormal templates");
  }
  for (const auto* list : {&normal_templates, &abnormal_templates}) {
    for (const auto& t : *list) {
      const auto first = t.find(kClassSlot);
      if (first == std::string::npos ||
          t.find(kClassSlot, first + 1) != std::string::npos) {
        Fail(ErrorKind::kInvalidInput, kModule,
             "template must contain exactly one [c] slot: '" + t + "'");
      }
    }
  }
}

PromptBank ParsePromptTemplates(std::string_view text, std::string class_label) {
  PromptBank bank;
  bank.class_label = std::move(class_label);
  std::vector<std::string>* section = nullptr;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[normal]") {
      section = &bank.normal_templates;
    } else if (line == "[abnormal]") {
      section = &bank.abnormal_templates;
    } else if (section == nullptr) {
      Fail(ErrorKind::kParse, kModule,
           "line " + std::to_string(line_no) + ": template before any section");
    } else {
      section->push_back(line);
    }
  }
  bank.Validate();
  return bank;
}

std::string_view BundledPromptTemplates(PromptStyle style) {
  return style == PromptStyle::kDefect ? kDefectPromptTemplates
                                       : kSemanticPromptTemplates;
}

PromptBank BuildPromptBank(std::string class_label, PromptStyle style) {
  if (class_label.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "empty class label");
  }
  return ParsePromptTemplates(BundledPromptTemplates(style),
                              std::move(class_label));
}

TextPrototypes ComputeTextPrototypes(const PromptBank& bank,
                                     const EncoderBackend& backend,
                                     bool normalize_each) {
  bank.Validate();
  return {MeanEmbedding(bank.NormalPrompts(), backend, normalize_each),
          MeanEmbedding(bank.AbnormalPrompts(), backend, normalize_each)};
}

double TextPriorScore(const Vec& image_global, const TextPrototypes& protos,
                      const TextPriorOptions& options) {
  if (image_global.size() != protos.normal.size() ||
      image_global.size() != protos.abnormal.size()) {
    Fail(ErrorKind::kContract, kModule, "text/image dimension mismatch");
  }
  if (!(options.temperature > 0.0)) {
    Fail(ErrorKind::kInvalidInput, kModule, "temperature must be > 0");
  }
  auto unit = [&](const Vec& v) -> Vec {
    if (!options.normalize) return v;
    const double n = v.norm();
    return n > 0.0 ? Vec(v / n) : v;
  };
  const Vec v = unit(image_global);
  const double normal_logit = unit(protos.normal).dot(v) / options.temperature;
  const double abnormal_logit = unit(protos.abnormal).dot(v) / options.temperature;
  if (!std::isfinite(normal_logit) || !std::isfinite(abnormal_logit)) {
    Fail(ErrorKind::kNumeric, kModule, "non-finite text logits");
  }
  // exp(a) / (exp(n) + exp(a)) after subtracting the larger logit.
  const double m = std::max(normal_logit, abnormal_logit);
  const double en = std::exp(normal_logit - m);
  const double ea = std::exp(abnormal_logit - m);
  return ClampOpenUnit(ea / (en + ea));
}

}  // namespace inctrl
