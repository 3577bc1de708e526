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

#include "inctrl/config.hpp"

#include <cmath>
#include <sstream>

#include "inctrl/error.hpp"
#include "inctrl/io.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "config";

const char* const kModelSections[] = {"encoder", "preprocess", "patch_residual",
                                      "adapter", "classifier", "scoring",
                                      "text_prior"};

std::string Join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

std::string TypeName(const nlohmann::json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

bool SameKind(const nlohmann::json& base, const nlohmann::json& v) {
  if (base.is_number_integer()) return v.is_number_integer();
  if (base.is_number()) return v.is_number();
  return base.type() == v.type();
}

void Leaves(const nlohmann::json& node, const std::string& prefix,
            std::vector<std::string>* out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) Leaves(v, Join(prefix, k), out);
  } else {
    out->push_back(prefix);
  }
}

nlohmann::json::json_pointer Pointer(const std::string& key) {
  if (key.empty() || key.find_first_of("/~") != std::string::npos) {
    Fail(ErrorKind::kUsage, kModule, "unknown config key '" + key + "'");
  }
  std::string p;
  std::istringstream in(key);
  std::string part;
  while (std::getline(in, part, '.')) p += "/" + part;
  return nlohmann::json::json_pointer(p);
}

template <typename T>
T Get(const RunConfig& c, const std::string& key) {
  try {
    return c.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    Fail(ErrorKind::kUsage, kModule, "config key '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string_view ConfigSourceName(ConfigSource source) {
  switch (source) {
    case ConfigSource::kDefault:
      return "default";
    case ConfigSource::kCheckpoint:
      return "checkpoint";
    case ConfigSource::kFile:
      return "file";
    case ConfigSource::kFlag:
      return "flag";
  }
  return "default";
}

const nlohmann::json& RunConfig::Defaults() {
  static const nlohmann::json kDefaults = nlohmann::json::parse(R"({
    "encoder": {
      "backend": "mock",
      "external_dir": "",
      "mock": {"layers": 3, "grid": 4, "patch_dim": 8, "global_dim": 16,
               "seed": 0, "jitter": 0.01}
    },
    "preprocess": {
      "resolution": 240,
      "mean": [0.48145466, 0.4578275, 0.40821073],
      "std": [0.26862954, 0.26130258, 0.27577711]
    },
    "patch_residual": {"layers": []},
    "adapter": {"hidden": 0},
    "classifier": {"hidden": [128, 64]},
    "scoring": {
      "alpha": 1.0,
      "head": {"hidden": [64, 32]},
      "focal": {"gamma": 2.0, "pos_weight": 0.25}
    },
    "text_prior": {"style": "defect", "temperature": 1.0, "normalize": true,
                   "class_label": ""},
    "training": {"epochs": 10, "batch_size": 48, "learning_rate": 0.001, "k": 2,
                 "seed": 0, "optimizer": "adam", "same_category_prompts": true},
    "data": {
      "protocol": {"mode": "plain", "normal_selector": ""},
      "prompt_split": "train",
      "score_split": "test"
    },
    "eval": {"k": 2, "seeds": [1, 2, 3], "class_count": 0, "per_category": false}
  })");
  return kDefaults;
}

RunConfig::RunConfig() : tree_(Defaults()) {
  std::vector<std::string> keys;
  Leaves(tree_, "", &keys);
  for (const auto& k : keys) provenance_[k] = {ConfigSource::kDefault, ""};
}

void RunConfig::MergeFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kUsage, kModule, "config file not found: " + path.string());
  }
  nlohmann::json overlay;
  try {
    overlay = nlohmann::json::parse(ReadFileText(path), nullptr, true,
                                    /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorKind::kParse, kModule, path.string() + ": " + e.what());
  }
  if (!overlay.is_object()) {
    Fail(ErrorKind::kParse, kModule, path.string() + ": top level must be an object");
  }
  Merge(overlay, ConfigSource::kFile, path.string());
}

void RunConfig::Merge(const nlohmann::json& overlay, ConfigSource source,
                      const std::string& origin) {
  MergeAt("", overlay, source, origin);
}

void RunConfig::MergeAt(const std::string& prefix, const nlohmann::json& overlay,
                        ConfigSource source, const std::string& origin) {
  for (const auto& [k, v] : overlay.items()) {
    const std::string key = Join(prefix, k);
    if (v.is_object()) {
      MergeAt(key, v, source, origin);
    } else {
      Set(key, v, source, origin);
    }
  }
}

void RunConfig::Set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    Fail(ErrorKind::kUsage, kModule,
         "expected key=value, got '" + std::string(assignment) + "'");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Set(key, value, ConfigSource::kFlag);
}

void RunConfig::Set(const std::string& key, const nlohmann::json& value,
                    ConfigSource source, const std::string& origin) {
  const auto ptr = Pointer(key);
  const auto& defaults = Defaults();
  if (!defaults.contains(ptr) || defaults.at(ptr).is_object()) {
    Fail(ErrorKind::kUsage, kModule, "unknown config key '" + key + "'");
  }
  const auto& base = defaults.at(ptr);
  if (key == "patch_residual.layers" && value == "all") {
    Set(key, nlohmann::json::array(), source, origin);
    return;
  }
  if (!SameKind(base, value)) {
    Fail(ErrorKind::kUsage, kModule,
         "config key '" + key + "' expects " + TypeName(base) + ", got " +
             TypeName(value));
  }
  tree_[ptr] = value;
  provenance_[key] = {source, origin};
}

const nlohmann::json& RunConfig::at(const std::string& key) const {
  const auto ptr = Pointer(key);
  if (!tree_.contains(ptr)) {
    Fail(ErrorKind::kUsage, kModule, "unknown config key '" + key + "'");
  }
  return tree_.at(ptr);
}

ConfigSource RunConfig::source(const std::string& key) const {
  const auto it = provenance_.find(key);
  if (it == provenance_.end()) {
    Fail(ErrorKind::kUsage, kModule, "unknown config key '" + key + "'");
  }
  return it->second.first;
}

std::string RunConfig::origin(const std::string& key) const {
  const auto it = provenance_.find(key);
  return it == provenance_.end() ? std::string() : it->second.second;
}

nlohmann::json RunConfig::ModelSnapshot() const {
  nlohmann::json out = nlohmann::json::object();
  for (const char* s : kModelSections) out[s] = tree_.at(s);
  return out;
}

std::string RunConfig::Describe() const {
  std::string out;
  for (const auto& [key, prov] : provenance_) {
    out += key + " = " + at(key).dump() + "  (" +
           std::string(ConfigSourceName(prov.first));
    if (!prov.second.empty()) out += ": " + prov.second;
    out += ")\n";
  }
  return out;
}

void RunConfig::Validate() const {
  const std::string backend = Get<std::string>(*this, "encoder.backend");
  if (backend == "mock") {
    const auto mock = ToMockEncoderConfig(*this);
    MockEncoder probe(mock);
    (void)probe;
  } else if (backend == "external") {
    const auto dir = Get<std::string>(*this, "encoder.external_dir");
    if (dir.empty() || !std::filesystem::is_directory(dir)) {
      Fail(ErrorKind::kInvalidInput, kModule,
           "encoder.external_dir must name an existing directory");
    }
  } else {
    Fail(ErrorKind::kInvalidInput, kModule,
         "encoder.backend must be 'mock' or 'external', got '" + backend + "'");
  }
  ToPreprocessConfig(*this);
  ToModelConfig(*this).Validate();
  ToTrainConfig(*this).Validate();
  const auto protocol = ToProtocolSpec(*this);
  if (protocol.mode != ProtocolMode::kPlain && protocol.normal_selector.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "data.protocol.normal_selector is required for mode '" +
             std::string(ProtocolModeName(protocol.mode)) + "'");
  }
  ToEvalOptions(*this).Validate();
}

MockEncoderConfig ToMockEncoderConfig(const RunConfig& c) {
  MockEncoderConfig m;
  m.layers = Get<int>(c, "encoder.mock.layers");
  m.grid = Get<int>(c, "encoder.mock.grid");
  m.patch_dim = Get<int>(c, "encoder.mock.patch_dim");
  m.global_dim = Get<int>(c, "encoder.mock.global_dim");
  const auto seed = Get<long long>(c, "encoder.mock.seed");
  if (seed < 0) Fail(ErrorKind::kInvalidInput, kModule, "encoder.mock.seed must be >= 0");
  m.seed = static_cast<std::uint64_t>(seed);
  m.jitter = Get<double>(c, "encoder.mock.jitter");
  m.resolution = Get<int>(c, "preprocess.resolution");
  return m;
}

PreprocessConfig ToPreprocessConfig(const RunConfig& c) {
  PreprocessConfig p;
  p.resolution = Get<int>(c, "preprocess.resolution");
  if (p.resolution < 1) {
    Fail(ErrorKind::kInvalidInput, kModule, "preprocess.resolution must be >= 1");
  }
  const auto mean = Get<std::vector<double>>(c, "preprocess.mean");
  const auto std = Get<std::vector<double>>(c, "preprocess.std");
  if (mean.size() != 3 || std.size() != 3) {
    Fail(ErrorKind::kInvalidInput, kModule, "preprocess.mean and .std need 3 values");
  }
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(mean[i]) || !(std[i] > 0.0) || !std::isfinite(std[i])) {
      Fail(ErrorKind::kInvalidInput, kModule,
           "preprocess.mean must be finite and preprocess.std positive");
    }
    p.mean[i] = mean[i];
    p.std[i] = std[i];
  }
  return p;
}

ModelConfig ToModelConfig(const RunConfig& c) {
  ModelConfig m;
  m.layers = Get<std::vector<int>>(c, "patch_residual.layers");
  m.adapter_hidden = Get<int>(c, "adapter.hidden");
  m.classifier_hidden = Get<std::vector<int>>(c, "classifier.hidden");
  m.head_hidden = Get<std::vector<int>>(c, "scoring.head.hidden");
  m.alpha = Get<double>(c, "scoring.alpha");
  m.focal.gamma = Get<double>(c, "scoring.focal.gamma");
  m.focal.pos_weight = Get<double>(c, "scoring.focal.pos_weight");
  m.text.temperature = Get<double>(c, "text_prior.temperature");
  m.text.normalize = Get<bool>(c, "text_prior.normalize");
  m.prompt_style = ParsePromptStyle(Get<std::string>(c, "text_prior.style"));
  return m;
}

TrainConfig ToTrainConfig(const RunConfig& c) {
  TrainConfig t;
  t.epochs = Get<int>(c, "training.epochs");
  t.batch_size = Get<int>(c, "training.batch_size");
  t.learning_rate = Get<double>(c, "training.learning_rate");
  t.k = Get<int>(c, "training.k");
  const auto seed = Get<long long>(c, "training.seed");
  if (seed < 0) Fail(ErrorKind::kInvalidInput, kModule, "training.seed must be >= 0");
  t.seed = static_cast<std::uint64_t>(seed);
  t.optimizer = Get<std::string>(c, "training.optimizer");
  t.same_category_prompts = Get<bool>(c, "training.same_category_prompts");
  return t;
}

ProtocolSpec ToProtocolSpec(const RunConfig& c) {
  ProtocolSpec p;
  p.mode = ParseProtocolMode(Get<std::string>(c, "data.protocol.mode"));
  p.normal_selector = Get<std::string>(c, "data.protocol.normal_selector");
  return p;
}

EvalOptions ToEvalOptions(const RunConfig& c) {
  EvalOptions e;
  e.k = Get<int>(c, "eval.k");
  const auto seeds = Get<std::vector<long long>>(c, "eval.seeds");
  e.seeds.clear();
  for (long long s : seeds) {
    if (s < 0) Fail(ErrorKind::kInvalidInput, kModule, "eval.seeds must be >= 0");
    e.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  const int classes = Get<int>(c, "eval.class_count");
  if (classes < 0) Fail(ErrorKind::kInvalidInput, kModule, "eval.class_count must be >= 0");
  if (classes > 0) e.class_count = classes;
  e.per_category = Get<bool>(c, "eval.per_category");
  e.prompt_split = ParseSplit(Get<std::string>(c, "data.prompt_split"));
  e.score_split = ParseSplit(Get<std::string>(c, "data.score_split"));
  e.class_label = Get<std::string>(c, "text_prior.class_label");
  return e;
}

std::shared_ptr<const EncoderBackend> MakeBackend(const RunConfig& c) {
  const std::string backend = Get<std::string>(c, "encoder.backend");
  if (backend == "external") {
    return std::make_shared<ExternalEncoder>(Get<std::string>(c, "encoder.external_dir"));
  }
  if (backend != "mock") {
    Fail(ErrorKind::kInvalidInput, kModule, "unknown encoder backend '" + backend + "'");
  }
  return std::make_shared<MockEncoder>(ToMockEncoderConfig(c));
}

}  // namespace inctrl
