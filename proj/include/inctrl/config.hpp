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

#ifndef INCTRL_CONFIG_HPP_
#define INCTRL_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"

#include "inctrl/data.hpp"
#include "inctrl/encoder.hpp"
#include "inctrl/eval.hpp"
#include "inctrl/image.hpp"
#include "inctrl/model.hpp"
#include "inctrl/training.hpp"

namespace inctrl {

// Later layers override earlier ones.
enum class ConfigSource { kDefault, kCheckpoint, kFile, kFlag };

std::string_view ConfigSourceName(ConfigSource source);

// Merged configuration tree. Keys are dotted paths ("training.epochs");
// arrays are leaves. Every key must exist in the defaults and keep its
// type; unknown keys and type changes are usage errors. The one exception:
// patch_residual.layers also accepts "all", stored as the empty list.
class RunConfig {
 public:
  RunConfig();

  static const nlohmann::json& Defaults();

  // JSON with // and /* */ comments allowed.
  void MergeFile(const std::filesystem::path& path);
  void Merge(const nlohmann::json& overlay, ConfigSource source,
             const std::string& origin = "");
  // "key=value"; the value is read as JSON when it parses, else as a string.
  void Set(std::string_view assignment);
  void Set(const std::string& key, const nlohmann::json& value,
           ConfigSource source, const std::string& origin = "");

  const nlohmann::json& tree() const { return tree_; }
  const nlohmann::json& at(const std::string& key) const;
  ConfigSource source(const std::string& key) const;
  std::string origin(const std::string& key) const;

  // Domain checks for every key, via the typed configs below.
  void Validate() const;

  // The sections that shape the model and its inputs; stored with a
  // checkpoint and restored under file and flag values at inference.
  nlohmann::json ModelSnapshot() const;

  // One line per key: `key = value  (source)`.
  std::string Describe() const;

 private:
  void MergeAt(const std::string& prefix, const nlohmann::json& overlay,
               ConfigSource source, const std::string& origin);

  nlohmann::json tree_;
  std::map<std::string, std::pair<ConfigSource, std::string>> provenance_;
};

MockEncoderConfig ToMockEncoderConfig(const RunConfig& config);
PreprocessConfig ToPreprocessConfig(const RunConfig& config);
ModelConfig ToModelConfig(const RunConfig& config);
TrainConfig ToTrainConfig(const RunConfig& config);
ProtocolSpec ToProtocolSpec(const RunConfig& config);
EvalOptions ToEvalOptions(const RunConfig& config);

std::shared_ptr<const EncoderBackend> MakeBackend(const RunConfig& config);

}  // namespace inctrl

#endif  // INCTRL_CONFIG_HPP_
