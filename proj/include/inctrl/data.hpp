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

#ifndef INCTRL_DATA_HPP_
#define INCTRL_DATA_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "inctrl/random.hpp"

namespace inctrl {

enum class Split { kTrain, kTest };

Split ParseSplit(std::string_view name);
std::string_view SplitName(Split split);

struct ManifestEntry {
  std::string path;  // resolved against the manifest's directory
  int label = 0;     // 0 normal, 1 anomalous
  std::string category;
  Split split = Split::kTest;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;

  void Validate() const;
  std::set<std::string> Categories() const;
  std::size_t CountLabel(int label, std::optional<Split> split = {}) const;
  // Entries satisfying a predicate on (split, category); order preserved.
  DatasetManifest Filter(std::optional<Split> split,
                         std::optional<std::string> category = {}) const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// CSV with header `path,label,category,split`. Relative paths resolve
// against the manifest's directory. The manifest name is the file stem, or
// the directory name for a file called manifest.csv.
DatasetManifest LoadManifest(const std::filesystem::path& path);
DatasetManifest ParseManifest(std::string_view text,
                              const std::filesystem::path& base_dir,
                              std::string name);
std::string FormatManifest(const DatasetManifest& manifest,
                           const std::filesystem::path& base_dir = {});
void SaveManifest(const DatasetManifest& manifest,
                  const std::filesystem::path& path);

enum class ProtocolMode { kPlain, kOneVsAll, kMultiClass };

ProtocolMode ParseProtocolMode(std::string_view name);
std::string_view ProtocolModeName(ProtocolMode mode);

// `normal_selector` is a category name for one-vs-all; for multi-class it is
// a group name ("even_number", "animal") or a comma-separated category list.
struct ProtocolSpec {
  ProtocolMode mode = ProtocolMode::kPlain;
  std::string normal_selector;
};

// Categories of `manifest` that the selector marks as normal.
std::set<std::string> ResolveNormalCategories(const DatasetManifest& manifest,
                                              const ProtocolSpec& spec);

// Relabels entries: selected categories become 0, all others 1. Plain mode
// returns the manifest unchanged.
DatasetManifest BuildProtocol(const DatasetManifest& manifest,
                              const ProtocolSpec& spec);

struct PromptSelection {
  std::size_t k = 2;
  std::optional<std::size_t> class_count;
  Split split = Split::kTrain;
};

// Indices into manifest.entries of K normal images from `selection.split`.
// With a class count, prompts come from exactly that many randomly chosen
// normal categories, split as evenly as possible.
std::vector<std::size_t> SelectPromptSet(const DatasetManifest& manifest,
                                         const PromptSelection& selection,
                                         Rng& rng);

}  // namespace inctrl

#endif  // INCTRL_DATA_HPP_
