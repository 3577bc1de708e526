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

#include "inctrl/data.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "inctrl/error.hpp"
#include "inctrl/io.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "data";

const std::set<std::string>& AnimalCategories() {
  static const std::set<std::string> kAnimals = {"bird", "cat",  "deer",
                                                 "dog",  "frog", "horse"};
  return kAnimals;
}

std::vector<std::string> SplitCsvLine(std::string_view line, int line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    Fail(ErrorKind::kParse, kModule,
         "line " + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

bool ParseEvenInteger(const std::string& s, bool* even) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return false;
  *even = v % 2 == 0;
  return true;
}

}  // namespace

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  Fail(ErrorKind::kInvalidInput, kModule,
       "split must be 'train' or 'test', got '" + std::string(name) + "'");
}

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

void DatasetManifest::Validate() const {
  if (entries.empty()) Fail(ErrorKind::kInvalidInput, kModule, "manifest has no entries");
  for (const auto& e : entries) {
    if (e.path.empty()) Fail(ErrorKind::kInvalidInput, kModule, "empty image path");
    if (e.label != 0 && e.label != 1) {
      Fail(ErrorKind::kInvalidInput, kModule, "labels must be 0 or 1");
    }
  }
}

std::set<std::string> DatasetManifest::Categories() const {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.category);
  return out;
}

std::size_t DatasetManifest::CountLabel(int label,
                                        std::optional<Split> split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) {
        return e.label == label && (!split || e.split == *split);
      }));
}

DatasetManifest DatasetManifest::Filter(std::optional<Split> split,
                                        std::optional<std::string> category) const {
  DatasetManifest out;
  out.name = category ? name + "/" + *category : name;
  for (const auto& e : entries) {
    if (split && e.split != *split) continue;
    if (category && e.category != *category) continue;
    out.entries.push_back(e);
  }
  return out;
}

DatasetManifest ParseManifest(std::string_view text,
                              const std::filesystem::path& base_dir,
                              std::string name) {
  DatasetManifest manifest;
  manifest.name = std::move(name);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::map<std::string, std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = SplitCsvLine(line, line_no);
    if (column.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) column[fields[i]] = i;
      for (const char* key : {"path", "label", "category", "split"}) {
        if (!column.contains(key)) {
          Fail(ErrorKind::kParse, kModule,
               "line 1: header must contain path,label,category,split");
        }
      }
      continue;
    }
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != column.size()) {
      Fail(ErrorKind::kParse, kModule,
           where + "expected " + std::to_string(column.size()) + " fields, got " +
               std::to_string(fields.size()));
    }
    ManifestEntry e;
    const std::string& path = fields[column["path"]];
    if (path.empty()) Fail(ErrorKind::kParse, kModule, where + "empty path");
    std::filesystem::path p(path);
    e.path = (p.is_absolute() || base_dir.empty() ? p : base_dir / p)
                 .lexically_normal()
                 .string();
    const std::string& label = fields[column["label"]];
    if (label == "0") {
      e.label = 0;
    } else if (label == "1") {
      e.label = 1;
    } else {
      Fail(ErrorKind::kParse, kModule,
           where + "label must be 0 or 1, got '" + label + "'");
    }
    e.category = fields[column["category"]];
    const std::string& split = fields[column["split"]];
    if (split == "train") {
      e.split = Split::kTrain;
    } else if (split == "test") {
      e.split = Split::kTest;
    } else {
      Fail(ErrorKind::kParse, kModule,
           where + "split must be train or test, got '" + split + "'");
    }
    manifest.entries.push_back(std::move(e));
  }
  if (column.empty()) Fail(ErrorKind::kParse, kModule, "missing header");
  if (manifest.entries.empty()) Fail(ErrorKind::kParse, kModule, "manifest has no rows");
  return manifest;
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kIo, kModule, "manifest not found: " + path.string());
  }
  std::string name = path.stem().string();
  if (name == "manifest") {
    const auto dir = std::filesystem::absolute(path).lexically_normal().parent_path();
    if (!dir.filename().empty()) name = dir.filename().string();
  }
  return ParseManifest(ReadFileText(path), path.parent_path(), std::move(name));
}

std::string FormatManifest(const DatasetManifest& manifest,
                           const std::filesystem::path& base_dir) {
  std::string out = "path,label,category,split\n";
  for (const auto& e : manifest.entries) {
    std::filesystem::path p(e.path);
    if (!base_dir.empty()) {
      const auto rel = p.lexically_relative(base_dir);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out += CsvField(p.string()) + "," + std::to_string(e.label) + "," +
           CsvField(e.category) + "," + std::string(SplitName(e.split)) + "\n";
  }
  return out;
}

void SaveManifest(const DatasetManifest& manifest,
                  const std::filesystem::path& path) {
  WriteFileAtomic(path, FormatManifest(manifest, path.parent_path()));
}

ProtocolMode ParseProtocolMode(std::string_view name) {
  if (name == "plain") return ProtocolMode::kPlain;
  if (name == "one_vs_all") return ProtocolMode::kOneVsAll;
  if (name == "multi_class") return ProtocolMode::kMultiClass;
  Fail(ErrorKind::kInvalidInput, kModule,
       "unknown protocol mode '" + std::string(name) + "'");
}

std::string_view ProtocolModeName(ProtocolMode mode) {
  switch (mode) {
    case ProtocolMode::kPlain:
      return "plain";
    case ProtocolMode::kOneVsAll:
      return "one_vs_all";
    case ProtocolMode::kMultiClass:
      return "multi_class";
  }
  return "plain";
}

std::set<std::string> ResolveNormalCategories(const DatasetManifest& manifest,
                                              const ProtocolSpec& spec) {
  const auto present = manifest.Categories();
  std::set<std::string> normal;
  const std::string& sel = spec.normal_selector;
  if (sel.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "empty normal selector");
  }
  if (spec.mode == ProtocolMode::kOneVsAll) {
    if (present.contains(sel)) normal.insert(sel);
  } else if (sel == "even_number") {
    for (const auto& c : present) {
      bool even = false;
      if (ParseEvenInteger(c, &even) && even) normal.insert(c);
    }
  } else if (sel == "animal") {
    for (const auto& c : present) {
      if (AnimalCategories().contains(c)) normal.insert(c);
    }
  } else {
    std::istringstream in(sel);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (present.contains(item)) normal.insert(item);
    }
  }
  if (normal.empty()) {
    Fail(ErrorKind::kDegenerateProtocol, kModule,
         "selector '" + sel + "' matches no category in the manifest");
  }
  return normal;
}

DatasetManifest BuildProtocol(const DatasetManifest& manifest,
                              const ProtocolSpec& spec) {
  if (spec.mode == ProtocolMode::kPlain) return manifest;
  const auto normal = ResolveNormalCategories(manifest, spec);
  DatasetManifest out = manifest;
  std::size_t normals = 0;
  for (auto& e : out.entries) {
    e.label = normal.contains(e.category) ? 0 : 1;
    normals += e.label == 0;
  }
  if (normals == 0 || normals == out.entries.size()) {
    Fail(ErrorKind::kDegenerateProtocol, kModule,
         "protocol leaves one side empty (" + std::to_string(normals) +
             " normal of " + std::to_string(out.entries.size()) + ")");
  }
  return out;
}

std::vector<std::size_t> SelectPromptSet(const DatasetManifest& manifest,
                                         const PromptSelection& selection,
                                         Rng& rng) {
  const std::size_t k = selection.k;
  if (k == 0) Fail(ErrorKind::kInvalidInput, kModule, "K must be >= 1");

  std::map<std::string, std::vector<std::size_t>> by_category;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.label != 0 || e.split != selection.split) continue;
    pool.push_back(i);
    by_category[e.category].push_back(i);
  }
  if (pool.size() < k) {
    Fail(ErrorKind::kInsufficientData, kModule,
         "need " + std::to_string(k) + " normal " +
             std::string(SplitName(selection.split)) + " images, found " +
             std::to_string(pool.size()));
  }
  if (!selection.class_count) {
    std::vector<std::size_t> out;
    for (std::size_t idx : rng.SampleWithoutReplacement(pool.size(), k)) {
      out.push_back(pool[idx]);
    }
    return out;
  }

  const std::size_t classes = *selection.class_count;
  if (classes == 0 || classes > k) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "class_count must be in [1, K]");
  }
  if (by_category.size() < classes) {
    Fail(ErrorKind::kInsufficientData, kModule,
         "need " + std::to_string(classes) + " normal categories, found " +
             std::to_string(by_category.size()));
  }
  std::vector<const std::vector<std::size_t>*> categories;
  for (const auto& [name, members] : by_category) categories.push_back(&members);
  const auto chosen = rng.SampleWithoutReplacement(categories.size(), classes);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto& members = *categories[chosen[c]];
    const std::size_t take = k / classes + (c < k % classes ? 1 : 0);
    if (members.size() < take) {
      Fail(ErrorKind::kInsufficientData, kModule,
           "normal category has " + std::to_string(members.size()) +
               " images, need " + std::to_string(take));
    }
    for (std::size_t idx : rng.SampleWithoutReplacement(members.size(), take)) {
      out.push_back(members[idx]);
    }
  }
  return out;
}

}  // namespace inctrl
