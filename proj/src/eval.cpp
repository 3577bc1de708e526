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

#include "inctrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "inctrl/error.hpp"
#include "inctrl/io.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "eval";

void CheckRankInputs(std::span<const double> scores, std::span<const int> labels,
                     std::size_t* positives) {
  if (scores.size() != labels.size()) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "scores and labels differ in length (" + std::to_string(scores.size()) +
             " vs " + std::to_string(labels.size()) + ")");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      Fail(ErrorKind::kInvalidInput, kModule, "labels must be 0 or 1");
    }
    if (!std::isfinite(scores[i])) {
      Fail(ErrorKind::kInvalidInput, kModule, "non-finite score");
    }
    pos += labels[i];
  }
  if (pos == 0 || pos == labels.size()) {
    Fail(ErrorKind::kUndefinedMetric, kModule,
         "ranking metrics need both classes (" + std::to_string(pos) +
             " positive of " + std::to_string(labels.size()) + ")");
  }
  *positives = pos;
}

std::vector<std::size_t> OrderBy(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json SummaryJson(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.std}};
}

nlohmann::json SeedJson(const SeedResult& r) {
  return {{"seed", r.seed},
          {"auroc", r.metrics.auroc},
          {"auprc", r.metrics.auprc},
          {"scored", r.scored},
          {"prompts", r.prompts}};
}

void FillSummaries(std::span<const SeedResult> seeds, MetricSummary* auroc,
                   MetricSummary* auprc) {
  std::vector<double> a;
  std::vector<double> p;
  for (const auto& s : seeds) {
    a.push_back(s.metrics.auroc);
    p.push_back(s.metrics.auprc);
  }
  *auroc = Summarize(a);
  *auprc = Summarize(p);
}

// Prompts are drawn from `pool`; scored images are `pool` entries in the
// score split minus the prompts.
SeedResult EvaluateSeed(const Detector& detector, const DatasetManifest& pool,
                        const EvalOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  PromptSelection selection;
  selection.k = static_cast<std::size_t>(options.k);
  if (options.class_count) {
    selection.class_count = static_cast<std::size_t>(*options.class_count);
  }
  selection.split = options.prompt_split;
  const auto prompt_idx = SelectPromptSet(pool, selection, rng);

  SeedResult result;
  result.seed = seed;
  std::vector<PatchTokenMaps> prompt_tokens;
  std::vector<std::string> categories;
  for (std::size_t i : prompt_idx) {
    const auto& e = pool.entries[i];
    result.prompts.push_back(e.path);
    prompt_tokens.push_back(detector.features().Encode(e.path));
    categories.push_back(e.category);
  }
  const std::string label = options.class_label.empty()
                                ? MajorityCategory(categories)
                                : options.class_label;
  const TextPrototypes& text = detector.TextFor(label);

  const std::set<std::size_t> excluded(prompt_idx.begin(), prompt_idx.end());
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const auto& e = pool.entries[i];
    if (e.split != options.score_split || excluded.contains(i)) continue;
    const auto breakdown =
        detector.Score(detector.features().Encode(e.path), prompt_tokens, text);
    if (!std::isfinite(breakdown.score)) {
      Fail(ErrorKind::kNumeric, kModule, "non-finite score for " + e.path);
    }
    scores.push_back(breakdown.score);
    labels.push_back(e.label);
  }
  result.scored = scores.size();
  result.metrics = ComputeRankMetrics(scores, labels);
  return result;
}

}  // namespace

double Auroc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t positives = 0;
  CheckRankInputs(scores, labels, &positives);
  const std::size_t n = scores.size();
  const std::size_t negatives = n - positives;
  const auto order = OrderBy(scores, /*descending=*/false);
  // Twice the positive rank sum, kept integral so ties stay exact.
  unsigned long long doubled_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share the midrank (i + 1 + j) / 2.
    std::size_t pos_in_group = 0;
    for (std::size_t t = i; t < j; ++t) pos_in_group += labels[order[t]];
    doubled_rank_sum += pos_in_group * (i + 1 + j);
    i = j;
  }
  const unsigned long long u2 =
      doubled_rank_sum - static_cast<unsigned long long>(positives) * (positives + 1);
  return static_cast<double>(u2) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

double AveragePrecision(std::span<const double> scores, std::span<const int> labels) {
  std::size_t positives = 0;
  CheckRankInputs(scores, labels, &positives);
  const auto order = OrderBy(scores, /*descending=*/true);
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]];
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

RankMetrics ComputeRankMetrics(std::span<const double> scores,
                               std::span<const int> labels) {
  return {Auroc(scores, labels), AveragePrecision(scores, labels)};
}

MetricSummary Summarize(std::span<const double> values) {
  if (values.empty()) Fail(ErrorKind::kInvalidInput, kModule, "no values to summarize");
  MetricSummary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

void EvalOptions::Validate() const {
  if (k < 1) Fail(ErrorKind::kInvalidInput, kModule, "eval.k must be >= 1");
  if (seeds.empty()) Fail(ErrorKind::kInvalidInput, kModule, "eval.seeds must be nonempty");
  if (class_count && (*class_count < 1 || *class_count > k)) {
    Fail(ErrorKind::kInvalidInput, kModule, "eval.class_count must be in [1, K]");
  }
  if (per_category && class_count && *class_count > 1) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "per-category evaluation draws prompts from a single category");
  }
}

EvalReport Evaluate(const Detector& detector, const DatasetManifest& target,
                    const EvalOptions& options) {
  options.Validate();
  target.Validate();
  EvalReport report;
  report.dataset = target.name;
  report.k = options.k;
  report.class_count = options.class_count;

  if (!options.per_category) {
    for (std::uint64_t seed : options.seeds) {
      report.seeds.push_back(EvaluateSeed(detector, target, options, seed));
    }
    FillSummaries(report.seeds, &report.auroc, &report.auprc);
    return report;
  }

  for (const auto& category : target.Categories()) {
    SubsetReport subset;
    subset.name = category;
    const DatasetManifest part = target.Filter(std::nullopt, category);
    for (std::uint64_t seed : options.seeds) {
      subset.seeds.push_back(EvaluateSeed(detector, part, options, seed));
    }
    FillSummaries(subset.seeds, &subset.auroc, &subset.auprc);
    report.subsets.push_back(std::move(subset));
  }
  for (std::size_t s = 0; s < options.seeds.size(); ++s) {
    SeedResult row;
    row.seed = options.seeds[s];
    for (const auto& subset : report.subsets) {
      row.metrics.auroc += subset.seeds[s].metrics.auroc;
      row.metrics.auprc += subset.seeds[s].metrics.auprc;
      row.scored += subset.seeds[s].scored;
    }
    const double n = static_cast<double>(report.subsets.size());
    row.metrics.auroc /= n;
    row.metrics.auprc /= n;
    report.seeds.push_back(std::move(row));
  }
  FillSummaries(report.seeds, &report.auroc, &report.auprc);
  return report;
}

std::vector<SweepPoint> PromptDiversitySweep(const Detector& detector,
                                             const DatasetManifest& target,
                                             const EvalOptions& options,
                                             std::span<const int> class_counts) {
  if (class_counts.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "sweep needs at least one class count");
  }
  std::vector<SweepPoint> out;
  for (int c : class_counts) {
    EvalOptions o = options;
    o.class_count = c;
    o.per_category = false;
    out.push_back({c, Evaluate(detector, target, o)});
  }
  return out;
}

nlohmann::json ReportToJson(const EvalReport& report) {
  nlohmann::json j;
  j["dataset"] = report.dataset;
  j["K"] = report.k;
  j["class_count"] = report.class_count ? nlohmann::json(*report.class_count)
                                        : nlohmann::json(nullptr);
  j["auroc"] = SummaryJson(report.auroc);
  j["auprc"] = SummaryJson(report.auprc);
  j["seeds"] = nlohmann::json::array();
  for (const auto& r : report.seeds) j["seeds"].push_back(SeedJson(r));
  j["subsets"] = nlohmann::json::array();
  for (const auto& s : report.subsets) {
    nlohmann::json sj = {{"name", s.name},
                         {"auroc", SummaryJson(s.auroc)},
                         {"auprc", SummaryJson(s.auprc)},
                         {"seeds", nlohmann::json::array()}};
    for (const auto& r : s.seeds) sj["seeds"].push_back(SeedJson(r));
    j["subsets"].push_back(std::move(sj));
  }
  return j;
}

std::string ReportToCsv(const EvalReport& report) {
  std::string out = "dataset,K,seed,auroc,auprc\n";
  std::string name = report.dataset;
  if (name.find_first_of(",\"") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : name) {
      if (c == '"') quoted.push_back('"');
      quoted.push_back(c);
    }
    name = quoted + "\"";
  }
  for (const auto& r : report.seeds) {
    out += name + "," + std::to_string(report.k) + "," + std::to_string(r.seed) +
           "," + FormatDouble(r.metrics.auroc) + "," + FormatDouble(r.metrics.auprc) +
           "\n";
  }
  return out;
}

void SaveReport(const EvalReport& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) {
    Fail(ErrorKind::kPersistence, kModule, "cannot create " + directory.string());
  }
  WriteFileAtomic(directory / "report.json", ReportToJson(report).dump(2) + "\n");
  WriteFileAtomic(directory / "report.csv", ReportToCsv(report));
}

}  // namespace inctrl
