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

#ifndef INCTRL_EVAL_HPP_
#define INCTRL_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "inctrl/data.hpp"
#include "inctrl/detector.hpp"

namespace inctrl {

struct RankMetrics {
  double auroc = 0.0;
  double auprc = 0.0;
};

// AUROC with ties counted one half, via midranks. Labels must be 0/1 with
// both present (undefined-metric error otherwise).
double Auroc(std::span<const double> scores, std::span<const int> labels);

// Step-wise average precision: sum over distinct thresholds of
// (recall_k - recall_{k-1}) * precision_k. Tied scores form one threshold.
double AveragePrecision(std::span<const double> scores, std::span<const int> labels);

RankMetrics ComputeRankMetrics(std::span<const double> scores,
                               std::span<const int> labels);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
};

MetricSummary Summarize(std::span<const double> values);

struct SeedResult {
  std::uint64_t seed = 0;
  RankMetrics metrics;
  std::size_t scored = 0;
  std::vector<std::string> prompts;
};

struct SubsetReport {
  std::string name;
  std::vector<SeedResult> seeds;
  MetricSummary auroc;
  MetricSummary auprc;
};

struct EvalReport {
  std::string dataset;
  int k = 0;
  std::optional<int> class_count;
  std::vector<SeedResult> seeds;
  MetricSummary auroc;
  MetricSummary auprc;
  // Per-category breakdown when requested.
  std::vector<SubsetReport> subsets;
};

struct EvalOptions {
  int k = 2;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::optional<int> class_count;
  Split prompt_split = Split::kTrain;
  Split score_split = Split::kTest;
  // Score each category against prompts from that category; the top-level
  // row for a seed is then the mean over categories.
  bool per_category = false;
  // Text-prompt class; empty means the majority category of the prompts.
  std::string class_label;

  void Validate() const;
};

// For each seed: select prompts, score every `score_split` image that is not
// itself a prompt, and compute rank metrics.
EvalReport Evaluate(const Detector& detector, const DatasetManifest& target,
                    const EvalOptions& options);

struct SweepPoint {
  int class_count = 0;
  EvalReport report;
};

// One Evaluate per prompt class count at fixed K.
std::vector<SweepPoint> PromptDiversitySweep(const Detector& detector,
                                             const DatasetManifest& target,
                                             const EvalOptions& options,
                                             std::span<const int> class_counts);

nlohmann::json ReportToJson(const EvalReport& report);
// Header `dataset,K,seed,auroc,auprc`, one row per seed.
std::string ReportToCsv(const EvalReport& report);
// Writes report.json and report.csv into `directory`.
void SaveReport(const EvalReport& report, const std::filesystem::path& directory);

}  // namespace inctrl

#endif  // INCTRL_EVAL_HPP_
