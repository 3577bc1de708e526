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

#ifndef INCTRL_TRAINING_HPP_
#define INCTRL_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "inctrl/data.hpp"
#include "inctrl/detector.hpp"
#include "inctrl/model.hpp"
#include "inctrl/random.hpp"

namespace inctrl {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 48;
  double learning_rate = 1e-3;
  int k = 2;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  // Draw prompts from the query's own category (multi-category auxiliary
  // data); off draws from every normal image.
  bool same_category_prompts = true;

  void Validate() const;
};

// One simulated task: a query and K normal prompts, as manifest indices.
struct Episode {
  std::size_t query = 0;
  int label = 0;
  std::vector<std::size_t> prompts;
};

// Query uniform over eligible entries, prompts uniform without replacement
// over normal entries other than the query.
Episode SampleEpisode(const DatasetManifest& dataset, std::size_t k, Rng& rng,
                      bool same_category_prompts = false);

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(double beta1, double beta2, double epsilon)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void Step(Vec& params, const Vec& grad, double learning_rate);
  long steps() const { return t_; }

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

// One optimizer update from the gradient of the combined loss. Returns the
// batch loss measured before the update; throws without touching `params`
// when the loss or gradient is not finite.
BatchLoss TrainStep(std::span<const EpisodeInputs> batch, ModelParams& params,
                    AdamOptimizer& optimizer, const TrainConfig& config,
                    const FocalLossConfig& focal);

struct Checkpoint {
  ModelParams params;
  std::string backend_id;
  nlohmann::json config = nlohmann::json::object();
  int epochs = 0;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // one value per step
};

// Called after every step with (step index, loss).
using StepObserver = std::function<void(long, const BatchLoss&)>;

// epochs x ceil(N / batch_size) steps on freshly sampled episodes, starting
// from InitModelParams seeded by config.seed. Text prompts use each query's
// category as the class label.
Checkpoint Fit(const DatasetManifest& dataset, const FeatureCache& features,
               const ModelConfig& model, const TrainConfig& config,
               const StepObserver& observer = {});

inline constexpr int kCheckpointVersion = 1;

// Directory with metadata.json, one binary blob per parameter group and
// loss_history.csv. Written to a temporary directory and renamed into place.
void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& directory);

// Validates everything before returning; a mismatched backend id, version
// or blob checksum raises an incompatible-checkpoint error.
Checkpoint LoadCheckpoint(const std::filesystem::path& directory,
                          const std::optional<std::string>& expected_backend = {});

}  // namespace inctrl

#endif  // INCTRL_TRAINING_HPP_
