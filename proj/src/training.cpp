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

#include "inctrl/training.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <system_error>

#include <unistd.h>

#include "inctrl/digest.hpp"
#include "inctrl/error.hpp"
#include "inctrl/io.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "training";
constexpr char kFormat[] = "inctrl-checkpoint";

std::vector<std::byte> EncodeBlob(const Vec& flat) {
  std::vector<std::byte> bytes(static_cast<std::size_t>(flat.size()) * sizeof(double));
  std::memcpy(bytes.data(), flat.data(), bytes.size());
  return bytes;
}

[[noreturn]] void Incompatible(const std::string& message) {
  Fail(ErrorKind::kIncompatibleCheckpoint, kModule, message);
}

}  // namespace

void TrainConfig::Validate() const {
  if (epochs < 0) Fail(ErrorKind::kInvalidInput, kModule, "training.epochs must be >= 0");
  if (batch_size < 1) Fail(ErrorKind::kInvalidInput, kModule, "training.batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    Fail(ErrorKind::kInvalidInput, kModule, "training.learning_rate must be >= 0");
  }
  if (k < 1) Fail(ErrorKind::kInvalidInput, kModule, "training.k must be >= 1");
  if (optimizer != "adam") {
    Fail(ErrorKind::kInvalidInput, kModule,
         "training.optimizer must be 'adam', got '" + optimizer + "'");
  }
}

Episode SampleEpisode(const DatasetManifest& dataset, std::size_t k, Rng& rng,
                      bool same_category_prompts) {
  if (k == 0) Fail(ErrorKind::kInvalidInput, kModule, "K must be >= 1");
  const auto& entries = dataset.entries;

  std::map<std::string, std::size_t> normals_in;
  std::size_t normals = 0;
  for (const auto& e : entries) {
    if (e.label == 0) {
      ++normals;
      ++normals_in[e.category];
    }
  }
  auto available = [&](const ManifestEntry& e) {
    const std::size_t pool = same_category_prompts ? normals_in[e.category] : normals;
    return pool - (e.label == 0 ? 1 : 0);
  };
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (available(entries[i]) >= k) eligible.push_back(i);
  }
  if (eligible.empty()) {
    Fail(ErrorKind::kInsufficientData, kModule,
         "no query has " + std::to_string(k) + " normal prompts available (" +
             std::to_string(normals) + " normal images)");
  }

  Episode ep;
  ep.query = eligible[rng.Below(eligible.size())];
  const auto& q = entries[ep.query];
  ep.label = q.label;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i == ep.query || entries[i].label != 0) continue;
    if (same_category_prompts && entries[i].category != q.category) continue;
    pool.push_back(i);
  }
  for (std::size_t idx : rng.SampleWithoutReplacement(pool.size(), k)) {
    ep.prompts.push_back(pool[idx]);
  }
  return ep;
}

void AdamOptimizer::Step(Vec& params, const Vec& grad, double learning_rate) {
  if (m_.size() != params.size()) {
    m_ = Vec::Zero(params.size());
    v_ = Vec::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= learning_rate * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + epsilon_);
}

BatchLoss TrainStep(std::span<const EpisodeInputs> batch, ModelParams& params,
                    AdamOptimizer& optimizer, const TrainConfig& config,
                    const FocalLossConfig& focal) {
  if (batch.empty()) Fail(ErrorKind::kInvalidInput, kModule, "empty batch");
  ModelParams grad = params;
  grad.SetZero();
  const BatchLoss loss = ComputeLoss(params, batch, focal, &grad);
  const Vec g = grad.Flatten();
  if (!std::isfinite(loss.total) || !g.allFinite()) {
    Fail(ErrorKind::kNumeric, kModule,
         "non-finite loss or gradient (irl=" + std::to_string(loss.irl) +
             ", holistic=" + std::to_string(loss.holistic) +
             "); parameters left unchanged");
  }
  Vec flat = params.Flatten();
  optimizer.Step(flat, g, config.learning_rate);
  params.Unflatten(flat);
  return loss;
}

Checkpoint Fit(const DatasetManifest& dataset, const FeatureCache& features,
               const ModelConfig& model, const TrainConfig& config,
               const StepObserver& observer) {
  config.Validate();
  model.Validate();
  dataset.Validate();
  if (dataset.CountLabel(0) == 0 || dataset.CountLabel(1) == 0) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "training data needs both normal and anomalous images");
  }

  Rng rng(config.seed);
  Checkpoint ckpt;
  ckpt.backend_id = features.backend().identifier();
  ckpt.seed = config.seed;
  ckpt.params = InitModelParams(features.backend().geometry(), model, rng);

  // Encode everything up front; the encoder is frozen.
  for (const auto& e : dataset.entries) features.Encode(e.path);

  const long n = static_cast<long>(dataset.entries.size());
  const long steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const auto k = static_cast<std::size_t>(config.k);
  AdamOptimizer optimizer;
  long step = 0;
  std::vector<EpisodeInputs> batch;
  std::vector<PatchTokenMaps> prompts;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (long s = 0; s < steps_per_epoch; ++s) {
      batch.clear();
      for (int b = 0; b < config.batch_size; ++b) {
        const Episode ep =
            SampleEpisode(dataset, k, rng, config.same_category_prompts);
        const auto& query = dataset.entries[ep.query];
        prompts.clear();
        for (std::size_t p : ep.prompts) {
          prompts.push_back(features.Encode(dataset.entries[p].path));
        }
        const std::string label =
            query.category.empty() ? std::string(kDefaultClassLabel) : query.category;
        batch.push_back(PrepareEpisode(features.Encode(query.path), prompts,
                                       features.TextFor(label, model.prompt_style),
                                       model, ep.label));
      }
      const BatchLoss loss =
          TrainStep(batch, ckpt.params, optimizer, config, model.focal);
      ckpt.loss_history.push_back(loss.total);
      if (observer) observer(step, loss);
      ++step;
    }
    ckpt.epochs = epoch + 1;
  }
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  nlohmann::json meta;
  meta["format"] = kFormat;
  meta["version"] = kCheckpointVersion;
  meta["backend"] = checkpoint.backend_id;
  meta["epochs"] = checkpoint.epochs;
  meta["seed"] = checkpoint.seed;
  meta["alpha"] = checkpoint.params.scorer.alpha;
  meta["config"] = checkpoint.config;

  const std::vector<std::pair<std::string, const Mlp*>> groups = {
      {"adapter", &checkpoint.params.adapter},
      {"classifier", &checkpoint.params.classifier},
      {"head", &checkpoint.params.scorer.head}};

  std::error_code ec;
  fs::path target = fs::absolute(directory, ec);
  if (ec) target = directory;
  if (target.filename().empty()) target = target.parent_path();
  if (!target.parent_path().empty()) fs::create_directories(target.parent_path(), ec);
  fs::path staging = target;
  staging += ".staging." + std::to_string(::getpid());
  fs::remove_all(staging, ec);
  if (!fs::create_directories(staging, ec) || ec) {
    Fail(ErrorKind::kPersistence, kModule, "cannot create " + staging.string());
  }

  try {
    for (const auto& [name, net] : groups) {
      const auto bytes = EncodeBlob(net->Flatten());
      const std::string file = name + ".bin";
      WriteFileAtomic(staging / file, bytes);
      meta["blobs"][name] = {{"file", file},
                             {"widths", net->widths()},
                             {"sha256", ToHex(Sha256(bytes))}};
    }
    std::string csv = "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < checkpoint.loss_history.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, checkpoint.loss_history[i]);
      csv += buf;
    }
    WriteFileAtomic(staging / "loss_history.csv", csv);
    WriteFileAtomic(staging / "metadata.json", meta.dump(2) + "\n");
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }

  fs::path backup;
  if (fs::exists(target)) {
    backup = target;
    backup += ".previous." + std::to_string(::getpid());
    fs::remove_all(backup, ec);
    fs::rename(target, backup, ec);
    if (ec) {
      fs::remove_all(staging, ec);
      Fail(ErrorKind::kPersistence, kModule, "cannot replace " + target.string());
    }
  }
  fs::rename(staging, target, ec);
  if (ec) {
    if (!backup.empty()) fs::rename(backup, target, ec);
    fs::remove_all(staging, ec);
    Fail(ErrorKind::kPersistence, kModule, "cannot move checkpoint into " + target.string());
  }
  if (!backup.empty()) fs::remove_all(backup, ec);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& directory,
                          const std::optional<std::string>& expected_backend) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    Fail(ErrorKind::kPersistence, kModule,
         "checkpoint directory not found: " + directory.string());
  }
  const fs::path meta_path = directory / "metadata.json";
  if (!fs::exists(meta_path)) Incompatible("missing metadata.json");

  Checkpoint ckpt;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ReadFileText(meta_path));
    if (meta.at("format").get<std::string>() != kFormat) {
      Incompatible("not an inctrl checkpoint");
    }
    const int version = meta.at("version").get<int>();
    if (version != kCheckpointVersion) {
      Incompatible("checkpoint version " + std::to_string(version) +
                   ", this build reads version " +
                   std::to_string(kCheckpointVersion));
    }
    ckpt.backend_id = meta.at("backend").get<std::string>();
    ckpt.epochs = meta.at("epochs").get<int>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.config = meta.at("config");
    ckpt.params.scorer.alpha = meta.at("alpha").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Incompatible(std::string("corrupt metadata: ") + e.what());
  }
  if (expected_backend && *expected_backend != ckpt.backend_id) {
    Incompatible("checkpoint was trained with backend '" + ckpt.backend_id +
                 "', current backend is '" + *expected_backend + "'");
  }

  const std::vector<std::pair<std::string, Mlp*>> groups = {
      {"adapter", &ckpt.params.adapter},
      {"classifier", &ckpt.params.classifier},
      {"head", &ckpt.params.scorer.head}};
  for (const auto& [name, net] : groups) {
    std::vector<int> widths;
    std::string file;
    std::string digest;
    try {
      const auto& blob = meta.at("blobs").at(name);
      widths = blob.at("widths").get<std::vector<int>>();
      file = blob.at("file").get<std::string>();
      digest = blob.at("sha256").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      Incompatible("corrupt blob entry '" + name + "': " + e.what());
    }
    if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
      Incompatible("blob path escapes checkpoint directory");
    }
    Mlp shaped;
    try {
      shaped = Mlp(widths);
    } catch (const Error&) {
      Incompatible("invalid widths for '" + name + "'");
    }
    const fs::path path = directory / file;
    if (!fs::exists(path)) Incompatible("missing blob " + file);
    const auto bytes = ReadFileBytes(path);
    if (ToHex(Sha256(bytes)) != digest) Incompatible("checksum mismatch in " + file);
    if (bytes.size() != static_cast<std::size_t>(shaped.ParameterCount()) * sizeof(double)) {
      Incompatible("size mismatch in " + file);
    }
    Vec flat(shaped.ParameterCount());
    std::memcpy(flat.data(), bytes.data(), bytes.size());
    shaped.Unflatten(flat);
    *net = std::move(shaped);
  }
  if (!ckpt.params.AllFinite()) Incompatible("non-finite parameters");

  const fs::path history = directory / "loss_history.csv";
  if (fs::exists(history)) {
    std::ifstream in(history);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) Incompatible("malformed loss_history.csv");
      try {
        ckpt.loss_history.push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        Incompatible("malformed loss_history.csv");
      }
    }
  }
  return ckpt;
}

}  // namespace inctrl
