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

#include "inctrl/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "inctrl/digest.hpp"
#include "inctrl/error.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "data";

int Boundary(int extent, int parts, int k) {
  return static_cast<int>(static_cast<long>(extent) * k / parts);
}

}  // namespace

void SyntheticConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) Fail(ErrorKind::kInvalidInput, kModule, what);
  };
  require(!categories.empty(), "synthetic: no categories");
  require(modes_per_category >= 1 && motifs_per_mode >= 1,
          "synthetic: modes and motifs must be >= 1");
  require(train_normals >= 0 && train_anomalies >= 0 && test_normals >= 0 &&
              test_anomalies >= 0,
          "synthetic: counts must be >= 0");
  require(grid >= 1 && cells >= 1, "synthetic: grid and cells must be >= 1");
  require(image_size >= grid * cells, "synthetic: image_size < grid * cells");
  require(channels == 1 || channels == 3, "synthetic: channels must be 1 or 3");
  require(noise >= 0.0, "synthetic: noise must be >= 0");
  require(min_defects >= 1 && max_defects >= min_defects &&
              max_defects <= grid * grid,
          "synthetic: defect count range invalid");
}

SyntheticGenerator::SyntheticGenerator(SyntheticConfig config)
    : config_(std::move(config)) {
  config_.Validate();
  for (const auto& name : config_.categories) {
    Rng rng(DigestSeed(
        Sha256("synthetic-palette:" + std::to_string(config_.seed) + ":" + name)));
    std::vector<std::vector<Motif>> modes(config_.modes_per_category);
    for (auto& mode : modes) {
      for (int m = 0; m < config_.motifs_per_mode; ++m) mode.push_back(RandomMotif(rng));
    }
    palettes_.push_back(std::move(modes));
  }
}

SyntheticGenerator::Motif SyntheticGenerator::RandomMotif(Rng& rng) const {
  Motif motif(static_cast<std::size_t>(config_.cells * config_.cells * config_.channels));
  for (auto& v : motif) v = static_cast<float>(rng.Uniform(0.05, 0.95));
  return motif;
}

void SyntheticGenerator::PaintTile(RawImage& image, int tile,
                                   const Motif& motif) const {
  const int g = config_.grid;
  const int s = config_.image_size;
  const int ty = tile / g;
  const int tx = tile % g;
  const int y0 = Boundary(s, g, ty);
  const int y1 = Boundary(s, g, ty + 1);
  const int x0 = Boundary(s, g, tx);
  const int x1 = Boundary(s, g, tx + 1);
  const int n = config_.cells;
  for (int cy = 0; cy < n; ++cy) {
    const int ya = y0 + Boundary(y1 - y0, n, cy);
    const int yb = y0 + Boundary(y1 - y0, n, cy + 1);
    for (int cx = 0; cx < n; ++cx) {
      const int xa = x0 + Boundary(x1 - x0, n, cx);
      const int xb = x0 + Boundary(x1 - x0, n, cx + 1);
      for (int c = 0; c < config_.channels; ++c) {
        const float v = motif[static_cast<std::size_t>((cy * n + cx) * config_.channels + c)];
        for (int y = ya; y < yb; ++y) {
          for (int x = xa; x < xb; ++x) image.at(y, x, c) = v;
        }
      }
    }
  }
}

void SyntheticGenerator::AddNoise(RawImage& image, Rng& rng) const {
  if (config_.noise == 0.0) return;
  for (auto& v : image.samples) {
    v = std::clamp(v + static_cast<float>(config_.noise * rng.Normal()), 0.0f, 1.0f);
  }
}

SyntheticImage SyntheticGenerator::Normal(std::size_t category, Rng& rng) const {
  const int mode = static_cast<int>(rng.Below(config_.modes_per_category));
  return Normal(category, mode, rng);
}

SyntheticImage SyntheticGenerator::Normal(std::size_t category, int mode,
                                          Rng& rng) const {
  if (category >= palettes_.size() || mode < 0 ||
      mode >= config_.modes_per_category) {
    Fail(ErrorKind::kInvalidInput, kModule, "synthetic: category or mode out of range");
  }
  SyntheticImage out = Clean(category, mode, rng);
  AddNoise(out.image, rng);
  return out;
}

SyntheticImage SyntheticGenerator::Clean(std::size_t category, int mode,
                                         Rng& rng) const {
  const auto& palette = palettes_[category][static_cast<std::size_t>(mode)];
  SyntheticImage out;
  out.mode = mode;
  out.image = MakeRawImage(config_.image_size, config_.image_size, config_.channels);
  for (int t = 0; t < config_.grid * config_.grid; ++t) {
    PaintTile(out.image, t, palette[rng.Below(palette.size())]);
  }
  return out;
}

SyntheticImage SyntheticGenerator::Anomaly(std::size_t category, Rng& rng) const {
  if (category >= palettes_.size()) {
    Fail(ErrorKind::kInvalidInput, kModule, "synthetic: category out of range");
  }
  SyntheticImage out =
      Clean(category, static_cast<int>(rng.Below(config_.modes_per_category)), rng);
  out.label = 1;
  const int tiles = config_.grid * config_.grid;
  const int count = config_.min_defects +
                    static_cast<int>(rng.Below(config_.max_defects - config_.min_defects + 1));
  for (std::size_t idx : rng.SampleWithoutReplacement(tiles, count)) {
    out.defect_tiles.push_back(static_cast<int>(idx));
    PaintTile(out.image, static_cast<int>(idx), RandomMotif(rng));
  }
  AddNoise(out.image, rng);
  std::sort(out.defect_tiles.begin(), out.defect_tiles.end());
  return out;
}

DatasetManifest WriteSyntheticDataset(const SyntheticConfig& config,
                                      const std::filesystem::path& directory,
                                      const std::string& name) {
  SyntheticGenerator gen(config);
  DatasetManifest manifest;
  manifest.name = name;
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) Fail(ErrorKind::kPersistence, kModule, "cannot create " + directory.string());

  for (std::size_t c = 0; c < config.categories.size(); ++c) {
    const std::string& category = config.categories[c];
    Rng rng(DigestSeed(
        Sha256("synthetic-images:" + std::to_string(config.seed) + ":" + category)));
    struct Batch {
      Split split;
      int label;
      int count;
    };
    const Batch batches[] = {{Split::kTrain, 0, config.train_normals},
                             {Split::kTrain, 1, config.train_anomalies},
                             {Split::kTest, 0, config.test_normals},
                             {Split::kTest, 1, config.test_anomalies}};
    for (const auto& b : batches) {
      const auto sub = directory / category / std::string(SplitName(b.split));
      std::filesystem::create_directories(sub, ec);
      if (ec) Fail(ErrorKind::kPersistence, kModule, "cannot create " + sub.string());
      for (int i = 0; i < b.count; ++i) {
        const SyntheticImage img = b.label == 0 ? gen.Normal(c, rng) : gen.Anomaly(c, rng);
        char file[64];
        std::snprintf(file, sizeof(file), "%s_%04d.png", b.label == 0 ? "good" : "defect", i);
        const auto path = sub / file;
        WritePng(img.image, path);
        manifest.entries.push_back({path.string(), b.label, category, b.split});
      }
    }
  }
  SaveManifest(manifest, directory / "manifest.csv");
  return manifest;
}

}  // namespace inctrl
