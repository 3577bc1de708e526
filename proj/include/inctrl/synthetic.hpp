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

#ifndef INCTRL_SYNTHETIC_HPP_
#define INCTRL_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inctrl/data.hpp"
#include "inctrl/image.hpp"
#include "inctrl/random.hpp"

namespace inctrl {

// Images are a grid of tiles; each tile is a motif of flat-colored cells.
// A category owns one or more normal modes, each with its own motif
// palette, and a normal image draws every tile from a single mode. An
// anomaly is a normal image with a few tiles replaced by motifs that belong
// to no palette.
//
// With the mock encoder set to the same tile grid (and cells matching its
// pooling), a normal tile reproduces a prompt tile of the same mode up to
// pixel noise, while a foreign tile matches nothing.
struct SyntheticConfig {
  std::vector<std::string> categories = {"c0", "c1", "c2", "c3"};
  int modes_per_category = 1;
  int motifs_per_mode = 3;
  int train_normals = 20;     // per category
  int train_anomalies = 10;
  int test_normals = 20;
  int test_anomalies = 20;
  int image_size = 64;
  int grid = 4;
  int cells = 4;              // cells per tile side
  int channels = 3;           // 1 or 3
  double noise = 0.02;        // per-pixel Gaussian sigma
  int min_defects = 1;
  int max_defects = 2;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SyntheticImage {
  RawImage image;
  int label = 0;
  int mode = 0;
  std::vector<int> defect_tiles;  // row-major tile indices
};

// Deterministic in (config, category index, draw order of rng).
class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(SyntheticConfig config);

  const SyntheticConfig& config() const { return config_; }

  SyntheticImage Normal(std::size_t category, Rng& rng) const;
  SyntheticImage Normal(std::size_t category, int mode, Rng& rng) const;
  SyntheticImage Anomaly(std::size_t category, Rng& rng) const;

 private:
  using Motif = std::vector<float>;  // cells * cells * channels

  SyntheticImage Clean(std::size_t category, int mode, Rng& rng) const;
  Motif RandomMotif(Rng& rng) const;
  void PaintTile(RawImage& image, int tile, const Motif& motif) const;
  void AddNoise(RawImage& image, Rng& rng) const;

  SyntheticConfig config_;
  // palettes_[category][mode][motif]
  std::vector<std::vector<std::vector<Motif>>> palettes_;
};

// Writes PNGs under `directory/<category>/<split>/` plus
// `directory/manifest.csv`, and returns the manifest.
DatasetManifest WriteSyntheticDataset(const SyntheticConfig& config,
                                      const std::filesystem::path& directory,
                                      const std::string& name = "synthetic");

}  // namespace inctrl

#endif  // INCTRL_SYNTHETIC_HPP_
