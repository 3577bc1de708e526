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

#ifndef INCTRL_ENCODER_HPP_
#define INCTRL_ENCODER_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "inctrl/image.hpp"
#include "inctrl/types.hpp"

namespace inctrl {

// Multi-layer patch embeddings plus the global class embedding of one image.
struct PatchTokenMaps {
  GridShape grid;
  std::vector<PatchMat> layers;  // each grid.size() x patch_dim
  Vec class_embedding;

  int patch_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().cols());
  }
  void Validate() const;
};

struct BackendGeometry {
  GridShape grid;
  int patch_dim = 0;
  int global_dim = 0;
  int layer_count = 0;
  int resolution = 0;
};

// Frozen vision-language encoder. Implementations are immutable after
// construction and safe to call from several threads.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::string identifier() const = 0;
  virtual const BackendGeometry& geometry() const = 0;

  virtual PatchTokenMaps EncodeImage(const ImageTensor& image) const = 0;
  virtual Vec EncodeText(std::string_view prompt, bool normalize) const = 0;

 protected:
  void CheckImage(const ImageTensor& image) const;
  static void CheckPrompt(std::string_view prompt);
};

struct MockEncoderConfig {
  int layers = 3;
  int grid = 4;
  int patch_dim = 8;
  int global_dim = 16;
  std::uint64_t seed = 0;
  int resolution = 240;
  // Amplitude of the per-image hash-seeded perturbation.
  double jitter = 0.01;
};

// Deterministic stand-in for a CLIP-style encoder. Patch tokens are fixed
// random projections of pooled patch pixels (so similar content gives
// similar tokens) plus a perturbation seeded by the SHA-256 of the tensor
// bytes. Every value stays within [-1 - jitter, 1 + jitter].
class MockEncoder final : public EncoderBackend {
 public:
  explicit MockEncoder(const MockEncoderConfig& config);

  std::string identifier() const override;
  const BackendGeometry& geometry() const override { return geometry_; }
  const MockEncoderConfig& config() const { return config_; }

  PatchTokenMaps EncodeImage(const ImageTensor& image) const override;
  Vec EncodeText(std::string_view prompt, bool normalize) const override;

  static constexpr int kPoolCells = 4;  // per patch side
  static constexpr int kDescriptorDim = kPoolCells * kPoolCells * 3;

 private:
  Vec PatchDescriptor(const ImageTensor& image, int pi, int pj) const;

  MockEncoderConfig config_;
  BackendGeometry geometry_;
  std::vector<Mat> layer_weights_;  // patch_dim x kDescriptorDim
  std::vector<Vec> layer_bias_;
  std::vector<Mat> layer_recurrent_;  // patch_dim x patch_dim
  Mat global_weights_;  // global_dim x (patch_dim + kDescriptorDim)
  Vec global_bias_;
};

// Replays embeddings exported from a real backbone. The directory holds
// `backend.json` (identifier and geometry), `text.json` (prompt -> vector)
// and `images/<sha256 of image file>.bin` with little-endian float32 values:
// layers x h x w x patch_dim patch tokens followed by global_dim values.
class ExternalEncoder final : public EncoderBackend {
 public:
  explicit ExternalEncoder(const std::filesystem::path& directory);

  std::string identifier() const override { return identifier_; }
  const BackendGeometry& geometry() const override { return geometry_; }

  PatchTokenMaps EncodeImage(const ImageTensor& image) const override;
  Vec EncodeText(std::string_view prompt, bool normalize) const override;

 private:
  std::filesystem::path directory_;
  std::string identifier_;
  BackendGeometry geometry_;
  std::map<std::string, Vec, std::less<>> text_;
};

}  // namespace inctrl

#endif  // INCTRL_ENCODER_HPP_
