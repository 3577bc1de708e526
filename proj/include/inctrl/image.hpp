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

#ifndef INCTRL_IMAGE_HPP_
#define INCTRL_IMAGE_HPP_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inctrl/digest.hpp"

namespace inctrl {

// Decoded raster, interleaved row-major samples scaled to [0, 1].
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<float> samples;
  // SHA-256 of the encoded file when the image came from disk.
  std::optional<Digest> source_digest;

  float at(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float& at(int y, int x, int c) {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

RawImage MakeRawImage(int width, int height, int channels, float fill = 0.0f);

// PNG (8/16-bit, any color type) and binary/ASCII PNM are supported.
RawImage ReadImage(const std::filesystem::path& path);

// Writes an 8-bit RGB or grayscale PNG. Samples are clamped to [0, 1].
void WritePng(const RawImage& image, const std::filesystem::path& path);

// Separable bicubic resampling with Pillow's kernel (a = -0.5) and its
// support widening when downscaling.
RawImage ResizeBicubic(const RawImage& image, int width, int height);

struct PreprocessConfig {
  int resolution = 240;
  std::array<double, 3> mean = {0.48145466, 0.4578275, 0.40821073};
  std::array<double, 3> std = {0.26862954, 0.26130258, 0.27577711};
};

// Standardized 3 x H x W tensor with H = W = resolution.
struct ImageTensor {
  int resolution = 0;
  std::array<Eigen::MatrixXf, 3> channels;
  std::optional<Digest> source_digest;

  // Digest of the tensor values; the mock encoder keys on this.
  Digest ContentDigest() const;
};

// Shortest side resized to the target resolution, then center-cropped,
// then standardized per channel. Grayscale is replicated to three channels.
ImageTensor PreprocessImage(const RawImage& raw, const PreprocessConfig& config);

ImageTensor LoadImageTensor(const std::filesystem::path& path,
                            const PreprocessConfig& config);

}  // namespace inctrl

#endif  // INCTRL_IMAGE_HPP_
