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

#include "inctrl/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "inctrl/digest.hpp"
#include "inctrl/error.hpp"
#include "inctrl/io.hpp"
#include "inctrl/random.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "encoder";

Mat RandomMatrix(Rng& rng, int rows, int cols, double scale) {
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = scale * rng.Normal();
  }
  return m;
}

Vec RandomVector(Rng& rng, int n, double scale) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.Normal();
  return v;
}

// Integer boundaries splitting [0, extent) into `parts` near-equal spans.
int Boundary(int extent, int parts, int k) {
  return static_cast<int>(static_cast<long>(extent) * k / parts);
}

}  // namespace

void PatchTokenMaps::Validate() const {
  if (layers.empty()) Fail(ErrorKind::kContract, kModule, "no token layers");
  const auto rows = layers.front().rows();
  const auto cols = layers.front().cols();
  if (rows != grid.size() || cols <= 0) {
    Fail(ErrorKind::kContract, kModule, "layer shape disagrees with grid");
  }
  for (const auto& layer : layers) {
    if (layer.rows() != rows || layer.cols() != cols) {
      Fail(ErrorKind::kContract, kModule, "layers differ in shape");
    }
  }
  if (class_embedding.size() == 0) {
    Fail(ErrorKind::kContract, kModule, "missing class embedding");
  }
}

void EncoderBackend::CheckImage(const ImageTensor& image) const {
  const int res = geometry().resolution;
  if (image.resolution != res) {
    Fail(ErrorKind::kContract, kModule,
         "image resolution " + std::to_string(image.resolution) +
             " does not match backend resolution " + std::to_string(res));
  }
  for (const auto& ch : image.channels) {
    if (ch.rows() != res || ch.cols() != res) {
      Fail(ErrorKind::kContract, kModule, "image channel shape mismatch");
    }
    if (!ch.allFinite()) {
      Fail(ErrorKind::kInvalidInput, kModule, "non-finite image value");
    }
  }
}

void EncoderBackend::CheckPrompt(std::string_view prompt) {
  if (prompt.empty()) Fail(ErrorKind::kInvalidInput, kModule, "empty prompt");
}

MockEncoder::MockEncoder(const MockEncoderConfig& config) : config_(config) {
  if (config.layers < 1 || config.grid < 1 || config.patch_dim < 1 ||
      config.global_dim < 1) {
    Fail(ErrorKind::kInvalidInput, kModule, "mock geometry must be positive");
  }
  if (config.resolution < config.grid * kPoolCells) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "mock resolution must be at least grid * " +
             std::to_string(kPoolCells));
  }
  if (!(config.jitter >= 0.0) || config.jitter > 1.0) {
    Fail(ErrorKind::kInvalidInput, kModule, "mock jitter must be in [0, 1]");
  }
  geometry_.grid = {config.grid, config.grid};
  geometry_.patch_dim = config.patch_dim;
  geometry_.global_dim = config.global_dim;
  geometry_.layer_count = config.layers;
  geometry_.resolution = config.resolution;

  Rng rng(DigestSeed(
      Sha256("mock-encoder-weights:" + std::to_string(config.seed))));
  const double in_scale = 1.5 / std::sqrt(static_cast<double>(kDescriptorDim));
  const double rec_scale = 1.0 / std::sqrt(static_cast<double>(config.patch_dim));
  for (int l = 0; l < config.layers; ++l) {
    layer_weights_.push_back(
        RandomMatrix(rng, config.patch_dim, kDescriptorDim, in_scale));
    layer_bias_.push_back(RandomVector(rng, config.patch_dim, 0.1));
    layer_recurrent_.push_back(
        RandomMatrix(rng, config.patch_dim, config.patch_dim, rec_scale));
  }
  const int global_in = config.patch_dim + kDescriptorDim;
  global_weights_ = RandomMatrix(rng, config.global_dim, global_in,
                                 1.5 / std::sqrt(static_cast<double>(global_in)));
  global_bias_ = RandomVector(rng, config.global_dim, 0.1);
}

std::string MockEncoder::identifier() const {
  return "mock:l" + std::to_string(config_.layers) + ":g" +
         std::to_string(config_.grid) + ":d" +
         std::to_string(config_.patch_dim) + ":gd" +
         std::to_string(config_.global_dim) + ":r" +
         std::to_string(config_.resolution) + ":s" +
         std::to_string(config_.seed);
}

Vec MockEncoder::PatchDescriptor(const ImageTensor& image, int pi,
                                 int pj) const {
  const int res = config_.resolution;
  const int g = config_.grid;
  const int y0 = Boundary(res, g, pi);
  const int y1 = Boundary(res, g, pi + 1);
  const int x0 = Boundary(res, g, pj);
  const int x1 = Boundary(res, g, pj + 1);
  Vec desc(kDescriptorDim);
  int k = 0;
  for (int c = 0; c < 3; ++c) {
    const auto& ch = image.channels[c];
    for (int cy = 0; cy < kPoolCells; ++cy) {
      const int ya = y0 + Boundary(y1 - y0, kPoolCells, cy);
      const int yb = y0 + Boundary(y1 - y0, kPoolCells, cy + 1);
      for (int cx = 0; cx < kPoolCells; ++cx) {
        const int xa = x0 + Boundary(x1 - x0, kPoolCells, cx);
        const int xb = x0 + Boundary(x1 - x0, kPoolCells, cx + 1);
        desc(k++) =
            ch.block(ya, xa, yb - ya, xb - xa).cast<double>().mean();
      }
    }
  }
  return desc;
}

PatchTokenMaps MockEncoder::EncodeImage(const ImageTensor& image) const {
  CheckImage(image);
  const int g = config_.grid;
  const int n = g * g;
  const int d = config_.patch_dim;

  Mat descriptors(kDescriptorDim, n);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) descriptors.col(i * g + j) = PatchDescriptor(image, i, j);
  }

  Rng jitter(DigestSeed(image.ContentDigest()));
  const double amp = config_.jitter;

  PatchTokenMaps out;
  out.grid = geometry_.grid;
  Mat previous = Mat::Zero(d, n);
  for (int l = 0; l < config_.layers; ++l) {
    Mat pre = layer_weights_[l] * descriptors + layer_recurrent_[l] * previous;
    pre.colwise() += layer_bias_[l];
    Mat act = pre.array().tanh().matrix();
    previous = act;
    PatchMat tokens = act.transpose();
    for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
      for (Eigen::Index c = 0; c < tokens.cols(); ++c) {
        tokens(r, c) += amp * jitter.Uniform(-1.0, 1.0);
      }
    }
    out.layers.push_back(std::move(tokens));
  }

  Vec pooled(d + kDescriptorDim);
  pooled << previous.rowwise().mean(), descriptors.rowwise().mean();
  Vec global = (global_weights_ * pooled + global_bias_).array().tanh().matrix();
  for (Eigen::Index i = 0; i < global.size(); ++i) {
    global(i) += amp * jitter.Uniform(-1.0, 1.0);
  }
  out.class_embedding = std::move(global);
  return out;
}

Vec MockEncoder::EncodeText(std::string_view prompt, bool normalize) const {
  CheckPrompt(prompt);
  Rng rng(DigestSeed(Sha256("mock-text:" + std::to_string(config_.seed) + ":" +
                            std::string(prompt))));
  Vec v(config_.global_dim);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.Uniform(-1.0, 1.0);
  if (normalize) v.normalize();
  return v;
}

ExternalEncoder::ExternalEncoder(const std::filesystem::path& directory)
    : directory_(directory) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ReadFileText(directory / "backend.json"));
    identifier_ = meta.at("identifier").get<std::string>();
    const auto grid = meta.at("grid");
    geometry_.grid = {grid.at(0).get<int>(), grid.at(1).get<int>()};
    geometry_.patch_dim = meta.at("patch_dim").get<int>();
    geometry_.global_dim = meta.at("global_dim").get<int>();
    geometry_.layer_count = meta.at("layers").get<int>();
    geometry_.resolution = meta.value("resolution", 240);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kParse, kModule,
         "bad backend.json in " + directory.string() + ": " + e.what());
  }
  if (geometry_.grid.size() <= 0 || geometry_.patch_dim <= 0 ||
      geometry_.global_dim <= 0 || geometry_.layer_count <= 0) {
    Fail(ErrorKind::kInvalidInput, kModule, "external geometry must be positive");
  }
  const auto text_path = directory / "text.json";
  if (std::filesystem::exists(text_path)) {
    try {
      const auto text = nlohmann::json::parse(ReadFileText(text_path));
      for (const auto& [prompt, values] : text.items()) {
        const auto vec = values.get<std::vector<double>>();
        if (static_cast<int>(vec.size()) != geometry_.global_dim) {
          Fail(ErrorKind::kContract, kModule,
               "text embedding dimension mismatch for '" + prompt + "'");
        }
        text_.emplace(prompt, Eigen::Map<const Vec>(vec.data(), vec.size()));
      }
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kParse, kModule, std::string("bad text.json: ") + e.what());
    }
  }
}

PatchTokenMaps ExternalEncoder::EncodeImage(const ImageTensor& image) const {
  CheckImage(image);
  if (!image.source_digest) {
    Fail(ErrorKind::kContract, kModule,
         "external backend needs images loaded from files");
  }
  const auto path = directory_ / "images" / (ToHex(*image.source_digest) + ".bin");
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kIo, kModule, "no exported embedding at " + path.string());
  }
  const auto bytes = ReadFileBytes(path);
  const auto& geo = geometry_;
  const std::size_t patch_values = static_cast<std::size_t>(geo.layer_count) *
                                   geo.grid.size() * geo.patch_dim;
  const std::size_t expected = (patch_values + geo.global_dim) * sizeof(float);
  if (bytes.size() != expected) {
    Fail(ErrorKind::kContract, kModule,
         "embedding file " + path.string() + " has " +
             std::to_string(bytes.size()) + " bytes, expected " +
             std::to_string(expected));
  }
  // Little-endian hosts only; the loader is glue for x86/ARM workstations.
  std::vector<float> values(patch_values + geo.global_dim);
  std::memcpy(values.data(), bytes.data(), bytes.size());

  PatchTokenMaps out;
  out.grid = geo.grid;
  std::size_t k = 0;
  for (int l = 0; l < geo.layer_count; ++l) {
    PatchMat layer(geo.grid.size(), geo.patch_dim);
    for (Eigen::Index r = 0; r < layer.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.cols(); ++c) layer(r, c) = values[k++];
    }
    out.layers.push_back(std::move(layer));
  }
  out.class_embedding.resize(geo.global_dim);
  for (int i = 0; i < geo.global_dim; ++i) out.class_embedding(i) = values[k++];
  if (!out.class_embedding.allFinite()) {
    Fail(ErrorKind::kNumeric, kModule, "non-finite exported embedding");
  }
  return out;
}

Vec ExternalEncoder::EncodeText(std::string_view prompt, bool normalize) const {
  CheckPrompt(prompt);
  const auto it = text_.find(prompt);
  if (it == text_.end()) {
    Fail(ErrorKind::kIo, kModule,
         "no exported text embedding for '" + std::string(prompt) + "'");
  }
  Vec v = it->second;
  if (normalize) v.normalize();
  return v;
}

}  // namespace inctrl
