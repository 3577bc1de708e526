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

// Shared fixtures and independent reference implementations for tests.
// The oracles here are deliberately naive: plain loops over std::vector,
// no Eigen expressions, so they do not share code paths with the library.

#ifndef INCTRL_TESTS_SUPPORT_HPP_
#define INCTRL_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "inctrl/detector.hpp"
#include "inctrl/encoder.hpp"
#include "inctrl/image.hpp"
#include "inctrl/mlp.hpp"
#include "inctrl/random.hpp"
#include "inctrl/types.hpp"

namespace inctrl::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("inctrl_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline PatchMat RandomPatches(Rng& rng, int rows, int dim) {
  PatchMat m(rows, dim);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < dim; ++c) m(r, c) = rng.Uniform(-1.0, 1.0);
  }
  return m;
}

inline Vec RandomVec(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.Uniform(lo, hi);
  return v;
}

inline PatchTokenMaps RandomTokens(Rng& rng, GridShape grid, int layers, int dim,
                                   int global_dim) {
  PatchTokenMaps t;
  t.grid = grid;
  for (int l = 0; l < layers; ++l) t.layers.push_back(RandomPatches(rng, grid.size(), dim));
  t.class_embedding = RandomVec(rng, global_dim);
  return t;
}

// 1 - max cosine, computed patch by patch with explicit loops.
inline std::vector<std::vector<double>> BruteForceResidual(
    const PatchMat& query, const std::vector<PatchMat>& prompts, int h, int w) {
  auto dot = [](const PatchMat& a, int ra, const PatchMat& b, int rb) {
    double s = 0.0;
    for (int k = 0; k < a.cols(); ++k) s += a(ra, k) * b(rb, k);
    return s;
  };
  std::vector<std::vector<double>> out(h, std::vector<double>(w, 0.0));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int q = i * w + j;
      const double qn = std::sqrt(dot(query, q, query, q));
      double best = -2.0;
      for (const auto& p : prompts) {
        for (int r = 0; r < p.rows(); ++r) {
          const double pn = std::sqrt(dot(p, r, p, r));
          const double cos = (qn == 0.0 || pn == 0.0) ? 0.0 : dot(query, q, p, r) / (qn * pn);
          best = std::max(best, cos);
        }
      }
      out[i][j] = 1.0 - best;
    }
  }
  return out;
}

// Dense forward pass with ReLU between layers, written out element-wise.
inline std::vector<double> MlpOracle(const Mlp& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& W = layers[l].weight;
    std::vector<double> z(W.rows(), 0.0);
    for (int r = 0; r < W.rows(); ++r) {
      double s = layers[l].bias(r);
      for (int c = 0; c < W.cols(); ++c) s += W(r, c) * a[c];
      z[r] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    a = z;
  }
  return a;
}

inline std::vector<double> ToStd(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Count of (positive, negative) pairs won by the positive, ties one half.
inline double PairwiseAuroc(const std::vector<double>& scores,
                            const std::vector<int>& labels) {
  double wins2 = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins2 += 2.0;
      } else if (scores[i] == scores[j]) {
        wins2 += 1.0;
      }
    }
  }
  return wins2 / (2.0 * pairs);
}

// Image with a smooth gradient plus a per-seed offset; distinct seeds give
// distinct pixels.
inline RawImage PatternImage(int size, int channels, std::uint64_t seed) {
  Rng rng(seed);
  RawImage img = MakeRawImage(size, size, channels);
  const double a = rng.Uniform(0.1, 0.9);
  const double b = rng.Uniform(0.1, 0.9);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < channels; ++c) {
        const double v = 0.5 + 0.4 * std::sin(a * x + b * y + c) * std::cos(b * x - a * y);
        img.at(y, x, c) = static_cast<float>(std::clamp(v + 0.05 * rng.Uniform(-1, 1), 0.0, 1.0));
      }
    }
  }
  return img;
}

// Mock encoder whose patch grid lines up with synthetic tiles of the given
// geometry, behind a fresh feature cache.
inline std::shared_ptr<FeatureCache> TileAlignedFeatures(int resolution, int grid,
                                                         int patch_dim = 16,
                                                         int global_dim = 16) {
  MockEncoderConfig m;
  m.layers = 2;
  m.grid = grid;
  m.patch_dim = patch_dim;
  m.global_dim = global_dim;
  m.resolution = resolution;
  PreprocessConfig p;
  p.resolution = resolution;
  return std::make_shared<FeatureCache>(std::make_shared<MockEncoder>(m), p);
}

}  // namespace inctrl::testing

#endif  // INCTRL_TESTS_SUPPORT_HPP_
