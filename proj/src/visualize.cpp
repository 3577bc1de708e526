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

#include "inctrl/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "inctrl/error.hpp"
#include "inctrl/io.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "cli";

// ColorBrewer YlOrRd, 9 classes.
constexpr std::array<std::array<float, 3>, 9> kRamp = {{
    {255 / 255.f, 255 / 255.f, 204 / 255.f},
    {255 / 255.f, 237 / 255.f, 160 / 255.f},
    {254 / 255.f, 217 / 255.f, 118 / 255.f},
    {254 / 255.f, 178 / 255.f, 76 / 255.f},
    {253 / 255.f, 141 / 255.f, 60 / 255.f},
    {252 / 255.f, 78 / 255.f, 42 / 255.f},
    {227 / 255.f, 26 / 255.f, 28 / 255.f},
    {189 / 255.f, 0 / 255.f, 38 / 255.f},
    {128 / 255.f, 0 / 255.f, 38 / 255.f},
}};

}  // namespace

std::array<float, 3> HeatColor(double t) {
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * (kRamp.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, kRamp.size() - 1);
  const double f = pos - static_cast<double>(lo);
  std::array<float, 3> out;
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<float>((1.0 - f) * kRamp[lo][c] + f * kRamp[hi][c]);
  }
  return out;
}

Mat NormalizeHeat(const ScoreBreakdown& breakdown, double min_span) {
  const Mat& v = breakdown.holistic_map.values;
  if (v.size() == 0) Fail(ErrorKind::kInvalidInput, kModule, "empty holistic map");
  const double floor = breakdown.image_score + breakdown.text_score;
  const double span = std::max(v.maxCoeff() - floor, min_span);
  return ((v.array() - floor) / span).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

RawImage RenderHeatmap(const ScoreBreakdown& breakdown, int size) {
  if (size < 1) Fail(ErrorKind::kInvalidInput, kModule, "heatmap size must be >= 1");
  const Mat t = NormalizeHeat(breakdown);
  const auto rows = t.rows();
  const auto cols = t.cols();
  RawImage img = MakeRawImage(size, size, 3);
  for (int y = 0; y < size; ++y) {
    const auto r = std::min<Eigen::Index>(y * rows / size, rows - 1);
    for (int x = 0; x < size; ++x) {
      const auto c = std::min<Eigen::Index>(x * cols / size, cols - 1);
      const auto color = HeatColor(t(r, c));
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = color[ch];
    }
  }
  return img;
}

std::string FormatSidecar(const ScoreBreakdown& b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "s_p\t%.17g\ns_i\t%.17g\ns_a\t%.17g\nscore\t%.17g\n",
                b.patch_score, b.image_score, b.text_score, b.score);
  return buf;
}

void EmitResidualVisualization(const ScoreBreakdown& breakdown, int size,
                               const std::filesystem::path& png_path) {
  const RawImage img = RenderHeatmap(breakdown, size);
  auto sidecar = png_path;
  sidecar.replace_extension(".txt");
  WriteFileAtomic(sidecar, FormatSidecar(breakdown));
  WritePng(img, png_path);
}

}  // namespace inctrl
