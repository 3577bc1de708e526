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

#ifndef INCTRL_VISUALIZE_HPP_
#define INCTRL_VISUALIZE_HPP_

#include <array>
#include <filesystem>

#include "inctrl/image.hpp"
#include "inctrl/model.hpp"

namespace inctrl {

// Yellow-orange-red ramp; luminance decreases strictly with t in [0, 1], so
// deeper colors mean larger values.
std::array<float, 3> HeatColor(double t);

// Maps the holistic map to [0, 1]: the floor is the broadcast s_i + s_a
// level, the span is at least `min_span` so a near-flat map stays pale.
Mat NormalizeHeat(const ScoreBreakdown& breakdown, double min_span = 0.05);

// Nearest-neighbor upsampling of the normalized grid to size x size.
RawImage RenderHeatmap(const ScoreBreakdown& breakdown, int size);

// Writes the heatmap PNG at `png_path` and a sidecar next to it (same stem,
// `.txt`) with s_p, s_i, s_a and the final score. Both are written
// atomically; the PNG goes last, so its presence implies a complete pair.
void EmitResidualVisualization(const ScoreBreakdown& breakdown, int size,
                               const std::filesystem::path& png_path);

std::string FormatSidecar(const ScoreBreakdown& breakdown);

}  // namespace inctrl

#endif  // INCTRL_VISUALIZE_HPP_
