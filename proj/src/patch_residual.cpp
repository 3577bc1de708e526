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

#include "inctrl/patch_residual.hpp"

#include <iostream>
#include <string>

namespace inctrl {
namespace {

constexpr char kModule[] = "patch_residual";

void ReportZeroNorm(const ResidualDiagnostics& diag) {
  if (diag.zero_norm_patches > 0) {
    std::clog << "[patch_residual] " << diag.zero_norm_patches
              << " zero-norm patch embedding(s) treated as cosine 0\n";
  }
}

}  // namespace

ResidualMap LayerResidualMap(const PatchMat& query,
                             std::span<const PatchMat> prompts, GridShape grid,
                             int layer, ResidualDiagnostics* diagnostics) {
  ResidualDiagnostics local;
  ResidualMap out;
  out.values = LayerResidualMap<double>(query, prompts, grid, &local);
  out.layer = layer;
  if (diagnostics != nullptr) {
    diagnostics->zero_norm_patches += local.zero_norm_patches;
  } else {
    ReportZeroNorm(local);
  }
  return out;
}

ResidualMap AggregateResidual(std::span<const ResidualMap> layer_maps) {
  if (layer_maps.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "no residual maps to aggregate");
  }
  const GridShape shape = layer_maps.front().shape();
  Mat sum = Mat::Zero(shape.height, shape.width);
  for (const auto& m : layer_maps) {
    if (m.shape() != shape) {
      Fail(ErrorKind::kContract, kModule, "residual maps differ in shape");
    }
    sum += m.values;
  }
  ResidualMap out;
  out.values = sum / static_cast<double>(layer_maps.size());
  return out;
}

double PatchLevelScore(const ResidualMap& map) {
  if (map.values.size() == 0) {
    Fail(ErrorKind::kInvalidInput, kModule, "empty residual map");
  }
  return map.values.maxCoeff();
}

std::vector<ResidualMap> LayerResidualMaps(
    const PatchTokenMaps& query, std::span<const PatchTokenMaps> prompts,
    const LayerSelection& layers, ResidualDiagnostics* diagnostics) {
  if (prompts.empty()) {
    Fail(ErrorKind::kInvalidInput, kModule, "empty prompt list");
  }
  const int n = static_cast<int>(query.layers.size());
  std::vector<int> selected = layers;
  if (selected.empty()) {
    for (int l = 0; l < n; ++l) selected.push_back(l);
  }
  for (const auto& p : prompts) {
    if (p.grid != query.grid || p.layers.size() != query.layers.size()) {
      Fail(ErrorKind::kContract, kModule,
           "prompt embeddings differ from query geometry");
    }
  }
  ResidualDiagnostics local;
  std::vector<ResidualMap> maps;
  std::vector<PatchMat> prompt_layer;
  prompt_layer.reserve(prompts.size());
  for (int l : selected) {
    if (l < 0 || l >= n) {
      Fail(ErrorKind::kInvalidInput, kModule,
           "layer index " + std::to_string(l) + " outside [0, " +
               std::to_string(n) + ")");
    }
    prompt_layer.clear();
    for (const auto& p : prompts) prompt_layer.push_back(p.layers[l]);
    maps.push_back(LayerResidualMap(query.layers[l], prompt_layer, query.grid,
                                    l, &local));
  }
  if (diagnostics != nullptr) {
    diagnostics->zero_norm_patches += local.zero_norm_patches;
  } else {
    ReportZeroNorm(local);
  }
  return maps;
}

ResidualMap PatchResidualMap(const PatchTokenMaps& query,
                             std::span<const PatchTokenMaps> prompts,
                             const LayerSelection& layers,
                             ResidualDiagnostics* diagnostics) {
  const auto maps = LayerResidualMaps(query, prompts, layers, diagnostics);
  return AggregateResidual(maps);
}

}  // namespace inctrl
