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

#ifndef INCTRL_PATCH_RESIDUAL_HPP_
#define INCTRL_PATCH_RESIDUAL_HPP_

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "inctrl/encoder.hpp"
#include "inctrl/error.hpp"
#include "inctrl/types.hpp"

namespace inctrl {

// h x w grid of residuals in [0, 2]. `layer` is set for per-layer maps and
// empty for the layer-averaged map.
struct ResidualMap {
  Mat values;
  std::optional<int> layer;

  GridShape shape() const {
    return {static_cast<int>(values.rows()), static_cast<int>(values.cols())};
  }
};

struct ResidualDiagnostics {
  // Patches (query or prompt) whose embedding had zero norm and therefore
  // entered every cosine as 0.
  long zero_norm_patches = 0;
};

// 1 - cos of a patch with itself lands a few ulp off zero; anything below
// this is reported as an exact match.
inline constexpr double kResidualRoundoff = 1e-12;

namespace detail {

// Rows scaled to unit length; zero rows stay zero so their cosine with
// anything is 0.
template <typename Scalar>
PatchMatrix<Scalar> UnitRows(const PatchMatrix<Scalar>& m, long* zero_rows) {
  PatchMatrix<Scalar> out = m;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Scalar norm = out.row(r).norm();
    if (norm > Scalar(0)) {
      out.row(r) /= norm;
    } else {
      out.row(r).setZero();
      if (zero_rows != nullptr) ++*zero_rows;
    }
  }
  return out;
}

}  // namespace detail

// Residual of every query patch against its most similar patch across all
// prompt grids: 1 - max cosine. Exact search over every prompt patch.
template <typename Scalar>
Matrix<Scalar> LayerResidualMap(const PatchMatrix<Scalar>& query,
                                std::span<const PatchMatrix<Scalar>> prompts,
                                GridShape grid,
                                ResidualDiagnostics* diagnostics = nullptr) {
  if (prompts.empty()) {
    Fail(ErrorKind::kInvalidInput, "patch_residual", "empty prompt list");
  }
  if (query.rows() != grid.size()) {
    Fail(ErrorKind::kContract, "patch_residual",
         "query rows do not match the patch grid");
  }
  const Eigen::Index d = query.cols();
  Eigen::Index total = 0;
  for (const auto& p : prompts) {
    if (p.rows() != query.rows() || p.cols() != d) {
      Fail(ErrorKind::kContract, "patch_residual",
           "prompt grid shape differs from query");
    }
    total += p.rows();
  }

  long zero_rows = 0;
  const PatchMatrix<Scalar> q = detail::UnitRows(query, &zero_rows);
  PatchMatrix<Scalar> bank(total, d);
  Eigen::Index offset = 0;
  for (const auto& p : prompts) {
    bank.middleRows(offset, p.rows()) = detail::UnitRows(p, &zero_rows);
    offset += p.rows();
  }
  if (diagnostics != nullptr) diagnostics->zero_norm_patches += zero_rows;

  const Matrix<Scalar> similarity = q * bank.transpose();
  const Vector<Scalar> best = similarity.rowwise().maxCoeff();

  Matrix<Scalar> map(grid.height, grid.width);
  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) {
      const Scalar r = Scalar(1) - best(i * grid.width + j);
      map(i, j) = r < Scalar(kResidualRoundoff) ? Scalar(0)
                                                : std::min(r, Scalar(2));
    }
  }
  return map;
}

ResidualMap LayerResidualMap(const PatchMat& query,
                             std::span<const PatchMat> prompts, GridShape grid,
                             int layer,
                             ResidualDiagnostics* diagnostics = nullptr);

// Element-wise mean of equally shaped maps.
ResidualMap AggregateResidual(std::span<const ResidualMap> layer_maps);

// Maximum element of the map (the fine-grained patch score).
double PatchLevelScore(const ResidualMap& map);

// Layers that feed the aggregate; empty means every backend layer.
using LayerSelection = std::vector<int>;

std::vector<ResidualMap> LayerResidualMaps(
    const PatchTokenMaps& query, std::span<const PatchTokenMaps> prompts,
    const LayerSelection& layers, ResidualDiagnostics* diagnostics = nullptr);

ResidualMap PatchResidualMap(const PatchTokenMaps& query,
                             std::span<const PatchTokenMaps> prompts,
                             const LayerSelection& layers,
                             ResidualDiagnostics* diagnostics = nullptr);

}  // namespace inctrl

#endif  // INCTRL_PATCH_RESIDUAL_HPP_
