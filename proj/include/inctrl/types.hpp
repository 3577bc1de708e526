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

#ifndef INCTRL_TYPES_HPP_
#define INCTRL_TYPES_HPP_

#include <Eigen/Dense>

namespace inctrl {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// One row per patch in row-major grid order (index = i * w + j), one column
// per embedding channel.
template <typename Scalar>
using PatchMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = Vector<double>;
using Mat = Matrix<double>;
using PatchMat = PatchMatrix<double>;

struct GridShape {
  int height = 0;
  int width = 0;

  int size() const { return height * width; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

}  // namespace inctrl

#endif  // INCTRL_TYPES_HPP_
