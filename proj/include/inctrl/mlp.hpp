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

#ifndef INCTRL_MLP_HPP_
#define INCTRL_MLP_HPP_

#include <span>
#include <vector>

#include "inctrl/random.hpp"
#include "inctrl/types.hpp"

namespace inctrl {

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight == b.weight && a.bias == b.bias;
  }
};

// Activations recorded during a forward pass, consumed by Backward().
struct MlpTrace {
  std::vector<Vec> inputs;  // input to each layer (post-ReLU for hidden)
  std::vector<Vec> pre;     // pre-activation of each layer
};

// Feed-forward stack with ReLU between layers and a linear output.
class Mlp {
 public:
  Mlp() = default;
  // widths = {in, hidden..., out}; all parameters zero.
  explicit Mlp(std::span<const int> widths);
  Mlp(std::initializer_list<int> widths)
      : Mlp(std::span<const int>(widths.begin(), widths.size())) {}

  int input_dim() const;
  int output_dim() const;
  std::vector<int> widths() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Vec Forward(const Vec& x) const;
  Vec Forward(const Vec& x, MlpTrace* trace) const;

  // Accumulates d(loss)/d(params) into `grad` (same shape as *this) given
  // d(loss)/d(output); returns d(loss)/d(input).
  Vec Backward(const MlpTrace& trace, const Vec& grad_output, Mlp* grad) const;

  Eigen::Index ParameterCount() const;
  Vec Flatten() const;
  void Unflatten(const Vec& flat);
  void SetZero();
  bool AllFinite() const;

  // He-scaled normal weights for hidden layers, `output_scale` times that
  // for the final layer; zero biases.
  void InitRandom(Rng& rng, double output_scale = 1.0);

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.layers_ == b.layers_;
  }

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace inctrl

#endif  // INCTRL_MLP_HPP_
