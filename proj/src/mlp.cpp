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

#include "inctrl/mlp.hpp"

#include <cmath>

#include "inctrl/error.hpp"

namespace inctrl {

Mlp::Mlp(std::span<const int> widths) {
  if (widths.size() < 2) {
    Fail(ErrorKind::kInvalidInput, "mlp", "need at least input and output widths");
  }
  for (int w : widths) {
    if (w <= 0) Fail(ErrorKind::kInvalidInput, "mlp", "layer widths must be positive");
  }
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.push_back({Mat::Zero(widths[i + 1], widths[i]),
                       Vec::Zero(widths[i + 1])});
  }
}

int Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::vector<int> Mlp::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(input_dim());
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

Vec Mlp::Forward(const Vec& x) const { return Forward(x, nullptr); }

Vec Mlp::Forward(const Vec& x, MlpTrace* trace) const {
  if (x.size() != input_dim()) {
    Fail(ErrorKind::kContract, "mlp",
         "input dimension " + std::to_string(x.size()) + " != " +
             std::to_string(input_dim()));
  }
  if (trace != nullptr) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  Vec h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vec z = layers_[i].weight * h + layers_[i].bias;
    if (trace != nullptr) {
      trace->inputs.push_back(h);
      trace->pre.push_back(z);
    }
    h = (i + 1 < layers_.size()) ? Vec(z.cwiseMax(0.0)) : z;
  }
  return h;
}

Vec Mlp::Backward(const MlpTrace& trace, const Vec& grad_output,
                  Mlp* grad) const {
  Vec g = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size()) {
      g = g.cwiseProduct((trace.pre[k].array() > 0.0).cast<double>().matrix());
    }
    if (grad != nullptr) {
      grad->layers_[k].weight.noalias() += g * trace.inputs[k].transpose();
      grad->layers_[k].bias += g;
    }
    g = layers_[k].weight.transpose() * g;
  }
  return g;
}

Eigen::Index Mlp::ParameterCount() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Vec Mlp::Flatten() const {
  Vec flat(ParameterCount());
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    flat.segment(k, l.weight.size()) =
        Eigen::Map<const Vec>(l.weight.data(), l.weight.size());
    k += l.weight.size();
    flat.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return flat;
}

void Mlp::Unflatten(const Vec& flat) {
  if (flat.size() != ParameterCount()) {
    Fail(ErrorKind::kContract, "mlp", "flat parameter size mismatch");
  }
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    Eigen::Map<Vec>(l.weight.data(), l.weight.size()) =
        flat.segment(k, l.weight.size());
    k += l.weight.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

void Mlp::SetZero() {
  for (auto& l : layers_) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

bool Mlp::AllFinite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::InitRandom(Rng& rng, double output_scale) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    double scale = std::sqrt(2.0 / static_cast<double>(l.weight.cols()));
    if (i + 1 == layers_.size()) scale *= output_scale;
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        l.weight(r, c) = scale * rng.Normal();
      }
    }
    l.bias.setZero();
  }
}

}  // namespace inctrl
