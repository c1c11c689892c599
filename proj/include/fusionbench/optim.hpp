// Copyright 2026 The fusionbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "fusionbench/error.hpp"
#include "fusionbench/tape.hpp"

namespace fusionbench {

/// Global L2 norm over every gradient in the store.
inline double gradient_norm(const ParamStore& p) {
  double s = 0.0;
  for (const auto& [_, e] : p) s += squared_norm(e.grad);
  return std::sqrt(s);
}

/// Rescales all gradients so their global norm is at most max_norm.
/// Returns the factor applied (1 when untouched).
inline double clip_gradients(ParamStore& p, double max_norm) {
  if (!(max_norm > 0.0)) throw ValidationError("clip_gradients: max_norm must be positive");
  const double norm = gradient_norm(p);
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (auto& [_, e] : p) e.grad *= scale;
  return scale;
}

enum class OptimizerKind { adam, adagrad };

inline const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "adagrad"; }

/// Adam (bias-corrected) or AdaGrad state keyed by parameter name.
class OptimizerState {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;

  OptimizerState(OptimizerKind kind, double lr, double eps = 1e-8)
      : kind_(kind), lr_(lr), eps_(eps) {
    if (!(lr > 0.0)) throw ValidationError("optimizer: learning rate must be positive");
  }

  /// Creates zeroed accumulators for every trainable entry.
  void attach(const ParamStore& p) {
    for (const auto& [name, e] : p) {
      if (!e.trainable) continue;
      first_.emplace(name, Tensor(e.value.shape()));
      if (kind_ == OptimizerKind::adam) second_.emplace(name, Tensor(e.value.shape()));
    }
  }

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::uint64_t steps() const { return steps_; }

  /// Applies one update from the current gradients, then zeroes them.
  void step(ParamStore& p) {
    ++steps_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
    for (auto& [name, e] : p) {
      if (!e.trainable) continue;
      auto fit = first_.find(name);
      if (fit == first_.end()) throw Error("optimizer: no accumulator for '" + name + "'");
      Tensor& acc = fit->second;
      if (kind_ == OptimizerKind::adam) {
        Tensor& v = second_.at(name);
        for (std::size_t i = 0; i < e.value.size(); ++i) {
          const double g = e.grad[i];
          acc[i] = kBeta1 * acc[i] + (1.0 - kBeta1) * g;
          v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
          e.value[i] -= lr_ * (acc[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
      } else {
        for (std::size_t i = 0; i < e.value.size(); ++i) {
          const double g = e.grad[i];
          acc[i] += g * g;
          e.value[i] -= lr_ * g / std::sqrt(acc[i] + eps_);
        }
      }
    }
    p.zero_grads();
  }

 private:
  OptimizerKind kind_;
  double lr_;
  double eps_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Tensor> first_;   // Adam m, AdaGrad Σg²
  std::map<std::string, Tensor> second_;  // Adam v
};

inline void optimizer_step(OptimizerState& opt, ParamStore& p) { opt.step(p); }

}  // namespace fusionbench
