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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fusionbench/error.hpp"
#include "fusionbench/tape.hpp"

namespace fusionbench {

/// Builds a scalar loss on the given tape from parameters in the store.
using LossBuilder = std::function<Var(Tape&, ParamStore&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients against central differences for every
/// trainable coordinate. The relative error of one coordinate is
/// |a - n| / max(|a|, |n|, 1e-8). `corrupt` is added to every analytic
/// gradient and exists only as a negative control.
inline GradCheckResult grad_check_detailed(const LossBuilder& f, ParamStore& params, double eps,
                                           double corrupt = 0.0) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw ValidationError("grad_check: eps must be in (0, 1e-3]");
  auto eval = [&]() {
    Tape tape;
    double v = f(tape, params).value().item();
    if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
    return v;
  };

  params.zero_grads();
  {
    Tape tape;
    Var loss = f(tape, params);
    if (!std::isfinite(loss.value().item())) throw NumericError("grad_check: loss is not finite");
    tape.backward(loss);
  }

  GradCheckResult result;
  for (auto& [name, entry] : params) {
    if (!entry.trainable) continue;
    Tensor analytic = entry.grad;
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + eps;
      const double up = eval();
      entry.value[i] = saved - eps;
      const double down = eval();
      entry.value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i] + corrupt;
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = name;
        result.worst_index = i;
      }
    }
  }
  params.zero_grads();
  return result;
}

inline double grad_check(const LossBuilder& f, ParamStore& params, double eps = 1e-5) {
  return grad_check_detailed(f, params, eps).max_rel_error;
}

}  // namespace fusionbench
