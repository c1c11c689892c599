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
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fusionbench/error.hpp"

namespace fusionbench {

/// Binary confusion counts with the positive class = 1. Every ratio whose
/// denominator is zero is reported as 0.
struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double accuracy = 0.0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

inline MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                         std::size_t tn) {
  MetricsReport r{tp, fp, fn, tn};
  const double TP = static_cast<double>(tp), FP = static_cast<double>(fp);
  const double FN = static_cast<double>(fn), TN = static_cast<double>(tn);
  r.precision = tp + fp ? TP / (TP + FP) : 0.0;
  r.recall = tp + fn ? TP / (TP + FN) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  const double denom = (TP + FP) * (TP + FN) * (TN + FP) * (TN + FN);
  r.mcc = denom > 0.0 ? (TP * TN - FP * FN) / std::sqrt(denom) : 0.0;
  const std::size_t n = r.total();
  r.accuracy = n ? (TP + TN) / static_cast<double>(n) : 0.0;
  return r;
}

inline MetricsReport compute_metrics(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(pred.size()) + " predictions vs " +
                          std::to_string(gold.size()) + " labels");
  }
  if (pred.empty()) throw ValidationError("compute_metrics: no samples");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if ((pred[i] != 0 && pred[i] != 1) || (gold[i] != 0 && gold[i] != 1)) {
      throw ValidationError("compute_metrics: labels must be 0 or 1");
    }
    if (pred[i] == 1) {
      gold[i] == 1 ? ++tp : ++fp;
    } else {
      gold[i] == 1 ? ++fn : ++tn;
    }
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

/// κ = (p_o − p_e) / (1 − p_e) over any shared label set. When chance
/// agreement is total (p_e = 1) the annotators are both constant and equal,
/// and κ is 1.
inline double cohens_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw ValidationError("cohens_kappa: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + " annotations");
  }
  if (a.empty()) throw ValidationError("cohens_kappa: no annotations");
  std::map<int, std::size_t> ca, cb;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    if (a[i] == b[i]) ++agree;
  }
  const std::size_t n = a.size();
  std::size_t chance = 0;  // Σ_k ca_k · cb_k, exact
  for (const auto& [label, count] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) chance += count * it->second;
  }
  if (chance == n * n) return agree == n ? 1.0 : 0.0;
  const double nn = static_cast<double>(n);
  const double po = static_cast<double>(agree) / nn;
  const double pe = static_cast<double>(chance) / (nn * nn);
  return (po - pe) / (1.0 - pe);
}

}  // namespace fusionbench
