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
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "fusionbench/error.hpp"
#include "fusionbench/tape.hpp"
#include "fusionbench/tensor.hpp"

namespace fusionbench {

/// Thin SVD A = U·diag(S)·Vᵀ with k = min(r, c) triplets, S descending.
struct Svd {
  Tensor U;  // r×k
  Tensor S;  // k
  Tensor V;  // c×k
  std::size_t sweeps = 0;
};

/// Singular values at or below this are treated as zero by the subgradient.
inline constexpr double kSingularValueFloor = 1e-10;

namespace detail {

inline Tensor transpose(const Tensor& a) {
  const std::size_t r = a.dim(0), c = a.dim(1);
  Tensor t(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

// One-sided (Hestenes) Jacobi for a tall matrix, m >= n.
inline Svd jacobi_svd_tall(const Tensor& a) {
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> u(a.data().begin(), a.data().end());  // m×n, columns rotate
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const std::size_t max_sweeps = 10 * std::max(m, n) * 30;
  constexpr double tol = 1e-15;
  std::size_t sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == max_sweeps) {
      throw NumericError("SVD did not converge within " + std::to_string(max_sweeps) +
                         " sweeps");
    }
    ++sweep;
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double up = u[i * n + p], uq = u[i * n + q];
          alpha += up * up;
          beta += uq * uq;
          gamma += up * uq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          double up = u[i * n + p], uq = u[i * n + q];
          u[i * n + p] = c * up - s * uq;
          u[i * n + q] = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vp = v[i * n + p], vq = v[i * n + q];
          v[i * n + p] = c * vp - s * vq;
          v[i * n + q] = s * vp + c * vq;
        }
      }
    }
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += u[i * n + j] * u[i * n + j];
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out{Tensor(Shape{m, n}), Tensor(Shape{n}), Tensor(Shape{n, n}), sweep};
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t j = order[k];
    out.S[k] = sigma[j];
    for (std::size_t i = 0; i < m; ++i)
      out.U.at(i, k) = sigma[j] > 0.0 ? u[i * n + j] / sigma[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) out.V.at(i, k) = v[i * n + j];
  }
  return out;
}

}  // namespace detail

/// Full thin SVD by one-sided Jacobi rotations. Left vectors belonging to
/// zero singular values are returned as zero columns.
inline Svd svd(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("svd: matrix expected, got " + shape_str(a.shape()));
  if (!a.all_finite()) throw NumericError("svd: non-finite input");
  if (a.dim(0) >= a.dim(1)) return detail::jacobi_svd_tall(a);
  Svd t = detail::jacobi_svd_tall(detail::transpose(a));
  return Svd{std::move(t.V), std::move(t.S), std::move(t.U), t.sweeps};
}

struct NuclearNorm {
  double value = 0.0;
  Tensor subgradient;  // U·Vᵀ over triplets with sigma > kSingularValueFloor
};

inline NuclearNorm nuclear_norm(const Tensor& m) {
  Svd d = svd(m);
  const std::size_t r = m.dim(0), c = m.dim(1), k = d.S.size();
  NuclearNorm out{0.0, Tensor(Shape{r, c})};
  for (std::size_t t = 0; t < k; ++t) {
    out.value += d.S[t];
    if (d.S[t] <= kSingularValueFloor) continue;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.subgradient.at(i, j) += d.U.at(i, t) * d.V.at(j, t);
  }
  return out;
}

/// Differentiable nuclear norm of a recorded matrix.
inline Var nuclear_norm(const Var& m) {
  NuclearNorm nn = nuclear_norm(m.value());
  return m.tape().record(Tensor::scalar(nn.value), {m},
                         [m, sub = std::move(nn.subgradient)](Tape& t, const Tensor& g) {
                           Tensor& gm = t.grad_buffer(m.id());
                           for (std::size_t i = 0; i < sub.size(); ++i) gm[i] += g[0] * sub[i];
                         });
}

}  // namespace fusionbench
