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

// Reference implementations written as plain nested loops, independent of
// the tape and of the library's kernels.

#include <cmath>
#include <vector>

#include "fusionbench/tensor.hpp"

namespace fbtest {

using fusionbench::Shape;
using fusionbench::Tensor;

inline Tensor naive_conv(const Tensor& x, const Tensor& k, const Tensor& b, std::size_t s) {
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t Ho = (H - kh) / s + 1, Wo = (W - kw) / s + 1;
  Tensor out(Shape{K, Ho, Wo});
  for (std::size_t o = 0; o < K; ++o)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        double acc = b[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < kh; ++u)
            for (std::size_t v = 0; v < kw; ++v)
              acc += x.at(c, i * s + u, j * s + v) * k[((o * C + c) * kh + u) * kw + v];
        out.data()[(o * Ho + i) * Wo + j] = acc;
      }
  return out;
}

inline Tensor naive_pool(const Tensor& x, std::size_t w) {
  const std::size_t C = x.dim(0), H = x.dim(1) / w, W = x.dim(2) / w;
  Tensor out(Shape{C, H, W});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        double m = -INFINITY;
        for (std::size_t u = 0; u < w; ++u)
          for (std::size_t v = 0; v < w; ++v) m = std::max(m, x.at(c, i * w + u, j * w + v));
        out.data()[(c * H + i) * W + j] = m;
      }
  return out;
}

inline Tensor naive_transposed_conv(const Tensor& y, const Tensor& k, const Tensor& b, std::size_t sr,
                                    std::size_t sc) {
  const std::size_t K = y.dim(0), Hi = y.dim(1), Wi = y.dim(2);
  const std::size_t C = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  const std::size_t H = (Hi - 1) * sr + kh, W = (Wi - 1) * sc + kw;
  Tensor out(Shape{C, H, W});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < H * W; ++i) out.data()[c * H * W + i] = b[c];
  for (std::size_t o = 0; o < K; ++o)
    for (std::size_t i = 0; i < Hi; ++i)
      for (std::size_t j = 0; j < Wi; ++j)
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < kh; ++u)
            for (std::size_t v = 0; v < kw; ++v)
              out.data()[(c * H + i * sr + u) * W + j * sc + v] +=
                  y.at(o, i, j) * k[((o * C + c) * kh + u) * kw + v];
  return out;
}

inline std::vector<double> naive_dense(const std::vector<double>& x, const Tensor& W, const Tensor& b) {
  std::vector<double> out(W.dim(0));
  for (std::size_t r = 0; r < W.dim(0); ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < W.dim(1); ++c) acc += W.at(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

inline std::vector<double> naive_elu(std::vector<double> v) {
  for (double& x : v) x = x > 0 ? x : std::exp(x) - 1.0;
  return v;
}

inline std::vector<double> naive_sigmoid(std::vector<double> v) {
  for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
  return v;
}

}  // namespace fbtest
