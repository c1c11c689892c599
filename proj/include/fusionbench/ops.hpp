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

// Differentiable primitives. Every function here computes its forward value
// eagerly and records a closure on the inputs' tape that accumulates the
// adjoint into each input that needs one.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "fusionbench/error.hpp"
#include "fusionbench/tape.hpp"
#include "fusionbench/tensor.hpp"

namespace fusionbench {

enum class Activation { linear, elu, sigmoid };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::elu: return "elu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

/// Per-axis stride or pooling window; a single integer applies to both axes.
struct Window2 {
  std::size_t rows = 1;
  std::size_t cols = 1;

  Window2() = default;
  Window2(std::size_t both) : rows(both), cols(both) {}  // NOLINT(implicit)
  Window2(std::size_t r, std::size_t c) : rows(r), cols(c) {}
};

namespace detail {

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double elu(double x) { return x >= 0 ? x : std::expm1(x); }

inline void require_rank(const Var& v, std::size_t rank, const char* op, const char* arg) {
  if (v.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": " + arg + " must have rank " +
                         std::to_string(rank) + ", got " + shape_str(v.shape()));
  }
}

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

}  // namespace detail

inline double sigmoid(double x) { return detail::stable_sigmoid(x); }

/// W·x + b for x[n], W[m×n], b[m].
inline Var dense(const Var& x, const Var& W, const Var& b) {
  const Tensor& xv = x.value();
  const Tensor& Wv = W.value();
  const Tensor& bv = b.value();
  if (xv.rank() != 1 || Wv.rank() != 2 || bv.rank() != 1 || Wv.dim(1) != xv.dim(0) ||
      bv.dim(0) != Wv.dim(0)) {
    throw DimensionError("dense: x " + shape_str(xv.shape()) + ", W " + shape_str(Wv.shape()) +
                         ", b " + shape_str(bv.shape()) + " do not agree");
  }
  const std::size_t m = Wv.dim(0), n = Wv.dim(1);
  Tensor out(Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    double s = bv[i];
    for (std::size_t j = 0; j < n; ++j) s += Wv[i * n + j] * xv[j];
    out[i] = s;
  }
  return x.tape().record(std::move(out), {x, W, b}, [x, W, b, m, n](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    const Tensor& Wv = t.value(W.id());
    if (t.requires_grad(x.id())) {
      Tensor& gx = t.grad_buffer(x.id());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[j] += Wv[i * n + j] * g[i];
    }
    if (t.requires_grad(W.id())) {
      Tensor& gW = t.grad_buffer(W.id());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gW[i * n + j] += g[i] * xv[j];
    }
    t.accumulate(b, g);
  });
}

/// Elementwise ELU (alpha = 1), logistic sigmoid, or identity.
inline Var activation(Activation kind, const Var& x) {
  if (kind == Activation::linear) return x;
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = kind == Activation::elu ? detail::elu(xv[i]) : detail::stable_sigmoid(xv[i]);
  }
  return x.tape().record(std::move(out), {x}, [x, kind](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < xv.size(); ++i) {
      double d;
      if (kind == Activation::elu) {
        d = xv[i] >= 0 ? 1.0 : std::exp(xv[i]);
      } else {
        double s = detail::stable_sigmoid(xv[i]);
        d = s * (1.0 - s);
      }
      gx[i] += g[i] * d;
    }
  });
}

inline Var elu(const Var& x) { return activation(Activation::elu, x); }
inline Var sigmoid(const Var& x) { return activation(Activation::sigmoid, x); }

/// Valid-padding cross-correlation of input[C×H×W] with kernels[K×C×kh×kw].
inline Var conv2d(const Var& input, const Var& kernels, const Var& bias, Window2 stride = 1) {
  const Tensor& x = input.value();
  const Tensor& k = kernels.value();
  const Tensor& b = bias.value();
  if (x.rank() != 3 || k.rank() != 4 || b.rank() != 1 || k.dim(1) != x.dim(0) ||
      b.dim(0) != k.dim(0)) {
    throw DimensionError("conv2d: input " + shape_str(x.shape()) + ", kernels " +
                         shape_str(k.shape()) + ", bias " + shape_str(b.shape()) +
                         " do not agree");
  }
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (kh > H || kw > W) {
    throw DimensionError("conv2d: kernel " + shape_str(k.shape()) + " larger than input " +
                         shape_str(x.shape()));
  }
  if (stride.rows == 0 || stride.cols == 0 || (H - kh) % stride.rows || (W - kw) % stride.cols) {
    throw DimensionError("conv2d: stride " + std::to_string(stride.rows) + "x" +
                         std::to_string(stride.cols) + " does not divide the sliding range of " +
                         shape_str(x.shape()) + " with kernel " + shape_str(k.shape()));
  }
  const std::size_t Ho = (H - kh) / stride.rows + 1, Wo = (W - kw) / stride.cols + 1;
  Tensor out(Shape{K, Ho, Wo});
  for (std::size_t o = 0; o < K; ++o)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        double s = b[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t p = 0; p < kh; ++p)
            for (std::size_t q = 0; q < kw; ++q)
              s += k[((o * C + c) * kh + p) * kw + q] *
                   x.at(c, i * stride.rows + p, j * stride.cols + q);
        out.at(o, i, j) = s;
      }
  return input.tape().record(
      std::move(out), {input, kernels, bias},
      [=](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(input.id());
        const Tensor& k = t.value(kernels.id());
        const bool gx_on = t.requires_grad(input.id());
        const bool gk_on = t.requires_grad(kernels.id());
        const bool gb_on = t.requires_grad(bias.id());
        Tensor* gx = gx_on ? &t.grad_buffer(input.id()) : nullptr;
        Tensor* gk = gk_on ? &t.grad_buffer(kernels.id()) : nullptr;
        Tensor* gb = gb_on ? &t.grad_buffer(bias.id()) : nullptr;
        for (std::size_t o = 0; o < K; ++o)
          for (std::size_t i = 0; i < Ho; ++i)
            for (std::size_t j = 0; j < Wo; ++j) {
              double go = g.at(o, i, j);
              if (gb) (*gb)[o] += go;
              for (std::size_t c = 0; c < C; ++c)
                for (std::size_t p = 0; p < kh; ++p)
                  for (std::size_t q = 0; q < kw; ++q) {
                    std::size_t ki = ((o * C + c) * kh + p) * kw + q;
                    std::size_t r = i * stride.rows + p, s = j * stride.cols + q;
                    if (gx) gx->at(c, r, s) += go * k[ki];
                    if (gk) (*gk)[ki] += go * x.at(c, r, s);
                  }
            }
      });
}

/// Non-overlapping max pooling; ties resolve to the first element in
/// row-major order within the window.
inline Var maxpool2d(const Var& input, Window2 window) {
  const Tensor& x = input.value();
  detail::require_rank(input, 3, "maxpool2d", "input");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (window.rows == 0 || window.cols == 0 || H % window.rows || W % window.cols) {
    throw DimensionError("maxpool2d: window " + std::to_string(window.rows) + "x" +
                         std::to_string(window.cols) + " does not divide " + shape_str(x.shape()));
  }
  const std::size_t Ho = H / window.rows, Wo = W / window.cols;
  Tensor out(Shape{C, Ho, Wo});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        std::size_t best = (c * H + i * window.rows) * W + j * window.cols;
        for (std::size_t p = 0; p < window.rows; ++p)
          for (std::size_t q = 0; q < window.cols; ++q) {
            std::size_t idx = (c * H + i * window.rows + p) * W + j * window.cols + q;
            if (x[idx] > x[best]) best = idx;
          }
        std::size_t o = (c * Ho + i) * Wo + j;
        out[o] = x[best];
        argmax[o] = best;
      }
  return input.tape().record(std::move(out), {input},
                             [input, argmax = std::move(argmax)](Tape& t, const Tensor& g) {
                               Tensor& gx = t.grad_buffer(input.id());
                               for (std::size_t o = 0; o < argmax.size(); ++o)
                                 gx[argmax[o]] += g[o];
                             });
}

/// Adjoint of conv2d with the same geometry: input[K×H'×W'],
/// kernels[K×C×kh×kw], output[C×((H'-1)·s+kh)×((W'-1)·s+kw)].
inline Var transposed_conv2d(const Var& input, const Var& kernels, const Var& bias,
                             Window2 stride = 1) {
  const Tensor& x = input.value();
  const Tensor& k = kernels.value();
  const Tensor& b = bias.value();
  if (x.rank() != 3 || k.rank() != 4 || b.rank() != 1 || k.dim(0) != x.dim(0) ||
      b.dim(0) != k.dim(1)) {
    throw DimensionError("transposed_conv2d: input " + shape_str(x.shape()) + ", kernels " +
                         shape_str(k.shape()) + ", bias " + shape_str(b.shape()) +
                         " do not agree");
  }
  if (stride.rows == 0 || stride.cols == 0) {
    throw DimensionError("transposed_conv2d: stride must be positive");
  }
  const std::size_t K = x.dim(0), Hi = x.dim(1), Wi = x.dim(2);
  const std::size_t C = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  const std::size_t H = (Hi - 1) * stride.rows + kh, W = (Wi - 1) * stride.cols + kw;
  Tensor out(Shape{C, H, W});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t s = 0; s < W; ++s) out.at(c, r, s) = b[c];
  for (std::size_t o = 0; o < K; ++o)
    for (std::size_t i = 0; i < Hi; ++i)
      for (std::size_t j = 0; j < Wi; ++j) {
        double xv = x.at(o, i, j);
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t p = 0; p < kh; ++p)
            for (std::size_t q = 0; q < kw; ++q)
              out.at(c, i * stride.rows + p, j * stride.cols + q) +=
                  xv * k[((o * C + c) * kh + p) * kw + q];
      }
  return input.tape().record(
      std::move(out), {input, kernels, bias}, [=](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(input.id());
        const Tensor& k = t.value(kernels.id());
        Tensor* gx = t.requires_grad(input.id()) ? &t.grad_buffer(input.id()) : nullptr;
        Tensor* gk = t.requires_grad(kernels.id()) ? &t.grad_buffer(kernels.id()) : nullptr;
        if (t.requires_grad(bias.id())) {
          Tensor& gb = t.grad_buffer(bias.id());
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t r = 0; r < H; ++r)
              for (std::size_t s = 0; s < W; ++s) gb[c] += g.at(c, r, s);
        }
        for (std::size_t o = 0; o < K; ++o)
          for (std::size_t i = 0; i < Hi; ++i)
            for (std::size_t j = 0; j < Wi; ++j) {
              double acc = 0.0;
              for (std::size_t c = 0; c < C; ++c)
                for (std::size_t p = 0; p < kh; ++p)
                  for (std::size_t q = 0; q < kw; ++q) {
                    std::size_t ki = ((o * C + c) * kh + p) * kw + q;
                    double go = g.at(c, i * stride.rows + p, j * stride.cols + q);
                    acc += go * k[ki];
                    if (gk) (*gk)[ki] += go * x.at(o, i, j);
                  }
              if (gx) gx->at(o, i, j) += acc;
            }
      });
}

inline Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

inline Var flatten(const Var& x) { return reshape(x, Shape{x.size()}); }

inline Var add(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    Tensor neg = g;
    neg *= -1.0;
    t.accumulate(b, neg);
  });
}

/// Elementwise (Hadamard) product.
inline Var mul(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a.id());
    const Tensor& bv = t.value(b.id());
    if (t.requires_grad(a.id())) {
      Tensor& ga = t.grad_buffer(a.id());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id())) {
      Tensor& gb = t.grad_buffer(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

inline Var scale(const Var& x, double s) {
  Tensor out = x.value();
  out *= s;
  return x.tape().record(std::move(out), {x}, [x, s](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
  });
}

inline Var add_scalar(const Var& x, double c) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) { t.accumulate(x, g); });
}

inline Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
  });
}

inline Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

/// Sum of squared entries (squared Frobenius norm).
inline Var sum_squares(const Var& x) {
  return x.tape().record(Tensor::scalar(squared_norm(x.value())), {x},
                         [x](Tape& t, const Tensor& g) {
                           const Tensor& xv = t.value(x.id());
                           Tensor& gx = t.grad_buffer(x.id());
                           for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += 2.0 * xv[i] * g[0];
                         });
}

/// Sums a list of scalars (or equal-shaped tensors).
inline Var add_n(const std::vector<Var>& xs) {
  if (xs.empty()) throw DimensionError("add_n: empty list");
  Tensor out = xs.front().value();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    detail::require_same_shape(xs.front(), xs[i], "add_n");
    out += xs[i].value();
  }
  return xs.front().tape().record(std::move(out), xs, [xs](Tape& t, const Tensor& g) {
    for (const Var& x : xs) t.accumulate(x, g);
  });
}

/// Elementwise mean of equal-shaped tensors.
inline Var mean_n(const std::vector<Var>& xs) {
  if (xs.size() == 1) return xs.front();
  return scale(add_n(xs), 1.0 / static_cast<double>(xs.size()));
}

/// Concatenates flattened tensors end to end.
inline Var concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw DimensionError("concat: empty list");
  std::vector<double> data;
  for (const Var& x : xs) {
    auto d = x.value().data();
    data.insert(data.end(), d.begin(), d.end());
  }
  return xs.front().tape().record(Tensor::vector(std::move(data)), xs,
                                  [xs](Tape& t, const Tensor& g) {
                                    std::size_t off = 0;
                                    for (const Var& x : xs) {
                                      std::size_t n = t.value(x.id()).size();
                                      if (t.requires_grad(x.id())) {
                                        Tensor& gx = t.grad_buffer(x.id());
                                        for (std::size_t i = 0; i < n; ++i) gx[i] += g[off + i];
                                      }
                                      off += n;
                                    }
                                  });
}

/// Places equal-length vectors (or r×c_i matrices) side by side as columns.
inline Var hconcat(const std::vector<Var>& xs) {
  if (xs.empty()) throw DimensionError("hconcat: empty list");
  auto rows_of = [](const Tensor& v) { return v.dim(0); };
  auto cols_of = [](const Tensor& v) { return v.rank() == 1 ? std::size_t{1} : v.dim(1); };
  const std::size_t rows = rows_of(xs.front().value());
  std::vector<std::size_t> offsets;
  std::size_t cols = 0;
  for (const Var& x : xs) {
    const Tensor& v = x.value();
    if (v.rank() < 1 || v.rank() > 2 || rows_of(v) != rows) {
      throw DimensionError("hconcat: " + shape_str(v.shape()) + " does not have " +
                           std::to_string(rows) + " rows");
    }
    offsets.push_back(cols);
    cols += cols_of(v);
  }
  Tensor out(Shape{rows, cols});
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const Tensor& v = xs[n].value();
    std::size_t c = cols_of(v);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) out.at(r, offsets[n] + j) = v[r * c + j];
  }
  return xs.front().tape().record(
      std::move(out), xs, [xs, offsets, rows, cols, cols_of](Tape& t, const Tensor& g) {
        for (std::size_t n = 0; n < xs.size(); ++n) {
          if (!t.requires_grad(xs[n].id())) continue;
          std::size_t c = cols_of(t.value(xs[n].id()));
          Tensor& gx = t.grad_buffer(xs[n].id());
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += g[r * cols + offsets[n] + j];
        }
      });
}

/// out[j] = xᵀ · W[j] · y for x[p], W[l×p×q], y[q].
inline Var bilinear(const Var& x, const Var& W, const Var& y) {
  const Tensor& xv = x.value();
  const Tensor& Wv = W.value();
  const Tensor& yv = y.value();
  if (xv.rank() != 1 || yv.rank() != 1 || Wv.rank() != 3 || Wv.dim(1) != xv.dim(0) ||
      Wv.dim(2) != yv.dim(0)) {
    throw DimensionError("bilinear: x " + shape_str(xv.shape()) + ", W " +
                         shape_str(Wv.shape()) + ", y " + shape_str(yv.shape()) +
                         " do not agree");
  }
  const std::size_t L = Wv.dim(0), P = Wv.dim(1), Q = Wv.dim(2);
  Tensor out(Shape{L});
  for (std::size_t j = 0; j < L; ++j) {
    double s = 0.0;
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t q = 0; q < Q; ++q) s += xv[p] * Wv.at(j, p, q) * yv[q];
    out[j] = s;
  }
  return x.tape().record(std::move(out), {x, W, y}, [=](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    const Tensor& Wv = t.value(W.id());
    const Tensor& yv = t.value(y.id());
    Tensor* gx = t.requires_grad(x.id()) ? &t.grad_buffer(x.id()) : nullptr;
    Tensor* gW = t.requires_grad(W.id()) ? &t.grad_buffer(W.id()) : nullptr;
    Tensor* gy = t.requires_grad(y.id()) ? &t.grad_buffer(y.id()) : nullptr;
    for (std::size_t j = 0; j < L; ++j)
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t q = 0; q < Q; ++q) {
          double w = Wv.at(j, p, q);
          if (gx) (*gx)[p] += g[j] * w * yv[q];
          if (gy) (*gy)[q] += g[j] * xv[p] * w;
          if (gW) gW->at(j, p, q) += g[j] * xv[p] * yv[q];
        }
  });
}

/// max(floor, x) for a scalar x; the subgradient at the tie x == floor is 0.
inline Var max_with(const Var& x, double floor) {
  if (x.size() != 1) throw DimensionError("max_with: scalar expected, got " + shape_str(x.shape()));
  double v = x.value()[0];
  bool pass = v > floor;
  return x.tape().record(Tensor::scalar(pass ? v : floor), {x}, [x, pass](Tape& t, const Tensor& g) {
    if (pass) t.grad_buffer(x.id())[0] += g[0];
  });
}

/// Mean squared error over all entries.
inline Var mse(const Var& target, const Var& prediction) {
  detail::require_same_shape(target, prediction, "mse");
  return scale(sum_squares(sub(target, prediction)), 1.0 / static_cast<double>(target.size()));
}

/// Mean binary cross-entropy on raw logits, evaluated in the softplus form
/// max(z,0) - z·y + log(1 + exp(-|z|)).
inline Var bce_with_logits(const Var& logits, const std::vector<double>& labels) {
  const Tensor& z = logits.value();
  if (z.size() != labels.size()) {
    throw DimensionError("bce: " + std::to_string(z.size()) + " logits but " +
                          std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ValidationError("bce: empty batch");
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw ValidationError("bce: label " + std::to_string(y) + " is not 0 or 1");
  }
  const double n = static_cast<double>(labels.size());
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += std::max(z[i], 0.0) - z[i] * labels[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  return logits.tape().record(Tensor::scalar(s / n), {logits},
                              [logits, labels, n](Tape& t, const Tensor& g) {
                                const Tensor& z = t.value(logits.id());
                                Tensor& gz = t.grad_buffer(logits.id());
                                for (std::size_t i = 0; i < labels.size(); ++i)
                                  gz[i] += g[0] * (detail::stable_sigmoid(z[i]) - labels[i]) / n;
                              });
}

/// Inverted dropout; identity when not training or rate == 0.
template <class Rng>
Var dropout(const Var& x, double rate, bool training, Rng& rng) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw ValidationError("dropout rate must be below 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return mul(x, x.tape().constant(std::move(mask)));
}

}  // namespace fusionbench
