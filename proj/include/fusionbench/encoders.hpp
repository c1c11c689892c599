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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fusionbench/error.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/ops.hpp"
#include "fusionbench/tape.hpp"

namespace fusionbench {

/// Per-call switches shared by every forward pass.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Var drop(const Var& x) const {
    if (!training || dropout <= 0.0 || rng == nullptr) return x;
    return fusionbench::dropout(x, dropout, true, *rng);
  }
};

struct Geometry {
  std::size_t channels = 1;
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const { return channels * rows * cols; }
  Shape shape() const { return Shape{channels, rows, cols}; }
  friend bool operator==(const Geometry&, const Geometry&) = default;
};

/// Convolutional autoencoder for one modality:
///   encoder  conv2d -> ELU -> maxpool2d -> flatten -> dense(l1) -> ELU
///   decoder  dense -> reshape -> transposed_conv2d(stride = pool) -> sigmoid
/// The decoder kernel is sized so the output reproduces the input geometry.
struct CaeParams {
  std::string prefix;
  Geometry input;
  std::size_t kernels = 4;
  Window2 kernel{1, 3};
  Window2 pool{1, 2};
  std::size_t latent = 8;
  double lambda = 1e-4;

  Geometry conv_out() const {
    return {kernels, input.rows - kernel.rows + 1, input.cols - kernel.cols + 1};
  }
  Geometry pooled() const {
    Geometry c = conv_out();
    return {kernels, c.rows / pool.rows, c.cols / pool.cols};
  }
  Window2 decoder_kernel() const {
    Geometry p = pooled();
    return {input.rows - (p.rows - 1) * pool.rows, input.cols - (p.cols - 1) * pool.cols};
  }

  std::string name(std::string_view part) const { return prefix + "." + std::string(part); }

  /// Weight tensors covered by the L2 term (biases excluded).
  std::vector<std::string> weight_names() const {
    return {name("enc.W"), name("bottleneck.W"), name("unproject.W"), name("dec.W")};
  }

  void validate() const {
    if (kernels == 0 || latent == 0) throw DimensionError("cae: kernels and latent must be positive");
    if (lambda < 0.0) throw ValidationError("cae: lambda must be non-negative");
    if (kernel.rows == 0 || kernel.cols == 0 || kernel.rows > input.rows ||
        kernel.cols > input.cols) {
      throw DimensionError("cae: kernel " + std::to_string(kernel.rows) + "x" +
                           std::to_string(kernel.cols) + " does not fit input " +
                           shape_str(input.shape()));
    }
    Geometry c = conv_out();
    if (pool.rows == 0 || pool.cols == 0 || c.rows % pool.rows || c.cols % pool.cols) {
      throw DimensionError("cae: pool " + std::to_string(pool.rows) + "x" +
                           std::to_string(pool.cols) + " does not divide conv output " +
                           shape_str(c.shape()));
    }
  }

  /// Validates the geometry and registers freshly initialised parameters.
  static CaeParams create(ParamStore& store, std::string prefix, Geometry input,
                          std::size_t kernels, Window2 kernel, Window2 pool, std::size_t latent,
                          double lambda, Rng& rng) {
    CaeParams p{std::move(prefix), input, kernels, kernel, pool, latent, lambda};
    p.validate();
    const std::size_t C = input.channels, K = kernels;
    const std::size_t flat = p.pooled().size();
    const Window2 dk = p.decoder_kernel();
    store.add(p.name("enc.W"),
              glorot_uniform(Shape{K, C, kernel.rows, kernel.cols}, C * kernel.rows * kernel.cols,
                             K * kernel.rows * kernel.cols, rng));
    store.add(p.name("enc.b"), Tensor(Shape{K}));
    store.add(p.name("bottleneck.W"), glorot_uniform(Shape{latent, flat}, flat, latent, rng));
    store.add(p.name("bottleneck.b"), Tensor(Shape{latent}));
    store.add(p.name("unproject.W"), glorot_uniform(Shape{flat, latent}, latent, flat, rng));
    store.add(p.name("unproject.b"), Tensor(Shape{flat}));
    store.add(p.name("dec.W"), glorot_uniform(Shape{K, C, dk.rows, dk.cols}, K * dk.rows * dk.cols,
                                              C * dk.rows * dk.cols, rng));
    store.add(p.name("dec.b"), Tensor(Shape{C}));
    return p;
  }
};

inline Var cae_encode(const Var& x, ParamStore& store, const CaeParams& p) {
  if (x.size() != p.input.size()) {
    throw DimensionError("cae_encode: input " + shape_str(x.shape()) + " does not match " +
                         shape_str(p.input.shape()));
  }
  Tape& t = x.tape();
  Var grid = x.shape() == p.input.shape() ? x : reshape(x, p.input.shape());
  Var conv = conv2d(grid, t.param(store, p.name("enc.W")), t.param(store, p.name("enc.b")), 1);
  Var pooled = maxpool2d(elu(conv), p.pool);
  Var z = dense(flatten(pooled), t.param(store, p.name("bottleneck.W")),
                t.param(store, p.name("bottleneck.b")));
  return elu(z);
}

inline Var cae_decode(const Var& h, ParamStore& store, const CaeParams& p) {
  if (h.value().rank() != 1 || h.size() != p.latent) {
    throw DimensionError("cae_decode: latent " + shape_str(h.shape()) + " does not have length " +
                         std::to_string(p.latent));
  }
  Tape& t = h.tape();
  Var flat = dense(h, t.param(store, p.name("unproject.W")), t.param(store, p.name("unproject.b")));
  Var grid = reshape(flat, p.pooled().shape());
  Var up = transposed_conv2d(grid, t.param(store, p.name("dec.W")),
                             t.param(store, p.name("dec.b")), p.pool);
  return sigmoid(up);
}

/// (1/n)·Σ(x − x̂)² + λ·Σ_W ‖W‖₂².
inline Var reconstruction_loss(const Var& x, const Var& reconstruction,
                               const std::vector<Var>& weights, double lambda) {
  if (lambda < 0.0) throw ValidationError("reconstruction_loss: lambda must be non-negative");
  if (x.size() != reconstruction.size()) {
    throw DimensionError("reconstruction_loss: " + shape_str(x.shape()) + " vs " +
                         shape_str(reconstruction.shape()));
  }
  Var target = x.shape() == reconstruction.shape() ? x : reshape(x, reconstruction.shape());
  Var loss = mse(target, reconstruction);
  if (lambda == 0.0 || weights.empty()) return loss;
  std::vector<Var> norms;
  for (const Var& w : weights) norms.push_back(sum_squares(w));
  return add(loss, scale(add_n(norms), lambda));
}

inline Var reconstruction_loss(const Var& x, const Var& reconstruction, ParamStore& store,
                               const CaeParams& p) {
  std::vector<Var> weights;
  for (const auto& n : p.weight_names()) weights.push_back(x.tape().param(store, n));
  return reconstruction_loss(x, reconstruction, weights, p.lambda);
}

/// Dense stack Φ_m. widths = {input, hidden..., l1}; one activation per layer.
struct UnimodalNetParams {
  std::string prefix;
  std::vector<std::size_t> widths;
  std::vector<Activation> activations;

  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t layers() const { return widths.size() - 1; }
  std::string weight(std::size_t i) const { return prefix + "." + std::to_string(i) + ".W"; }
  std::string bias(std::size_t i) const { return prefix + "." + std::to_string(i) + ".b"; }

  static UnimodalNetParams create(ParamStore& store, std::string prefix,
                                  std::vector<std::size_t> widths,
                                  std::vector<Activation> activations, Rng& rng) {
    if (widths.size() < 2) throw DimensionError("unimodal net needs at least one layer");
    if (activations.size() != widths.size() - 1) {
      throw DimensionError("unimodal net: " + std::to_string(activations.size()) +
                           " activations for " + std::to_string(widths.size() - 1) + " layers");
    }
    UnimodalNetParams p{std::move(prefix), std::move(widths), std::move(activations)};
    for (std::size_t i = 0; i < p.layers(); ++i) {
      std::size_t in = p.widths[i], out = p.widths[i + 1];
      store.add(p.weight(i), glorot_uniform(Shape{out, in}, in, out, rng));
      store.add(p.bias(i), Tensor(Shape{out}));
    }
    return p;
  }
};

/// h_m = Φ_m(x_m). Dropout applies after every hidden layer, never the output.
inline Var unimodal_embed(const Var& x, ParamStore& store, const UnimodalNetParams& p,
                          const ForwardContext& ctx = {}) {
  if (x.size() != p.input_width()) {
    throw DimensionError("unimodal_embed: input " + shape_str(x.shape()) + " but first layer takes " +
                         std::to_string(p.input_width()));
  }
  Tape& t = x.tape();
  Var h = x.value().rank() == 1 ? x : flatten(x);
  for (std::size_t i = 0; i < p.layers(); ++i) {
    h = activation(p.activations[i], dense(h, t.param(store, p.weight(i)), t.param(store, p.bias(i))));
    if (i + 1 < p.layers()) h = ctx.drop(h);
  }
  return h;
}

}  // namespace fusionbench
