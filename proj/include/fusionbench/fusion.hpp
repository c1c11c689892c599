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
#include <vector>

#include "fusionbench/encoders.hpp"
#include "fusionbench/error.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/linalg.hpp"
#include "fusionbench/ops.hpp"
#include "fusionbench/tape.hpp"

namespace fusionbench {

// ---------------------------------------------------------------------------
// Latent representation concatenation

struct LrcParams {
  std::string prefix = "lrc";
  std::size_t modalities = 2;
  std::size_t latent = 8;
  std::size_t out = 16;

  std::string weight() const { return prefix + ".W"; }
  std::string bias() const { return prefix + ".b"; }

  static LrcParams create(ParamStore& store, std::string prefix, std::size_t modalities,
                          std::size_t latent, std::size_t out, Rng& rng) {
    LrcParams p{std::move(prefix), modalities, latent, out};
    const std::size_t in = modalities * latent;
    store.add(p.weight(), glorot_uniform(Shape{out, in}, in, out, rng));
    store.add(p.bias(), Tensor(Shape{out}));
    return p;
  }
};

/// sigmoid(W·(h₁ ⊕ … ⊕ h_M) + b).
inline Var lrc_fuse(const std::vector<Var>& latents, ParamStore& store, const LrcParams& p) {
  if (latents.size() != p.modalities) {
    throw DimensionError("lrc_fuse: expected " + std::to_string(p.modalities) +
                         " latents, got " + std::to_string(latents.size()));
  }
  for (const Var& h : latents) {
    if (h.value().rank() != 1 || h.size() != p.latent) {
      throw DimensionError("lrc_fuse: latent " + shape_str(h.shape()) + " does not have length " +
                           std::to_string(p.latent));
    }
  }
  Tape& t = latents.front().tape();
  return sigmoid(dense(concat(latents), t.param(store, p.weight()), t.param(store, p.bias())));
}

// ---------------------------------------------------------------------------
// Deep orthogonal fusion

struct DofParams {
  std::string prefix = "dof";
  std::size_t modalities = 2;
  std::size_t l1 = 8;
  std::size_t l2 = 4;
  std::vector<std::size_t> head_hidden{16};
  double gamma = 0.1;

  std::string proj_weight(std::size_t m) const { return prefix + ".proj." + std::to_string(m) + ".W"; }
  std::string proj_bias(std::size_t m) const { return prefix + ".proj." + std::to_string(m) + ".b"; }
  std::string attention(std::size_t m) const { return prefix + ".attn." + std::to_string(m) + ".W"; }
  std::string head_weight(std::size_t i) const { return prefix + ".head." + std::to_string(i) + ".W"; }
  std::string head_bias(std::size_t i) const { return prefix + ".head." + std::to_string(i) + ".b"; }

  std::size_t fused_width() const {
    std::size_t n = 1;
    for (std::size_t m = 0; m < modalities; ++m) n *= l2 + 1;
    return n;
  }
  std::vector<std::size_t> head_widths() const {
    std::vector<std::size_t> w{fused_width()};
    w.insert(w.end(), head_hidden.begin(), head_hidden.end());
    w.push_back(1);
    return w;
  }
  std::size_t head_layers() const { return head_hidden.size() + 1; }

  static DofParams create(ParamStore& store, std::string prefix, std::size_t modalities,
                          std::size_t l1, std::size_t l2, std::vector<std::size_t> head_hidden,
                          double gamma, Rng& rng) {
    if (modalities == 0 || l1 == 0 || l2 == 0) throw DimensionError("dof: sizes must be positive");
    if (gamma < 0.0) throw ValidationError("dof: gamma must be non-negative");
    DofParams p{std::move(prefix), modalities, l1, l2, std::move(head_hidden), gamma};
    for (std::size_t m = 0; m < modalities; ++m) {
      store.add(p.proj_weight(m), glorot_uniform(Shape{l2, l1}, l1, l2, rng));
      store.add(p.proj_bias(m), Tensor(Shape{l2}));
      if (modalities > 1) {
        store.add(p.attention(m), glorot_uniform(Shape{l2, l1, l1}, l1 * l1, l2, rng));
      }
    }
    auto widths = p.head_widths();
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      store.add(p.head_weight(i), glorot_uniform(Shape{widths[i + 1], widths[i]}, widths[i],
                                                 widths[i + 1], rng));
      store.add(p.head_bias(i), Tensor(Shape{widths[i + 1]}));
    }
    return p;
  }
};

/// h^S_m = dense_m(h_m), the projected embedding before gating.
inline Var project_embedding(const Var& h, ParamStore& store, const DofParams& p, std::size_t m) {
  Tape& t = h.tape();
  return dense(h, t.param(store, p.proj_weight(m)), t.param(store, p.proj_bias(m)));
}

/// Bilinear attention gate a_m[j] = sigmoid(h_mᵀ · W_A[j] · h̄), where h̄ is
/// the elementwise mean of the other modalities' embeddings.
inline Var attention_weights(const Var& h, const std::vector<Var>& others, ParamStore& store,
                             const DofParams& p, std::size_t m) {
  if (others.empty()) throw ValidationError("attention_gate: needs at least one other modality");
  for (const Var& o : others) {
    if (o.shape() != h.shape()) {
      throw DimensionError("attention_gate: embedding " + shape_str(o.shape()) + " vs " +
                           shape_str(h.shape()));
    }
  }
  Var context = mean_n(others);
  return sigmoid(bilinear(h, h.tape().param(store, p.attention(m)), context));
}

/// h*_m = a_m ⊙ h^S_m.
inline Var attention_gate(const Var& h, const std::vector<Var>& others, ParamStore& store,
                          const DofParams& p, std::size_t m) {
  Var gate = attention_weights(h, others, store, p, m);
  return mul(gate, project_embedding(h, store, p, m));
}

/// Outer product of [1; h*_1] ⊗ … ⊗ [1; h*_M], flattened row-major.
inline Var tensor_fuse(const std::vector<Var>& gated) {
  if (gated.empty()) throw DimensionError("tensor_fuse: no embeddings");
  const std::size_t M = gated.size();
  const std::size_t side = gated.front().size() + 1;
  for (const Var& g : gated) {
    if (g.value().rank() != 1 || g.size() + 1 != side) {
      throw DimensionError("tensor_fuse: embedding " + shape_str(g.shape()) +
                           " does not match length " + std::to_string(side - 1));
    }
  }
  std::vector<std::vector<double>> ext(M, std::vector<double>(side, 1.0));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 1; i < side; ++i) ext[m][i] = gated[m].value()[i - 1];

  std::size_t total = 1;
  for (std::size_t m = 0; m < M; ++m) total *= side;
  Tensor out(Shape{total});
  std::vector<std::size_t> idx(M, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double v = 1.0;
    for (std::size_t m = 0; m < M; ++m) v *= ext[m][idx[m]];
    out[flat] = v;
    for (std::size_t m = M; m-- > 0;) {  // row-major: last axis fastest
      if (++idx[m] < side) break;
      idx[m] = 0;
    }
  }
  return gated.front().tape().record(
      std::move(out), gated, [gated, ext, side, total](Tape& t, const Tensor& g) {
        const std::size_t M = gated.size();
        std::vector<std::size_t> idx(M, 0);
        std::vector<Tensor*> grads(M, nullptr);
        for (std::size_t m = 0; m < M; ++m)
          if (t.requires_grad(gated[m].id())) grads[m] = &t.grad_buffer(gated[m].id());
        for (std::size_t flat = 0; flat < total; ++flat) {
          for (std::size_t m = 0; m < M; ++m) {
            if (!grads[m] || idx[m] == 0) continue;
            double others = 1.0;
            for (std::size_t o = 0; o < M; ++o)
              if (o != m) others *= ext[o][idx[o]];
            (*grads[m])[idx[m] - 1] += g[flat] * others;
          }
          for (std::size_t m = M; m-- > 0;) {
            if (++idx[m] < side) break;
            idx[m] = 0;
          }
        }
      });
}

/// Φ_F: ELU hidden layers, single raw logit of shape [1].
inline Var fused_head(const Var& fused, ParamStore& store, const DofParams& p,
                      const ForwardContext& ctx = {}) {
  if (fused.value().rank() != 1 || fused.size() != p.fused_width()) {
    throw DimensionError("fused_head: input " + shape_str(fused.shape()) + " but head takes " +
                         std::to_string(p.fused_width()));
  }
  Tape& t = fused.tape();
  Var h = fused;
  const std::size_t L = p.head_layers();
  for (std::size_t i = 0; i < L; ++i) {
    h = dense(h, t.param(store, p.head_weight(i)), t.param(store, p.head_bias(i)));
    if (i + 1 < L) h = ctx.drop(elu(h));
  }
  return h;
}

/// (1/(M·N)) · (Σ_m max(1, ‖h_m‖*) − ‖H‖*), H = [h_1 … h_M] column-wise.
/// Each input is an l1×N matrix of column embeddings (a vector counts as N=1).
inline Var mmo_loss(const std::vector<Var>& batches) {
  if (batches.empty()) throw DimensionError("mmo_loss: no modalities");
  const Shape& first = batches.front().shape();
  for (const Var& b : batches) {
    if (b.shape() != first || b.value().rank() < 1 || b.value().rank() > 2) {
      throw DimensionError("mmo_loss: embedding matrices " + shape_str(first) + " and " +
                           shape_str(b.shape()) + " disagree");
    }
  }
  const std::size_t M = batches.size();
  const std::size_t N = first.size() == 2 ? first[1] : 1;
  std::vector<Var> per_modality;
  for (const Var& b : batches) {
    Var mat = b.value().rank() == 2 ? b : hconcat({b});
    per_modality.push_back(max_with(nuclear_norm(mat), 1.0));
  }
  Var joint = nuclear_norm(hconcat(batches));
  return scale(sub(add_n(per_modality), joint), 1.0 / static_cast<double>(M * N));
}

struct DofOutput {
  Var logits;                   // [N]
  Var mmo;                      // scalar
  std::vector<Var> embeddings;  // per modality, l1×N
};

/// Full DOF composition over a batch. inputs[n][m] is sample n, modality m.
/// With one modality the gate is skipped and the head sees [1; h^S].
inline DofOutput dof_forward(Tape& tape, const std::vector<std::vector<Tensor>>& inputs,
                             const std::vector<UnimodalNetParams>& encoders, ParamStore& store,
                             const DofParams& p, const ForwardContext& ctx = {}) {
  if (inputs.empty()) throw ValidationError("dof_forward: empty batch");
  if (encoders.size() != p.modalities) {
    throw DimensionError("dof_forward: " + std::to_string(encoders.size()) + " encoders for " +
                         std::to_string(p.modalities) + " modalities");
  }
  const std::size_t M = p.modalities;
  std::vector<std::vector<Var>> columns(M);
  std::vector<Var> logits;
  for (const auto& sample : inputs) {
    if (sample.size() != M) {
      throw DimensionError("dof_forward: sample has " + std::to_string(sample.size()) +
                           " modalities, expected " + std::to_string(M));
    }
    std::vector<Var> h(M);
    for (std::size_t m = 0; m < M; ++m) {
      h[m] = unimodal_embed(tape.constant(sample[m]), store, encoders[m], ctx);
      if (h[m].size() != p.l1) {
        throw DimensionError("dof_forward: encoder " + std::to_string(m) + " emits " +
                             std::to_string(h[m].size()) + " values, expected l1 = " +
                             std::to_string(p.l1));
      }
      columns[m].push_back(h[m]);
    }
    std::vector<Var> gated(M);
    for (std::size_t m = 0; m < M; ++m) {
      if (M == 1) {
        gated[m] = project_embedding(h[m], store, p, m);
        continue;
      }
      std::vector<Var> others;
      for (std::size_t o = 0; o < M; ++o)
        if (o != m) others.push_back(h[o]);
      gated[m] = attention_gate(h[m], others, store, p, m);
    }
    logits.push_back(fused_head(tensor_fuse(gated), store, p, ctx));
  }
  DofOutput out;
  out.logits = concat(logits);
  for (auto& col : columns) out.embeddings.push_back(hconcat(col));
  out.mmo = mmo_loss(out.embeddings);
  return out;
}

}  // namespace fusionbench
