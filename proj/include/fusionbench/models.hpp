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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fusionbench/data.hpp"
#include "fusionbench/encoders.hpp"
#include "fusionbench/error.hpp"
#include "fusionbench/fusion.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/ops.hpp"
#include "fusionbench/tape.hpp"

namespace fusionbench {

enum class ModelKind { unimodal, lrc, dof };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::unimodal: return "unimodal";
    case ModelKind::lrc: return "lrc";
    case ModelKind::dof: return "dof";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "unimodal") return ModelKind::unimodal;
  if (s == "lrc") return ModelKind::lrc;
  if (s == "dof") return ModelKind::dof;
  throw ValidationError("unknown model '" + s + "' (expected unimodal, lrc or dof)");
}

/// Architecture record. Input widths come from the dataset at build time.
struct ModelConfig {
  ModelKind kind = ModelKind::dof;
  std::size_t modality = 0;  // unimodal only, 0-based
  std::size_t l1 = 8;
  std::size_t l2 = 4;
  std::vector<std::size_t> embed_hidden{16};
  std::vector<std::size_t> head_hidden{16};
  std::size_t lrc_out = 16;
  std::size_t cae_kernels = 4;
  std::size_t cae_kernel = 3;
  std::size_t cae_pool = 2;
  double cae_lambda = 1e-4;
  double recon_weight = 1.0;
  std::size_t pretrain_epochs = 0;

  void validate() const {
    if (l1 == 0 || l2 == 0 || lrc_out == 0) throw ValidationError("model: l1, l2 and lrc-out must be positive");
    if (cae_kernels == 0 || cae_kernel == 0 || cae_pool == 0) {
      throw ValidationError("model: CAE kernels, kernel width and pool must be positive");
    }
    if (cae_lambda < 0.0 || recon_weight < 0.0) throw ValidationError("model: CAE weights must be non-negative");
    for (auto w : embed_hidden)
      if (w == 0) throw ValidationError("model: zero-width embedding layer");
    for (auto w : head_hidden)
      if (w == 0) throw ValidationError("model: zero-width head layer");
  }
};

/// Per-step switches passed into the model loss.
struct TrainContext {
  ForwardContext forward;
  double gamma = 0.1;
  std::size_t epoch = 0;
};

/// Parameters plus the structural records needed to run one of the three
/// model kinds on a Dataset with matching modality widths.
class FusionModel {
 public:
  static FusionModel create(const ModelConfig& cfg, const std::vector<std::size_t>& input_dims,
                            std::uint64_t seed) {
    cfg.validate();
    if (input_dims.empty()) throw ValidationError("model: no modalities");
    FusionModel model;
    model.cfg_ = cfg;
    model.input_dims_ = input_dims;
    Rng rng(seed);
    ParamStore& store = model.params_;

    if (cfg.kind == ModelKind::unimodal) {
      if (cfg.modality >= input_dims.size()) {
        throw ValidationError("model: modality " + std::to_string(cfg.modality + 1) +
                              " out of range (dataset has " + std::to_string(input_dims.size()) + ")");
      }
      model.active_ = {cfg.modality};
    } else {
      if (input_dims.size() < 2) throw ValidationError("model: fusion needs at least two modalities");
      for (std::size_t m = 0; m < input_dims.size(); ++m) model.active_.push_back(m);
    }

    if (cfg.kind == ModelKind::lrc) {
      for (std::size_t m : model.active_) {
        Geometry g{1, 1, input_dims[m]};
        std::size_t k = std::min(cfg.cae_kernel, g.cols);
        // Widen the kernel until the conv output tiles evenly into pools.
        while (k < g.cols && (g.cols - k + 1) % cfg.cae_pool != 0) ++k;
        model.caes_.push_back(CaeParams::create(store, "cae." + std::to_string(m), g,
                                                cfg.cae_kernels, Window2{1, k},
                                                Window2{1, cfg.cae_pool}, cfg.l1, cfg.cae_lambda, rng));
      }
      model.lrc_ = LrcParams::create(store, "lrc", model.active_.size(), cfg.l1, cfg.lrc_out, rng);
      store.add("lrc.cls.W", glorot_uniform(Shape{1, cfg.lrc_out}, cfg.lrc_out, 1, rng));
      store.add("lrc.cls.b", Tensor(Shape{1}));
    } else {
      for (std::size_t m : model.active_) {
        std::vector<std::size_t> widths{input_dims[m]};
        widths.insert(widths.end(), cfg.embed_hidden.begin(), cfg.embed_hidden.end());
        widths.push_back(cfg.l1);
        std::vector<Activation> acts(widths.size() - 1, Activation::elu);
        model.nets_.push_back(UnimodalNetParams::create(store, "embed." + std::to_string(m),
                                                        std::move(widths), std::move(acts), rng));
      }
      model.dof_ = DofParams::create(store, "dof", model.active_.size(), cfg.l1, cfg.l2,
                                     cfg.head_hidden, 0.0, rng);
    }
    return model;
  }

  const ModelConfig& config() const { return cfg_; }
  const std::vector<std::size_t>& input_dims() const { return input_dims_; }
  const std::vector<std::size_t>& active_modalities() const { return active_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const std::vector<UnimodalNetParams>& encoders() const { return nets_; }
  const std::vector<CaeParams>& autoencoders() const { return caes_; }
  const DofParams& dof() const { return dof_; }
  const LrcParams& lrc() const { return lrc_; }

  /// Mean training objective over a batch:
  ///   unimodal, dof:  BCE + γ·MMO
  ///   lrc:            BCE + w·mean reconstruction (reconstruction only
  ///                   during the first `pretrain_epochs` epochs)
  Var loss(Tape& tape, const Dataset& ds, std::span<const std::size_t> batch,
           const TrainContext& ctx) {
    check_dataset(ds);
    std::vector<double> labels;
    for (std::size_t i : batch) labels.push_back(static_cast<double>(ds.samples.at(i).label));
    if (cfg_.kind == ModelKind::lrc) {
      LrcPass pass = lrc_pass(tape, ds, batch, ctx.forward, true);
      Var recon = scale(pass.recon, cfg_.recon_weight / static_cast<double>(batch.size()));
      if (ctx.epoch < cfg_.pretrain_epochs) return recon;
      return add(bce_with_logits(pass.logits, labels), recon);
    }
    DofOutput out = dof_forward(tape, gather(ds, batch), nets_, params_, dof_, ctx.forward);
    Var bce = bce_with_logits(out.logits, labels);
    if (ctx.gamma == 0.0) return bce;
    return add(bce, scale(out.mmo, ctx.gamma));
  }

  /// Evaluation-mode logits (no dropout).
  std::vector<double> logits(const Dataset& ds, std::span<const std::size_t> batch) {
    check_dataset(ds);
    std::vector<double> out;
    constexpr std::size_t chunk = 256;
    for (std::size_t start = 0; start < batch.size(); start += chunk) {
      auto part = batch.subspan(start, std::min(chunk, batch.size() - start));
      Tape tape;
      Var z = cfg_.kind == ModelKind::lrc
                  ? lrc_pass(tape, ds, part, {}, false).logits
                  : dof_forward(tape, gather(ds, part), nets_, params_, dof_, {}).logits;
      auto d = z.value().data();
      out.insert(out.end(), d.begin(), d.end());
    }
    return out;
  }

  /// Decision rule: probability strictly above 0.5 is positive.
  std::vector<int> predict(const Dataset& ds, std::span<const std::size_t> batch) {
    std::vector<int> y;
    for (double z : logits(ds, batch)) y.push_back(sigmoid(z) > 0.5 ? 1 : 0);
    return y;
  }

  /// Mean reconstruction MSE + λ term of the LRC autoencoders over a batch.
  double reconstruction_error(const Dataset& ds, std::span<const std::size_t> batch) {
    if (cfg_.kind != ModelKind::lrc) throw ValidationError("reconstruction_error: model has no autoencoders");
    Tape tape;
    return lrc_pass(tape, ds, batch, {}, true).recon.value().item() / static_cast<double>(batch.size());
  }

 private:
  struct LrcPass {
    Var logits;
    Var recon;  // summed over the batch
  };

  void check_dataset(const Dataset& ds) const {
    if (ds.modality_count() != input_dims_.size()) {
      throw DimensionError("model expects " + std::to_string(input_dims_.size()) +
                           " modalities, dataset has " + std::to_string(ds.modality_count()));
    }
    for (std::size_t m = 0; m < input_dims_.size(); ++m) {
      if (ds.dim(m) != input_dims_[m]) {
        throw DimensionError("modality '" + ds.modality_names[m] + "' has width " +
                             std::to_string(ds.dim(m)) + ", model expects " +
                             std::to_string(input_dims_[m]));
      }
    }
  }

  std::vector<std::vector<Tensor>> gather(const Dataset& ds, std::span<const std::size_t> batch) const {
    std::vector<std::vector<Tensor>> rows;
    rows.reserve(batch.size());
    for (std::size_t i : batch) {
      std::vector<Tensor> r;
      for (std::size_t m : active_) r.push_back(ds.samples.at(i).modalities[m]);
      rows.push_back(std::move(r));
    }
    return rows;
  }

  LrcPass lrc_pass(Tape& tape, const Dataset& ds, std::span<const std::size_t> batch,
                   const ForwardContext& fwd, bool with_recon) {
    std::vector<Var> logits, recons;
    Var w = tape.param(params_, "lrc.cls.W");
    Var b = tape.param(params_, "lrc.cls.b");
    for (std::size_t i : batch) {
      std::vector<Var> latents;
      for (std::size_t a = 0; a < active_.size(); ++a) {
        Var x = tape.constant(ds.samples.at(i).modalities[active_[a]]);
        Var h = cae_encode(x, params_, caes_[a]);
        latents.push_back(h);
        if (with_recon) {
          Var xhat = cae_decode(h, params_, caes_[a]);
          recons.push_back(reconstruction_loss(x, xhat, params_, caes_[a]));
        }
      }
      Var fused = fwd.drop(lrc_fuse(latents, params_, lrc_));
      logits.push_back(dense(fused, w, b));
    }
    LrcPass pass{concat(logits), {}};
    pass.recon = with_recon ? add_n(recons) : tape.constant(Tensor::scalar(0.0));
    return pass;
  }

  ModelConfig cfg_;
  std::vector<std::size_t> input_dims_;
  std::vector<std::size_t> active_;
  ParamStore params_;
  std::vector<UnimodalNetParams> nets_;
  std::vector<CaeParams> caes_;
  DofParams dof_;
  LrcParams lrc_;
};

inline std::vector<std::size_t> input_dims_of(const Dataset& ds) {
  std::vector<std::size_t> dims;
  for (std::size_t m = 0; m < ds.modality_count(); ++m) dims.push_back(ds.dim(m));
  return dims;
}

}  // namespace fusionbench
