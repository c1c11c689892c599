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
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fusionbench/data.hpp"
#include "fusionbench/error.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/metrics.hpp"
#include "fusionbench/models.hpp"
#include "fusionbench/optim.hpp"
#include "fusionbench/tape.hpp"

namespace fusionbench {

/// Hyperparameter grid the toolkit accepts out of the box; values outside it
/// are allowed as long as they validate.
struct HyperparamGrid {
  static constexpr std::array<double, 2> learning_rates{2e-5, 3e-5};
  static constexpr std::array<std::size_t, 4> epochs{5, 6, 10, 20};
  static constexpr std::array<double, 4> dropouts{0.1, 0.2, 0.3, 0.5};
  static constexpr std::array<std::size_t, 4> batch_sizes{16, 32, 64, 128};
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double dropout = 0.1;
  double clip_norm = 1.0;
  double gamma = 0.1;
  std::uint64_t seed = 42;
  std::size_t folds = 5;
  OptimizerKind optimizer = OptimizerKind::adam;
  /// Linear decay of the learning rate to 10% of its initial value.
  bool lr_schedule = true;

  void validate() const {
    if (batch_size == 0) throw ValidationError("train: batch size must be positive");
    if (!(lr > 0.0)) throw ValidationError("train: learning rate must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("train: dropout must be in [0, 1)");
    if (!(clip_norm > 0.0)) throw ValidationError("train: clip norm must be positive");
    if (!(gamma >= 0.0)) throw ValidationError("train: gamma must be non-negative");
    if (folds < 2) throw ValidationError("train: fold count must be at least 2");
  }

  double learning_rate_at(std::size_t epoch) const {
    if (!lr_schedule || epochs <= 1) return lr;
    const double frac = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return lr * (1.0 - 0.9 * frac);
  }
};

template <class M>
concept TrainableModel = requires(M& m, Tape& t, const Dataset& ds,
                                  std::span<const std::size_t> idx, const TrainContext& ctx) {
  { m.params() } -> std::same_as<ParamStore&>;
  { m.loss(t, ds, idx, ctx) } -> std::same_as<Var>;
  { m.predict(ds, idx) } -> std::same_as<std::vector<int>>;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch, mean over minibatches
  std::vector<double> val_loss;    // per epoch, evaluation mode
  std::size_t best_epoch = 0;      // 1-based; 0 when no epoch ran
};

/// Evaluation-mode objective (no dropout) averaged over minibatches.
template <TrainableModel M>
double evaluate_loss(M& model, const Dataset& ds, std::span<const std::size_t> idx,
                     const TrainConfig& cfg, std::size_t epoch) {
  if (idx.empty()) return 0.0;
  TrainContext ctx{{}, cfg.gamma, epoch};
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
    auto batch = idx.subspan(start, std::min(cfg.batch_size, idx.size() - start));
    Tape tape;
    total += model.loss(tape, ds, batch, ctx).value().item() * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(idx.size());
}

/// Seeded-shuffle minibatch training with gradient clipping. On return the
/// model holds the parameters of the epoch with the lowest validation loss
/// (training loss when the validation set is empty).
template <TrainableModel M>
TrainHistory train(M& model, const Dataset& ds, std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> val_idx, const TrainConfig& cfg) {
  cfg.validate();
  if (train_idx.empty()) throw ValidationError("train: empty training set");
  TrainHistory hist;
  if (cfg.epochs == 0) return hist;

  Rng rng(cfg.seed);
  OptimizerState opt(cfg.optimizer, cfg.lr);
  opt.attach(model.params());
  model.params().zero_grads();

  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  ParamStore best = model.params();
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_learning_rate(cfg.learning_rate_at(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    TrainContext ctx{{true, cfg.dropout, &rng}, cfg.gamma, epoch};
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::span<const std::size_t> batch(order.data() + start,
                                         std::min(cfg.batch_size, order.size() - start));
      Tape tape;
      Var loss = model.loss(tape, ds, batch, ctx);
      total += loss.value().item() * static_cast<double>(batch.size());
      tape.backward(loss);
      clip_gradients(model.params(), cfg.clip_norm);
      opt.step(model.params());
    }
    hist.train_loss.push_back(total / static_cast<double>(order.size()));
    double val = val_idx.empty() ? evaluate_loss(model, ds, train_idx, cfg, epoch)
                                 : evaluate_loss(model, ds, val_idx, cfg, epoch);
    hist.val_loss.push_back(val);
    if (val < best_loss) {
      best_loss = val;
      best = model.params();
      hist.best_epoch = epoch + 1;
    }
  }
  model.params() = best;
  model.params().zero_grads();
  return hist;
}

template <TrainableModel M>
MetricsReport evaluate(M& model, const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<int> gold;
  for (std::size_t i : idx) gold.push_back(ds.samples.at(i).label);
  return compute_metrics(model.predict(ds, idx), gold);
}

inline std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// ---------------------------------------------------------------------------
// Cross-validation

/// Seeded partition of n samples into k folds; the first n % k folds get one
/// extra sample.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k,
                                                             std::uint64_t seed) {
  if (k < 2) throw ValidationError("kfold: k must be at least 2");
  if (k > n) throw ValidationError("kfold: k = " + std::to_string(k) + " exceeds " +
                                   std::to_string(n) + " samples");
  auto perm = seeded_permutation(n, seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t len = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                    perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return folds;
}

struct CrossValResult {
  std::vector<std::vector<std::size_t>> folds;
  std::vector<MetricsReport> reports;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;  // sample standard deviation (n - 1)
};

/// Each fold is the test set exactly once. The remaining samples are split
/// 90/10 (at least one validation sample) for model selection. Fold f uses
/// seed + f for both initialisation and training.
template <class Factory>
  requires requires(Factory f, std::uint64_t s) {
    { f(s) } -> TrainableModel;
  }
CrossValResult kfold_cv(Factory&& make_model, const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  CrossValResult res;
  res.folds = kfold_partition(ds.size(), cfg.folds, cfg.seed);
  for (std::size_t f = 0; f < res.folds.size(); ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < res.folds.size(); ++g)
      if (g != f) rest.insert(rest.end(), res.folds[g].begin(), res.folds[g].end());
    const std::size_t nval = rest.size() >= 2 ? std::max<std::size_t>(1, rest.size() / 10) : 0;
    std::span<const std::size_t> val(rest.data(), nval);
    std::span<const std::size_t> tr(rest.data() + nval, rest.size() - nval);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed + f;
    auto model = make_model(fold_cfg.seed);
    train(model, ds, tr, val, fold_cfg);
    res.reports.push_back(evaluate(model, ds, res.folds[f]));
  }
  double s = 0.0;
  for (const auto& r : res.reports) s += r.f1;
  const double k = static_cast<double>(res.reports.size());
  res.mean_f1 = s / k;
  double ss = 0.0;
  for (const auto& r : res.reports) ss += (r.f1 - res.mean_f1) * (r.f1 - res.mean_f1);
  res.std_f1 = std::sqrt(ss / (k - 1.0));
  return res;
}

}  // namespace fusionbench
