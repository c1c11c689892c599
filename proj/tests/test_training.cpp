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

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fusionbench/fusionbench.hpp"

using namespace fusionbench;

namespace {

double bce(const std::vector<double>& z, const std::vector<double>& y) {
  Tape t;
  return bce_with_logits(t.constant(Tensor::vector(z)), y).value().item();
}

ParamStore grads_store(std::vector<double> g) {
  ParamStore s;
  s.add("w", Tensor(Shape{g.size()}));
  s.grad("w") = Tensor::vector(std::move(g));
  return s;
}

// Label lists realising a given confusion matrix.
void realise(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn, std::vector<int>& pred,
             std::vector<int>& gold) {
  pred.clear();
  gold.clear();
  auto put = [&](std::size_t n, int p, int g) {
    for (std::size_t i = 0; i < n; ++i) {
      pred.push_back(p);
      gold.push_back(g);
    }
  };
  put(tp, 1, 1);
  put(fp, 1, 0);
  put(fn, 0, 1);
  put(tn, 0, 0);
}

// Two Gaussian blobs with a margin, one per class, in both modalities.
Dataset separable_toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Dataset ds;
  ds.modality_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    int y = static_cast<int>(i % 2);
    double c = y ? 1.5 : -1.5;
    MultimodalSample s{"s" + std::to_string(i), {}, y};
    for (int m = 0; m < 2; ++m) {
      Tensor v(Shape{4});
      for (double& x : v.data()) x = c + noise(rng);
      s.modalities.push_back(v);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.lr = 1e-2;
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST(Bce, SpecExamples) {
  EXPECT_NEAR(bce({0.0}, {1.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce({0.0}, {0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce({2.0, -2.0}, {1.0, 0.0}), std::log1p(std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(bce({2.0, -2.0}, {1.0, 0.0}), 0.12693, 1e-5);
}

TEST(Bce, StableForLargeLogits) {
  EXPECT_NEAR(bce({1000.0}, {0.0}), 1000.0, 1e-9);
  EXPECT_NEAR(bce({-1000.0}, {0.0}), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(bce({-800.0}, {1.0})));
}

TEST(Bce, RejectsBadLabels) {
  Tape t;
  EXPECT_THROW(bce_with_logits(t.constant(Tensor::vector({0.0})), {0.5}), ValidationError);
  EXPECT_THROW(bce_with_logits(t.constant(Tensor::vector({0.0, 1.0})), {1.0}), DimensionError);
}

TEST(ClipGradients, SpecExamples) {
  ParamStore a = grads_store({3, 4});
  EXPECT_EQ(clip_gradients(a, 10.0), 1.0);
  EXPECT_EQ(a.grad("w"), Tensor::vector({3, 4}));
  ParamStore b = grads_store({3, 4});
  EXPECT_DOUBLE_EQ(clip_gradients(b, 1.0), 0.2);
  EXPECT_NEAR(b.grad("w")[0], 0.6, 1e-15);
  EXPECT_NEAR(b.grad("w")[1], 0.8, 1e-15);
  ParamStore z = grads_store({0, 0});
  EXPECT_EQ(clip_gradients(z, 1.0), 1.0);
}

TEST(ClipGradients, NeverIncreasesNorm) {
  Rng rng(1);
  std::normal_distribution<double> d(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    ParamStore s;
    s.add("a", Tensor(Shape{3}));
    s.add("b", Tensor(Shape{2, 2}));
    for (double& v : s.grad("a").data()) v = d(rng);
    for (double& v : s.grad("b").data()) v = d(rng);
    const double before = gradient_norm(s);
    const double max_norm = std::abs(d(rng)) + 1e-3;
    clip_gradients(s, max_norm);
    EXPECT_LE(gradient_norm(s), before + 1e-12);
    EXPECT_LE(gradient_norm(s), max_norm * (1 + 1e-12));
  }
}

TEST(Optimizer, ZeroGradientLeavesParamsUnchanged) {
  for (auto kind : {OptimizerKind::adam, OptimizerKind::adagrad}) {
    ParamStore s;
    s.add("w", Tensor::vector({1.5, -2.0}));
    OptimizerState opt(kind, 0.1);
    opt.attach(s);
    for (int i = 0; i < 3; ++i) optimizer_step(opt, s);
    EXPECT_EQ(s.value("w"), Tensor::vector({1.5, -2.0})) << optimizer_name(kind);
  }
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  ParamStore s;
  s.add("w", Tensor::vector({0.0}));
  s.grad("w") = Tensor::vector({1.0});
  OptimizerState opt(OptimizerKind::adam, 0.1);
  opt.attach(s);
  optimizer_step(opt, s);
  // m̂ = 1, v̂ = 1 after bias correction.
  EXPECT_NEAR(s.value("w")[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(s.grad("w")[0], 0.0);
}

TEST(Optimizer, AdamSecondStepMatchesTrace) {
  ParamStore s;
  s.add("w", Tensor::vector({0.0}));
  OptimizerState opt(OptimizerKind::adam, 0.1);
  opt.attach(s);
  double w = 0.0, m = 0.0, v = 0.0;
  const double gs[] = {1.0, -0.5, 2.0};
  for (int k = 0; k < 3; ++k) {
    s.grad("w") = Tensor::vector({gs[k]});
    optimizer_step(opt, s);
    m = 0.9 * m + 0.1 * gs[k];
    v = 0.999 * v + 0.001 * gs[k] * gs[k];
    double mh = m / (1 - std::pow(0.9, k + 1)), vh = v / (1 - std::pow(0.999, k + 1));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(s.value("w")[0], w, 1e-14);
  }
}

TEST(Optimizer, AdaGradMatchesTrace) {
  ParamStore s;
  s.add("w", Tensor::vector({0.0}));
  s.grad("w") = Tensor::vector({2.0});
  OptimizerState opt(OptimizerKind::adagrad, 0.1);
  opt.attach(s);
  optimizer_step(opt, s);
  EXPECT_NEAR(s.value("w")[0], -0.1 * 2.0 / std::sqrt(4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(s.value("w")[0], -0.1, 1e-8);
  s.grad("w") = Tensor::vector({1.0});
  optimizer_step(opt, s);
  EXPECT_NEAR(s.value("w")[0], -0.1 * 2.0 / std::sqrt(4.0 + 1e-8) - 0.1 / std::sqrt(5.0 + 1e-8), 1e-15);
}

TEST(Optimizer, StepWithoutAttachThrows) {
  ParamStore s;
  s.add("w", Tensor::vector({0.0}));
  OptimizerState opt(OptimizerKind::adam, 0.1);
  EXPECT_THROW(opt.step(s), Error);
}

TEST(LearningRate, LinearDecayToTenPercent) {
  TrainConfig c;
  c.epochs = 11;
  c.lr = 1.0;
  EXPECT_DOUBLE_EQ(c.learning_rate_at(0), 1.0);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(5), 0.55);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(10), 0.1);
  c.lr_schedule = false;
  EXPECT_DOUBLE_EQ(c.learning_rate_at(10), 1.0);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& t) { t.batch_size = 0; }, [](TrainConfig& t) { t.lr = 0; },
           [](TrainConfig& t) { t.dropout = 1.0; }, [](TrainConfig& t) { t.clip_norm = -1; },
           [](TrainConfig& t) { t.gamma = -0.1; }, [](TrainConfig& t) { t.folds = 1; }}) {
    TrainConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), ValidationError);
  }
  // The stock hyperparameter grid validates as-is.
  for (double lr : HyperparamGrid::learning_rates)
    for (double dr : HyperparamGrid::dropouts)
      for (std::size_t bs : HyperparamGrid::batch_sizes) {
        TrainConfig g;
        g.lr = lr;
        g.dropout = dr;
        g.batch_size = bs;
        EXPECT_NO_THROW(g.validate());
      }
}

TEST(Train, ZeroEpochsLeavesParamsUnchanged) {
  Dataset ds = separable_toy(32, 1);
  FusionModel model = FusionModel::create(ModelConfig{}, input_dims_of(ds), 3);
  ParamStore before = model.params();
  auto idx = all_indices(ds);
  TrainHistory h = train(model, ds, idx, {}, quick(0));
  EXPECT_TRUE(h.train_loss.empty());
  EXPECT_EQ(h.best_epoch, 0u);
  EXPECT_TRUE(model.params() == before);
}

TEST(Train, EmptyTrainingSetRejected) {
  Dataset ds = separable_toy(8, 1);
  FusionModel model = FusionModel::create(ModelConfig{}, input_dims_of(ds), 3);
  EXPECT_THROW(train(model, ds, {}, {}, quick(1)), ValidationError);
}

TEST(Train, SeparableToyReachesPerfectTrainAccuracy) {
  Dataset ds = separable_toy(64, 2);
  auto idx = all_indices(ds);
  for (ModelKind kind : {ModelKind::dof, ModelKind::lrc, ModelKind::unimodal}) {
    ModelConfig mc;
    mc.kind = kind;
    FusionModel model = FusionModel::create(mc, input_dims_of(ds), 5);
    train(model, ds, idx, {}, quick(100));
    EXPECT_EQ(evaluate(model, ds, idx).accuracy, 1.0) << model_kind_name(kind);
  }
}

TEST(Train, BitwiseDeterministic) {
  Dataset ds = separable_toy(48, 3);
  auto idx = all_indices(ds);
  std::vector<std::size_t> tr(idx.begin(), idx.begin() + 40), va(idx.begin() + 40, idx.end());
  for (ModelKind kind : {ModelKind::dof, ModelKind::lrc}) {
    ModelConfig mc;
    mc.kind = kind;
    TrainConfig cfg = quick(5);
    cfg.dropout = 0.3;
    FusionModel a = FusionModel::create(mc, input_dims_of(ds), 9);
    FusionModel b = FusionModel::create(mc, input_dims_of(ds), 9);
    TrainHistory ha = train(a, ds, tr, va, cfg);
    TrainHistory hb = train(b, ds, tr, va, cfg);
    EXPECT_EQ(ha.train_loss, hb.train_loss);
    EXPECT_EQ(ha.val_loss, hb.val_loss);
    EXPECT_TRUE(a.params() == b.params());
  }
}

TEST(Train, KeepsBestValidationEpoch) {
  Dataset ds = separable_toy(48, 4);
  auto idx = all_indices(ds);
  std::vector<std::size_t> tr(idx.begin(), idx.begin() + 40), va(idx.begin() + 40, idx.end());
  FusionModel model = FusionModel::create(ModelConfig{}, input_dims_of(ds), 1);
  TrainConfig cfg = quick(8);
  TrainHistory h = train(model, ds, tr, va, cfg);
  ASSERT_EQ(h.val_loss.size(), 8u);
  std::size_t best = std::min_element(h.val_loss.begin(), h.val_loss.end()) - h.val_loss.begin();
  EXPECT_EQ(h.best_epoch, best + 1);
  EXPECT_DOUBLE_EQ(evaluate_loss(model, ds, va, cfg, 0), h.val_loss[best]);
}

TEST(Train, LrcPretrainingOptimisesReconstructionOnly) {
  Dataset ds = separable_toy(32, 5);
  ModelConfig mc;
  mc.kind = ModelKind::lrc;
  mc.pretrain_epochs = 3;
  FusionModel model = FusionModel::create(mc, input_dims_of(ds), 2);
  auto idx = all_indices(ds);
  Tape t;
  double pre = model.loss(t, ds, idx, TrainContext{{}, 0.0, 0}).value().item();
  EXPECT_NEAR(pre, model.reconstruction_error(ds, idx), 1e-12);
  // Classifier weights get no gradient during pretraining.
  t.backward(model.loss(t, ds, idx, TrainContext{{}, 0.0, 0}));
  EXPECT_EQ(model.params().grad("lrc.cls.W"), Tensor(Shape{1, mc.lrc_out}));
}

TEST(KFold, TenSamplesFiveFolds) {
  auto folds = kfold_partition(10, 5, 42);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 2u);
    for (auto i : f) EXPECT_TRUE(seen.insert(i).second);
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(kfold_partition(10, 5, 42), folds);
  EXPECT_NE(kfold_partition(10, 5, 43), folds);
  EXPECT_THROW(kfold_partition(10, 1, 42), ValidationError);
  EXPECT_THROW(kfold_partition(3, 5, 42), ValidationError);
}

TEST(KFold, UnevenSizesDifferByAtMostOne) {
  auto folds = kfold_partition(103, 5, 7);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{21, 21, 21, 20, 20}));
}

TEST(KFold, ConstantLabelsGiveZeroMcc) {
  Dataset ds = separable_toy(20, 6);
  for (auto& s : ds.samples) s.label = 1;
  TrainConfig cfg = quick(2);
  CrossValResult cv = kfold_cv([&](std::uint64_t seed) { return FusionModel::create(ModelConfig{}, input_dims_of(ds), seed); },
                               ds, cfg);
  ASSERT_EQ(cv.reports.size(), 5u);
  for (const auto& r : cv.reports) {
    EXPECT_EQ(r.mcc, 0.0);
    EXPECT_EQ(r.fp + r.tn, 0u);
    EXPECT_TRUE(r.precision == 0.0 || r.precision == 1.0);
  }
}

TEST(KFold, MeanAndSampleStd) {
  Dataset ds = separable_toy(40, 7);
  TrainConfig cfg = quick(3);
  auto factory = [&](std::uint64_t seed) { return FusionModel::create(ModelConfig{}, input_dims_of(ds), seed); };
  CrossValResult a = kfold_cv(factory, ds, cfg);
  CrossValResult b = kfold_cv(factory, ds, cfg);
  EXPECT_EQ(a.mean_f1, b.mean_f1);
  EXPECT_EQ(a.std_f1, b.std_f1);
  double m = 0.0;
  for (const auto& r : a.reports) m += r.f1;
  m /= 5.0;
  double ss = 0.0;
  for (const auto& r : a.reports) ss += (r.f1 - m) * (r.f1 - m);
  EXPECT_DOUBLE_EQ(a.mean_f1, m);
  EXPECT_DOUBLE_EQ(a.std_f1, std::sqrt(ss / 4.0));
}

TEST(Metrics, SpecExamples) {
  std::vector<int> p, g;
  realise(5, 0, 0, 5, p, g);
  MetricsReport perfect = compute_metrics(p, g);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.mcc, 1.0);

  realise(5, 5, 0, 0, p, g);
  EXPECT_EQ(compute_metrics(p, g).mcc, 0.0);

  realise(3, 1, 2, 4, p, g);
  MetricsReport r = compute_metrics(p, g);
  EXPECT_NEAR(r.mcc, 10.0 / std::sqrt(600.0), 1e-15);
  EXPECT_NEAR(r.mcc, 0.40825, 1e-5);
  EXPECT_NEAR(r.f1, 2.0 * 0.75 * 0.6 / 1.35, 1e-15);
  EXPECT_NEAR(r.accuracy, 0.7, 1e-15);
}

TEST(Metrics, ExhaustiveSmallConfusionMatrices) {
  for (std::size_t tp = 0; tp <= 4; ++tp)
    for (std::size_t fp = 0; fp <= 4; ++fp)
      for (std::size_t fn = 0; fn <= 4; ++fn)
        for (std::size_t tn = 0; tn <= 4; ++tn) {
          if (tp + fp + fn + tn == 0) continue;
          std::vector<int> p, g;
          realise(tp, fp, fn, tn, p, g);
          MetricsReport r = compute_metrics(p, g);
          const double TP = tp, FP = fp, FN = fn, TN = tn;
          const double prec = tp + fp ? TP / (TP + FP) : 0.0;
          const double rec = tp + fn ? TP / (TP + FN) : 0.0;
          // F1 from counts directly: 2TP / (2TP + FP + FN).
          const double f1 = tp ? 2 * TP / (2 * TP + FP + FN) : 0.0;
          const double d = (TP + FP) * (TP + FN) * (TN + FP) * (TN + FN);
          const double mcc = d > 0 ? (TP * TN - FP * FN) / std::sqrt(d) : 0.0;
          EXPECT_NEAR(r.precision, prec, 1e-15);
          EXPECT_NEAR(r.recall, rec, 1e-15);
          EXPECT_NEAR(r.f1, f1, 1e-15);
          EXPECT_NEAR(r.mcc, mcc, 1e-15);
          EXPECT_GE(r.mcc, -1.0);
          EXPECT_LE(r.mcc, 1.0);
          // Swapping the class labels in both lists leaves MCC unchanged.
          for (auto& v : p) v = 1 - v;
          for (auto& v : g) v = 1 - v;
          EXPECT_NEAR(compute_metrics(p, g).mcc, mcc, 1e-15);
        }
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics({1, 0}, {1}), ValidationError);
  EXPECT_THROW(compute_metrics({}, {}), ValidationError);
  EXPECT_THROW(compute_metrics({2}, {1}), ValidationError);
}

TEST(Kappa, SpecExamples) {
  EXPECT_EQ(cohens_kappa({1, 0, 1, 1}, {1, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(cohens_kappa({1, 1, 0, 0}, {0, 0, 1, 1}), -1.0);
  EXPECT_DOUBLE_EQ(cohens_kappa({1, 1, 0, 0}, {1, 0, 0, 0}), 0.5);
  EXPECT_EQ(cohens_kappa({1, 1, 1}, {1, 1, 1}), 1.0);
  EXPECT_THROW(cohens_kappa({1}, {1, 0}), ValidationError);
}

TEST(Kappa, MultiClassContingencyOracle) {
  Rng rng(12);
  std::uniform_int_distribution<int> lab(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a[i] = lab(rng);
      b[i] = lab(rng) == 0 ? lab(rng) : a[i];
    }
    double table[3][3] = {};
    for (int i = 0; i < 30; ++i) table[a[i]][b[i]] += 1.0 / 30;
    double po = 0, pe = 0;
    for (int k = 0; k < 3; ++k) {
      po += table[k][k];
      double ra = 0, cb = 0;
      for (int j = 0; j < 3; ++j) {
        ra += table[k][j];
        cb += table[j][k];
      }
      pe += ra * cb;
    }
    EXPECT_NEAR(cohens_kappa(a, b), (po - pe) / (1 - pe), 1e-12);
  }
}
