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

#include <vector>

#include <gtest/gtest.h>

#include "fusionbench/fusionbench.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fusionbench;

namespace {

CaeParams make_cae(ParamStore& s, Geometry g, std::size_t kernels, Window2 k, Window2 pool,
                   std::size_t latent, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  CaeParams p = CaeParams::create(s, "cae", g, kernels, k, pool, latent, lambda, rng);
  // Nonzero biases so the replay exercises them.
  for (auto& [_, e] : s)
    if (e.value.rank() == 1) e.value = random_uniform(e.value.shape(), rng, -0.2, 0.2);
  return p;
}

void zero_all(ParamStore& s) {
  for (auto& [_, e] : s) e.value.fill(0.0);
}

// Layer-by-layer replay of the encoder on plain loops.
std::vector<double> replay_encode(const Tensor& x, const ParamStore& s, const CaeParams& p) {
  Tensor conv = fbtest::naive_conv(x, s.value("cae.enc.W"), s.value("cae.enc.b"), 1);
  auto e = fbtest::naive_elu(conv.values());
  Tensor act(conv.shape(), e);
  Geometry c = p.conv_out(), q = p.pooled();
  std::vector<double> pooled;
  for (std::size_t k = 0; k < c.channels; ++k)
    for (std::size_t i = 0; i < q.rows; ++i)
      for (std::size_t j = 0; j < q.cols; ++j) {
        double m = -INFINITY;
        for (std::size_t u = 0; u < p.pool.rows; ++u)
          for (std::size_t v = 0; v < p.pool.cols; ++v)
            m = std::max(m, act.at(k, i * p.pool.rows + u, j * p.pool.cols + v));
        pooled.push_back(m);
      }
  return fbtest::naive_elu(fbtest::naive_dense(pooled, s.value("cae.bottleneck.W"), s.value("cae.bottleneck.b")));
}

std::vector<double> replay_decode(const std::vector<double>& h, const ParamStore& s, const CaeParams& p) {
  auto flat = fbtest::naive_dense(h, s.value("cae.unproject.W"), s.value("cae.unproject.b"));
  Tensor grid(p.pooled().shape(), flat);
  Tensor up = fbtest::naive_transposed_conv(grid, s.value("cae.dec.W"), s.value("cae.dec.b"), p.pool.rows,
                                            p.pool.cols);
  return fbtest::naive_sigmoid(up.values());
}

}  // namespace

TEST(Cae, ZeroEverythingEncodesToZero) {
  ParamStore s;
  CaeParams p = make_cae(s, Geometry{1, 4, 4}, 2, 1, 2, 3, 0.0, 1);
  zero_all(s);
  Tape t;
  Tensor h = cae_encode(t.constant(Tensor(Shape{1, 4, 4})), s, p).value();
  EXPECT_EQ(h, Tensor(Shape{3}));
}

TEST(Cae, ZeroEverythingDecodesToHalf) {
  ParamStore s;
  CaeParams p = make_cae(s, Geometry{1, 4, 4}, 2, 1, 2, 3, 0.0, 1);
  zero_all(s);
  Tape t;
  Tensor x = cae_decode(t.constant(Tensor(Shape{3})), s, p).value();
  EXPECT_EQ(x, Tensor(Shape{1, 4, 4}, 0.5));
}

TEST(Cae, EncodeMatchesLayerReplay) {
  ParamStore s;
  CaeParams p = make_cae(s, Geometry{1, 4, 4}, 3, 1, 2, 5, 0.0, 7);
  Rng rng(8);
  Tensor x = random_uniform(Shape{1, 4, 4}, rng, 0.0, 1.0);
  Tape t;
  Tensor h = cae_encode(t.constant(x), s, p).value();
  ASSERT_EQ(h.size(), 5u);
  auto want = replay_encode(x, s, p);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(h[i], want[i], 1e-13);
}

TEST(Cae, DecodeUnitLatentMatchesLayerReplay) {
  ParamStore s;
  CaeParams p = make_cae(s, Geometry{2, 6, 5}, 3, Window2{3, 2}, Window2{2, 2}, 4, 0.0, 9);
  Tape t;
  std::vector<double> h(4, 1.0);
  Tensor xhat = cae_decode(t.constant(Tensor::vector(h)), s, p).value();
  ASSERT_EQ(xhat.shape(), (Shape{2, 6, 5}));
  auto want = replay_decode(h, s, p);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(xhat[i], want[i], 1e-13);
}

TEST(Cae, OutputLengthIsLatentForAllGeometries) {
  struct Case {
    Geometry g;
    Window2 k, pool;
  };
  const Case cases[] = {
      {{1, 4, 4}, 1, 2},           {{1, 4, 4}, 3, 2},           {{1, 1, 8}, Window2{1, 3}, Window2{1, 2}},
      {{1, 1, 9}, Window2{1, 2}, Window2{1, 4}}, {{3, 5, 7}, Window2{2, 2}, Window2{2, 3}},
      {{2, 6, 6}, 1, 3},           {{1, 1, 1}, 1, 1},           {{1, 7, 7}, Window2{4, 2}, Window2{2, 3}},
  };
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    for (std::size_t latent : {1u, 3u, 8u}) {
      ParamStore s;
      CaeParams p = make_cae(s, c.g, 2, c.k, c.pool, latent, 1e-3, seed++);
      Rng rng(seed);
      Tensor x = random_uniform(c.g.shape(), rng, 0.0, 1.0);
      Tape t;
      Var in = t.constant(x);
      Var h = cae_encode(in, s, p);
      EXPECT_EQ(h.shape(), (Shape{latent}));
      Var xhat = cae_decode(h, s, p);
      EXPECT_EQ(xhat.shape(), x.shape()) << shape_str(c.g.shape());
    }
  }
}

TEST(Cae, RejectsGeometryThatDoesNotTile) {
  ParamStore s;
  Rng rng(1);
  // Conv output 1x6 is not divisible by a width-4 pool.
  EXPECT_THROW(CaeParams::create(s, "cae", Geometry{1, 1, 8}, 2, Window2{1, 3}, Window2{1, 4}, 2, 0.0, rng),
               DimensionError);
  EXPECT_THROW(CaeParams::create(s, "cae2", Geometry{1, 2, 2}, 2, 3, 1, 2, 0.0, rng), DimensionError);
}

TEST(ReconstructionLoss, SpecExamples) {
  Tape t;
  Var x = t.constant(Tensor::vector({1, 0}));
  Var zero = t.constant(Tensor::vector({0, 0}));
  Var w = t.constant(Tensor::matrix({{1, 2}}));
  EXPECT_EQ(reconstruction_loss(x, x, {}, 0.0).value().item(), 0.0);
  EXPECT_DOUBLE_EQ(reconstruction_loss(x, zero, {}, 0.0).value().item(), 0.5);
  EXPECT_DOUBLE_EQ(reconstruction_loss(x, zero, {w}, 0.1).value().item(), 1.0);
  EXPECT_THROW(reconstruction_loss(x, zero, {w}, -0.1), ValidationError);
}

TEST(ReconstructionLoss, BoundedBelowByWeightPenalty) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    ParamStore s;
    CaeParams p = make_cae(s, Geometry{1, 4, 4}, 2, 1, 2, 3, 0.01 * trial, 200 + trial);
    Tensor x = random_uniform(Shape{1, 4, 4}, rng, 0.0, 1.0);
    double penalty = 0.0;
    for (const auto& n : p.weight_names()) penalty += squared_norm(s.value(n));
    penalty *= p.lambda;
    Tape t;
    Var in = t.constant(x);
    double loss = reconstruction_loss(in, cae_decode(cae_encode(in, s, p), s, p), s, p).value().item();
    EXPECT_GE(loss, penalty);
    EXPECT_GE(penalty, 0.0);
  }
}

TEST(Cae, GradientsThroughReconstructionLoss) {
  ParamStore s;
  CaeParams p = make_cae(s, Geometry{1, 1, 8}, 2, Window2{1, 3}, Window2{1, 2}, 3, 0.05, 12);
  Rng rng(13);
  Tensor x = random_uniform(Shape{8}, rng, 0.0, 1.0);
  double err = grad_check([&](Tape& t, ParamStore& ps) {
    Var in = t.constant(x);
    return reconstruction_loss(in, cae_decode(cae_encode(in, ps, p), ps, p), ps, p);
  }, s);
  EXPECT_LE(err, 1e-5);
}

TEST(Cae, TrainingDecreasesReconstructionLoss) {
  ParamStore s;
  CaeParams p = make_cae(s, Geometry{1, 1, 8}, 4, Window2{1, 3}, Window2{1, 2}, 4, 1e-4, 21);
  SynthConfig cfg;
  cfg.samples = 32;
  cfg.seed = 5;
  Dataset ds = generate_synthetic(cfg);
  OptimizerState opt(OptimizerKind::adam, 1e-2);
  opt.attach(s);
  std::vector<double> losses;
  for (int epoch = 0; epoch < 50; ++epoch) {
    Tape t;
    std::vector<Var> terms;
    for (const auto& sample : ds.samples) {
      // Squash into (0, 1) where the sigmoid decoder can reach.
      Tensor x = sample.modalities[0];
      for (double& v : x.data()) v = 0.5 + 0.4 * std::tanh(v);
      Var in = t.constant(x);
      terms.push_back(reconstruction_loss(in, cae_decode(cae_encode(in, s, p), s, p), s, p));
    }
    Var loss = mean_n(terms);
    losses.push_back(loss.value().item());
    t.backward(loss);
    opt.step(s);
  }
  EXPECT_LT(losses.back(), losses.front());
}

TEST(UnimodalEmbed, IdentityLayerPassesThrough) {
  ParamStore s;
  Rng rng(1);
  UnimodalNetParams p = UnimodalNetParams::create(s, "u", {3, 3}, {Activation::linear}, rng);
  s.set("u.0.W", Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  s.set("u.0.b", Tensor(Shape{3}));
  Tape t;
  Tensor x = Tensor::vector({0.5, -2, 3});
  EXPECT_EQ(unimodal_embed(t.constant(x), s, p).value(), x);
}

TEST(UnimodalEmbed, ZeroWeightsGiveActivationOfBias) {
  ParamStore s;
  Rng rng(1);
  UnimodalNetParams p = UnimodalNetParams::create(s, "u", {4, 2}, {Activation::sigmoid}, rng);
  s.set("u.0.W", Tensor(Shape{2, 4}));
  s.set("u.0.b", Tensor::vector({0.0, 1.0}));
  Rng in(2);
  for (int n = 0; n < 3; ++n) {
    Tape t;
    Tensor h = unimodal_embed(t.constant(random_normal(Shape{4}, in)), s, p).value();
    EXPECT_EQ(h[0], 0.5);
    EXPECT_DOUBLE_EQ(h[1], 1.0 / (1.0 + std::exp(-1.0)));
  }
}

TEST(UnimodalEmbed, TwoLayerNetMatchesReplay) {
  ParamStore s;
  Rng rng(3);
  UnimodalNetParams p =
      UnimodalNetParams::create(s, "u", {5, 4, 3}, {Activation::elu, Activation::elu}, rng);
  s.set("u.0.b", random_normal(Shape{4}, rng));
  s.set("u.1.b", random_normal(Shape{3}, rng));
  Tensor x = random_normal(Shape{5}, rng);
  Tape t;
  Tensor h = unimodal_embed(t.constant(x), s, p).value();
  auto a = fbtest::naive_elu(fbtest::naive_dense(x.values(), s.value("u.0.W"), s.value("u.0.b")));
  auto want = fbtest::naive_elu(fbtest::naive_dense(a, s.value("u.1.W"), s.value("u.1.b")));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(h[i], want[i], 1e-14);
}

TEST(UnimodalEmbed, RejectsWrongInputWidth) {
  ParamStore s;
  Rng rng(3);
  UnimodalNetParams p = UnimodalNetParams::create(s, "u", {5, 3}, {Activation::elu}, rng);
  Tape t;
  EXPECT_THROW(unimodal_embed(t.constant(Tensor(Shape{4})), s, p), DimensionError);
  EXPECT_THROW(UnimodalNetParams::create(s, "v", {5, 3}, {}, rng), DimensionError);
}

TEST(UnimodalEmbed, DropoutOnlyInTraining) {
  ParamStore s;
  Rng rng(3);
  UnimodalNetParams p =
      UnimodalNetParams::create(s, "u", {5, 64, 3}, {Activation::elu, Activation::elu}, rng);
  Tensor x = random_normal(Shape{5}, rng);
  Tape t;
  Tensor eval = unimodal_embed(t.constant(x), s, p).value();
  Rng drop(9);
  ForwardContext ctx{true, 0.5, &drop};
  Tensor train = unimodal_embed(t.constant(x), s, p, ctx).value();
  EXPECT_NE(eval, train);
  ForwardContext off{false, 0.5, &drop};
  EXPECT_EQ(unimodal_embed(t.constant(x), s, p, off).value(), eval);
}
