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

// Finite-difference checks over every differentiable primitive and the
// composite training objectives. Shared by the CLI and the test suites.

#include <cstdint>
#include <string>
#include <vector>

#include "fusionbench/encoders.hpp"
#include "fusionbench/fusion.hpp"
#include "fusionbench/gradcheck.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/linalg.hpp"
#include "fusionbench/ops.hpp"

namespace fusionbench {

inline constexpr double kGradCheckTolerance = 1e-5;
inline constexpr double kGradCheckEps = 1e-5;

struct GradCheckRow {
  std::string name;
  GradCheckResult result;
  bool passed = false;
};

namespace detail {

// Reduces a tensor-valued output to a scalar with fixed random weights so
// every output coordinate contributes a distinct adjoint.
inline Var contract(const Var& out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_uniform(out.shape(), rng, 0.5, 1.5);
  return sum(mul(out, out.tape().constant(std::move(w))));
}

inline GradCheckRow run_row(const std::string& name, ParamStore& store, const LossBuilder& f,
                            double corrupt) {
  GradCheckRow row{name, grad_check_detailed(f, store, kGradCheckEps, corrupt), false};
  row.passed = row.result.max_rel_error <= kGradCheckTolerance;
  return row;
}

// Uniform draws bounded away from zero so ELU/argmax kinks stay clear of
// the finite-difference stencil.
inline Tensor away_from_zero(Shape shape, Rng& rng, double lo = 0.2, double hi = 1.5) {
  Tensor t = random_uniform(std::move(shape), rng, lo, hi);
  std::bernoulli_distribution sign(0.5);
  for (double& v : t.data())
    if (sign(rng)) v = -v;
  return t;
}

}  // namespace detail

/// Tiny DOF problem (l1 = 3, l2 = 2, M = 2, N = 2) whose loss is
/// BCE + gamma·MMO; parameters are registered in `store`.
struct TinyDof {
  std::vector<UnimodalNetParams> encoders;
  DofParams dof;
  std::vector<std::vector<Tensor>> inputs;
  std::vector<double> labels;
  double gamma = 0.1;

  static TinyDof create(ParamStore& store, std::uint64_t seed, double gamma = 0.1) {
    Rng rng(seed);
    TinyDof t;
    t.gamma = gamma;
    const std::size_t dims[2] = {4, 3};
    for (std::size_t m = 0; m < 2; ++m) {
      t.encoders.push_back(UnimodalNetParams::create(store, "embed." + std::to_string(m),
                                                     {dims[m], 3}, {Activation::elu}, rng));
    }
    t.dof = DofParams::create(store, "dof", 2, 3, 2, {4}, gamma, rng);
    for (auto& [_, e] : store)
      if (e.value.rank() == 1) e.value = random_uniform(e.value.shape(), rng, -0.3, 0.3);
    for (std::size_t n = 0; n < 2; ++n) {
      t.inputs.push_back({random_normal(Shape{dims[0]}, rng), random_normal(Shape{dims[1]}, rng)});
    }
    t.labels = {1.0, 0.0};
    return t;
  }

  Var loss(Tape& tape, ParamStore& store) const {
    DofOutput out = dof_forward(tape, inputs, encoders, store, dof);
    return add(bce_with_logits(out.logits, labels), scale(out.mmo, gamma));
  }
};

/// Runs every row. A nonzero `corrupt` is added to each analytic gradient.
inline std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed = 7, double corrupt = 0.0) {
  std::vector<GradCheckRow> rows;
  Rng rng(seed);

  {
    ParamStore s;
    s.add("x", random_normal(Shape{4}, rng));
    s.add("W", random_normal(Shape{3, 4}, rng));
    s.add("b", random_normal(Shape{3}, rng));
    rows.push_back(detail::run_row("dense", s, [](Tape& t, ParamStore& p) {
      return detail::contract(dense(t.param(p, "x"), t.param(p, "W"), t.param(p, "b")), 11);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("x", detail::away_from_zero(Shape{6}, rng));
    rows.push_back(detail::run_row("activation/elu", s, [](Tape& t, ParamStore& p) {
      return detail::contract(elu(t.param(p, "x")), 12);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("x", random_normal(Shape{6}, rng, 2.0));
    rows.push_back(detail::run_row("activation/sigmoid", s, [](Tape& t, ParamStore& p) {
      return detail::contract(sigmoid(t.param(p, "x")), 13);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("x", random_normal(Shape{2, 5, 5}, rng));
    s.add("k", random_normal(Shape{3, 2, 3, 3}, rng));
    s.add("b", random_normal(Shape{3}, rng));
    rows.push_back(detail::run_row("conv2d", s, [](Tape& t, ParamStore& p) {
      return detail::contract(conv2d(t.param(p, "x"), t.param(p, "k"), t.param(p, "b"), 2), 14);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("x", random_normal(Shape{2, 4, 4}, rng));
    rows.push_back(detail::run_row("maxpool2d", s, [](Tape& t, ParamStore& p) {
      return detail::contract(maxpool2d(t.param(p, "x"), 2), 15);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("x", random_normal(Shape{2, 2, 3}, rng));
    s.add("k", random_normal(Shape{2, 3, 3, 2}, rng));
    s.add("b", random_normal(Shape{3}, rng));
    rows.push_back(detail::run_row("transposed_conv2d", s, [](Tape& t, ParamStore& p) {
      return detail::contract(
          transposed_conv2d(t.param(p, "x"), t.param(p, "k"), t.param(p, "b"), Window2{2, 2}), 16);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("M", random_normal(Shape{4, 3}, rng));
    rows.push_back(detail::run_row("nuclear_norm", s, [](Tape& t, ParamStore& p) {
      return nuclear_norm(t.param(p, "M"));
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("x", random_normal(Shape{3}, rng));
    s.add("W", random_normal(Shape{2, 3, 4}, rng));
    s.add("y", random_normal(Shape{4}, rng));
    rows.push_back(detail::run_row("bilinear", s, [](Tape& t, ParamStore& p) {
      return detail::contract(bilinear(t.param(p, "x"), t.param(p, "W"), t.param(p, "y")), 17);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("a", random_normal(Shape{2}, rng));
    s.add("b", random_normal(Shape{2}, rng));
    s.add("c", random_normal(Shape{2}, rng));
    rows.push_back(detail::run_row("tensor_fuse", s, [](Tape& t, ParamStore& p) {
      return detail::contract(tensor_fuse({t.param(p, "a"), t.param(p, "b"), t.param(p, "c")}), 18);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("z", random_normal(Shape{4}, rng, 2.0));
    rows.push_back(detail::run_row("bce_with_logits", s, [](Tape& t, ParamStore& p) {
      return bce_with_logits(t.param(p, "z"), {1.0, 0.0, 0.0, 1.0});
    }, corrupt));
  }
  {
    ParamStore s;
    CaeParams cae = CaeParams::create(s, "cae", Geometry{1, 4, 4}, 2, Window2{1, 1}, Window2{2, 2},
                                      3, 0.05, rng);
    for (auto& [_, e] : s)
      if (e.value.rank() == 1) e.value = random_uniform(e.value.shape(), rng, -0.3, 0.3);
    Tensor x = random_uniform(Shape{1, 4, 4}, rng, 0.0, 1.0);
    rows.push_back(detail::run_row("cae/reconstruction_loss", s, [cae, x](Tape& t, ParamStore& p) {
      Var in = t.constant(x);
      Var h = cae_encode(in, p, cae);
      return reconstruction_loss(in, cae_decode(h, p, cae), p, cae);
    }, corrupt));
  }
  {
    ParamStore s;
    UnimodalNetParams net = UnimodalNetParams::create(s, "embed", {4, 5, 3},
                                                      {Activation::elu, Activation::sigmoid}, rng);
    Tensor x = random_normal(Shape{4}, rng);
    rows.push_back(detail::run_row("unimodal_embed", s, [net, x](Tape& t, ParamStore& p) {
      return detail::contract(unimodal_embed(t.constant(x), p, net), 19);
    }, corrupt));
  }
  {
    ParamStore s;
    LrcParams lrc = LrcParams::create(s, "lrc", 2, 3, 4, rng);
    s.add("h0", random_normal(Shape{3}, rng));
    s.add("h1", random_normal(Shape{3}, rng));
    rows.push_back(detail::run_row("lrc_fuse", s, [lrc](Tape& t, ParamStore& p) {
      return detail::contract(lrc_fuse({t.param(p, "h0"), t.param(p, "h1")}, p, lrc), 20);
    }, corrupt));
  }
  {
    ParamStore s;
    DofParams dof = DofParams::create(s, "dof", 2, 3, 2, {4}, 0.1, rng);
    s.add("h0", random_normal(Shape{3}, rng));
    s.add("h1", random_normal(Shape{3}, rng));
    rows.push_back(detail::run_row("attention_gate", s, [dof](Tape& t, ParamStore& p) {
      return detail::contract(attention_gate(t.param(p, "h0"), {t.param(p, "h1")}, p, dof, 0), 21);
    }, corrupt));
  }
  {
    ParamStore s;
    DofParams dof = DofParams::create(s, "dof", 2, 2, 2, {3}, 0.1, rng);
    s.add("F", random_normal(Shape{9}, rng));
    rows.push_back(detail::run_row("fused_head", s, [dof](Tape& t, ParamStore& p) {
      return fused_head(t.param(p, "F"), p, dof);
    }, corrupt));
  }
  {
    ParamStore s;
    s.add("h0", random_normal(Shape{3, 2}, rng));
    s.add("h1", random_normal(Shape{3, 2}, rng));
    rows.push_back(detail::run_row("mmo_loss", s, [](Tape& t, ParamStore& p) {
      return mmo_loss({t.param(p, "h0"), t.param(p, "h1")});
    }, corrupt));
  }
  {
    ParamStore s;
    TinyDof tiny = TinyDof::create(s, seed + 1000);
    rows.push_back(detail::run_row("dof/bce+gamma*mmo", s, [tiny](Tape& t, ParamStore& p) {
      return tiny.loss(t, p);
    }, corrupt));
  }
  return rows;
}

inline bool all_passed(const std::vector<GradCheckRow>& rows) {
  for (const auto& r : rows)
    if (!r.passed) return false;
  return !rows.empty();
}

}  // namespace fusionbench
