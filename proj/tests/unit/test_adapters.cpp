/* Copyright 2026 The ALLoRA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "allora/adapters.hpp"
#include "allora/dropout_analysis.hpp"
#include "allora/error.hpp"
#include "frozen_values.hpp"
#include "oracles.hpp"

namespace allora {
namespace {

LoraLayer random_layer(oracle::Rand& r, std::size_t n_out, std::size_t n_in, std::size_t rank,
                       double alpha) {
  return LoraLayer(r.matrix(n_out, n_in), r.matrix(rank, n_in), r.matrix(n_out, rank), alpha);
}

// Σ upstream ⊙ out, whose gradient w.r.t. out is upstream.
double contract(const Matrix& upstream, const Matrix& out) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += upstream.data()[i] * out.data()[i];
  return s;
}

Matrix scale_columns(Matrix m, const std::vector<double>& f) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= f[j];
  return m;
}

TEST(AdaptiveFactor, Examples) {
  EXPECT_EQ(adaptive_factor(0.0, 2.0), 2.0);
  EXPECT_EQ(adaptive_factor(0.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(adaptive_factor(0.75, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(adaptive_factor(3.0, 1.0), 0.5);
}

TEST(AdaptiveFactor, BoundedAndStrictlyDecreasing) {
  for (double eta : {0.5, 1.0, 2.0, 8.0}) {
    double prev = adaptive_factor(0.0, eta);
    for (double x = 1e-3; x < 1e6; x *= 1.7) {
      const double f = adaptive_factor(x, eta);
      EXPECT_GT(f, 0.0);
      EXPECT_LT(f, prev);
      EXPECT_LE(f, eta);
      EXPECT_LE(f, 1.0 / std::sqrt(x));
      prev = f;
    }
  }
}

TEST(AdaptiveFactor, RejectsBadInput) {
  EXPECT_THROW(adaptive_factor(-1e-12, 1.0), InvalidArgument);
  EXPECT_THROW(adaptive_factor(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(adaptive_factor(std::nan(""), 1.0), InvalidArgument);
}

TEST(PlainBackward, MatchesFiniteDifferences) {
  oracle::Rand r(1);
  for (int t = 0; t < 10; ++t) {
    const LoraLayer l = random_layer(r, 4, 3, 2, 1.0 + t);
    const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
    const BackwardResult g = plain_backward(l, x, u);
    EXPECT_LE(oracle::max_rel_err(g.grad_a, oracle::central_difference(l.a(), [&](const Matrix& m) {
      return contract(u, forward(LoraLayer(l.w(), m, l.b(), l.alpha()), x)); })), 1e-6);
    EXPECT_LE(oracle::max_rel_err(g.grad_b, oracle::central_difference(l.b(), [&](const Matrix& m) {
      return contract(u, forward(LoraLayer(l.w(), l.a(), m, l.alpha()), x)); })), 1e-6);
    EXPECT_LE(oracle::max_rel_err(g.grad_input, oracle::central_difference(x, [&](const Matrix& m) {
      return contract(u, forward(l, m)); })), 1e-6);
  }
}

TEST(AlloraBackward, ZeroBIsEtaTimesPlain) {
  oracle::Rand r(2);
  for (double eta : {1.0, std::sqrt(2.0), 2.0, 5.0}) {
    LoraLayer l = random_layer(r, 4, 6, 2, 2.0);
    l.set_b(Matrix(4, 2));
    const Matrix x = r.matrix(7, 6), u = r.matrix(7, 4);
    const BackwardResult p = plain_backward(l, x, u);
    const BackwardResult a = allora_backward(l, x, u, eta);
    for (double f : allora_factors(l, eta)) EXPECT_EQ(f, eta);
    EXPECT_LE(max_abs(a.grad_b - eta * p.grad_b), 1e-12 * (1.0 + max_abs(p.grad_b)));
    EXPECT_EQ(max_abs(a.grad_a), 0.0);
  }
}

TEST(AlloraBackward, GradInputIsBitIdenticalToPlain) {
  oracle::Rand r(3);
  for (int t = 0; t < 10; ++t) {
    const LoraLayer l = random_layer(r, 5, 4, 3, 3.0);
    const Matrix x = r.matrix(6, 4), u = r.matrix(6, 5);
    EXPECT_EQ(allora_backward(l, x, u, 2.0).grad_input, plain_backward(l, x, u).grad_input);
    EXPECT_EQ(allora_od_backward(l, x, u, 2.0).grad_input, plain_backward(l, x, u).grad_input);
  }
}

TEST(AlloraBackward, FactorsUseRowNormsOfBA) {
  oracle::Rand r(4);
  const LoraLayer l = random_layer(r, 5, 4, 2, 2.0);
  const std::vector<double> f = allora_factors(l, 3.0);
  const auto ba = oracle::matmul(oracle::to_dense(l.b()), oracle::to_dense(l.a()));
  ASSERT_EQ(f.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (double v : ba[i]) s += v * v;
    EXPECT_LE(oracle::rel(f[i], 1.0 / std::sqrt(std::sqrt(s) + 1.0 / 9.0)), 1e-12);
  }
}

TEST(AlloraBackward, EqualsGradientOfFactorWeightedSurrogate) {
  oracle::Rand r(5);
  for (int t = 0; t < 10; ++t) {
    const LoraLayer l = random_layer(r, 4, 3, 2, 2.0);
    const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
    const double eta = 0.5 + t;
    const Matrix uf = scale_columns(u, allora_factors(l, eta));
    const BackwardResult g = allora_backward(l, x, u, eta);
    EXPECT_LE(oracle::max_rel_err(g.grad_a, oracle::central_difference(l.a(), [&](const Matrix& m) {
      return contract(uf, forward(LoraLayer(l.w(), m, l.b(), l.alpha()), x)); })), 1e-6);
    EXPECT_LE(oracle::max_rel_err(g.grad_b, oracle::central_difference(l.b(), [&](const Matrix& m) {
      return contract(uf, forward(LoraLayer(l.w(), l.a(), m, l.alpha()), x)); })), 1e-6);
  }
}

TEST(AlloraBackward, LargeNormsShrinkUpdates) {
  oracle::Rand r(6);
  LoraLayer l = random_layer(r, 4, 3, 2, 2.0);
  const std::vector<double> rows = row_norms(delta(l));
  l.set_b((1e12 / *std::min_element(rows.begin(), rows.end())) * l.b());
  const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
  for (double f : allora_factors(l, 2.0)) EXPECT_LT(f, 1e-5);
  const BackwardResult p = plain_backward(l, x, u), a = allora_backward(l, x, u, 2.0);
  EXPECT_LE(max_abs(a.grad_b), 1e-5 * max_abs(p.grad_b));
  EXPECT_LE(max_abs(a.grad_a), 1e-5 * max_abs(p.grad_a));
}

TEST(AlloraFamily, InitEquivalenceAtZeroB) {
  oracle::Rand r(15);
  for (double eta : {1.0, 2.0, 0.5}) {
    LoraLayer l = random_layer(r, 4, 5, 2, 2.0);
    l.set_b(Matrix(4, 2));
    const Matrix x = r.matrix(6, 5), u = r.matrix(6, 4), ones(6, 2, 1.0);
    const BackwardResult p = plain_backward(l, x, u);
    const BackwardResult al = allora_backward(l, x, u, eta);
    const BackwardResult od = allora_od_backward(l, x, u, eta);
    const BackwardResult ad = allora_dropout_backward(l, x, u, ones, eta);
    for (double f : allora_od_factors(l, x, eta)) EXPECT_EQ(f, eta);
    EXPECT_EQ(al.grad_b, od.grad_b);
    EXPECT_EQ(al.grad_b, ad.grad_b);
    EXPECT_EQ(al.grad_a, od.grad_a);
    EXPECT_EQ(al.grad_a, ad.grad_a);
    EXPECT_EQ(al.grad_b, eta * p.grad_b);
  }
}

TEST(AdaptiveFactor, EqualsEtaOnlyAtZero) {
  for (double eta : {1.0, 2.0}) {
    EXPECT_EQ(adaptive_factor(0.0, eta), eta);
    EXPECT_LT(adaptive_factor(1e-10, eta), eta);
  }
}

TEST(AlloraOdBackward, BatchOfOneUsesAbsoluteBranchOutput) {
  oracle::Rand r(7);
  const LoraLayer l = random_layer(r, 4, 3, 2, 1.0);
  const Matrix x = r.matrix(1, 3);
  const auto f = oracle::matmul(oracle::matmul(oracle::to_dense(x), oracle::transpose(oracle::to_dense(l.a()))),
                                oracle::transpose(oracle::to_dense(l.b())));
  const std::vector<double> got = allora_od_factors(l, x, 2.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(oracle::rel(got[i], adaptive_factor(std::abs(l.scaling() * f[0][i]), 2.0)), 1e-12);
}

TEST(AlloraOdBackward, FactorsFromBatchMeanThenSharedScaling) {
  oracle::Rand r(8);
  const LoraLayer l = random_layer(r, 4, 3, 2, 2.0);
  const Matrix x = r.matrix(6, 3), u = r.matrix(6, 4);
  const Matrix f = lora_branch(l, x);
  std::vector<double> want(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    double m = 0.0;
    for (std::size_t n = 0; n < 6; ++n) m += std::abs(f(n, i));
    want[i] = adaptive_factor(m / 6.0, 3.0);
  }
  const std::vector<double> got = allora_od_factors(l, x, 3.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(oracle::rel(got[i], want[i]), 1e-12);
  const BackwardResult g = allora_od_backward(l, x, u, 3.0);
  const BackwardResult s = scaled_backward(l, x, u, got, nullptr);
  EXPECT_EQ(g.grad_a, s.grad_a);
  EXPECT_EQ(g.grad_b, s.grad_b);
}

TEST(AsfForward, FrozenScalarValues) {
  // One input, rank one, unit scaling: the branch output is b itself.
  const LoraLayer l(Matrix(3, 1), Matrix{{1}}, Matrix{{3}, {-0.5}, {0}}, 1.0);
  const Matrix out = asf_forward(l, Matrix{{1}}, 2.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out(0, i), frozen::kAsfOut[i], 1e-14);
  const BackwardResult g = asf_backward(l, Matrix{{1}}, Matrix{{1, 1, 1}}, 2.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g.grad_b(i, 0), frozen::kAsfDeriv[i], 1e-12);
}

TEST(AsfForward, ScalarExamples) {
  const LoraLayer l(Matrix(2, 1), Matrix{{1}}, Matrix{{3}, {0}}, 1.0);
  const Matrix out = asf_forward(l, Matrix{{1}}, 1.0);
  EXPECT_EQ(out(0, 0), 1.5);
  EXPECT_EQ(out(0, 1), 0.0);
  EXPECT_THROW(asf_forward(l, Matrix{{1}}, 0.0), InvalidArgument);
}

TEST(AsfBackward, MatchesFiniteDifferences) {
  oracle::Rand r(9);
  for (int t = 0; t < 10; ++t) {
    const LoraLayer l = random_layer(r, 4, 3, 2, 2.0);
    const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
    const double eta = 1.0 + 0.5 * t;
    const BackwardResult g = asf_backward(l, x, u, eta);
    EXPECT_LE(oracle::max_rel_err(g.grad_a, oracle::central_difference(l.a(), [&](const Matrix& m) {
      return contract(u, asf_forward(LoraLayer(l.w(), m, l.b(), l.alpha()), x, eta)); })), 1e-5);
    EXPECT_LE(oracle::max_rel_err(g.grad_b, oracle::central_difference(l.b(), [&](const Matrix& m) {
      return contract(u, asf_forward(LoraLayer(l.w(), l.a(), m, l.alpha()), x, eta)); })), 1e-5);
    EXPECT_LE(oracle::max_rel_err(g.grad_input, oracle::central_difference(x, [&](const Matrix& m) {
      return contract(u, asf_forward(l, m, eta)); })), 1e-5);
  }
}

TEST(DropoutBackward, AllOnesMaskIsPlain) {
  oracle::Rand r(10);
  const LoraLayer l = random_layer(r, 4, 3, 2, 4.0);
  const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4), ones(5, 2, 1.0);
  EXPECT_LE(max_abs(dropout_forward(l, x, ones) - forward(l, x)), 1e-12);
  const BackwardResult d = dropout_backward(l, x, u, ones), p = plain_backward(l, x, u);
  EXPECT_LE(max_abs(d.grad_a - p.grad_a), 1e-12);
  EXPECT_LE(max_abs(d.grad_b - p.grad_b), 1e-12);
  EXPECT_LE(max_abs(d.grad_input - p.grad_input), 1e-12);
}

TEST(DropoutBackward, DroppedUnitGetsNoGradient) {
  oracle::Rand r(11);
  const LoraLayer l = random_layer(r, 4, 3, 3, 3.0);
  const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
  Matrix mask(5, 3, 2.0);
  for (std::size_t n = 0; n < 5; ++n) mask(n, 1) = 0.0;
  const BackwardResult g = dropout_backward(l, x, u, mask);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g.grad_a(1, j), 0.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g.grad_b(i, 1), 0.0);
  EXPECT_GT(max_abs(g.grad_a), 0.0);
  EXPECT_THROW(dropout_backward(l, x, u, Matrix(5, 2)), DimensionMismatch);
}

TEST(DropoutBackward, MaskAverageEqualsExpectedLossGradient) {
  oracle::Rand r(12);
  for (double keep : {0.3, 0.6}) {
    const LoraLayer l = random_layer(r, 2, 3, 2, 2.0);
    const Matrix x = r.matrix(3, 3), y = r.matrix(3, 2);
    auto grads = [&](const Matrix& m, bool want_a) {
      const Matrix u = 2.0 * (dropout_forward(l, x, m) - y);
      const BackwardResult g = dropout_backward(l, x, u, m);
      return want_a ? g.grad_a : g.grad_b;
    };
    const Matrix ea = oracle::mask_expectation_matrix(3, 2, keep, [&](const Matrix& m) { return grads(m, true); });
    const Matrix eb = oracle::mask_expectation_matrix(3, 2, keep, [&](const Matrix& m) { return grads(m, false); });
    const LoraGradients g = grad_expected_lora(l, x, y, keep);
    EXPECT_LE(oracle::max_rel_err(ea, g.grad_a), 1e-9);
    EXPECT_LE(oracle::max_rel_err(eb, g.grad_b), 1e-9);
  }
}

TEST(AlloraDropoutBackward, ComposesMaskAndRowFactors) {
  oracle::Rand r(13);
  const LoraLayer l = random_layer(r, 4, 3, 2, 2.0);
  const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
  Matrix mask(5, 2, 2.0);
  mask(0, 0) = mask(3, 1) = 0.0;
  const BackwardResult g = allora_dropout_backward(l, x, u, mask, 2.0);
  const BackwardResult d = dropout_backward(l, x, scale_columns(u, allora_factors(l, 2.0)), mask);
  EXPECT_LE(max_abs(g.grad_a - d.grad_a), 1e-12);
  EXPECT_LE(max_abs(g.grad_b - d.grad_b), 1e-12);
}

TEST(AdaptorKind, ParseRoundTripAndValidate) {
  for (AdaptorVariant v : {AdaptorVariant::kPlain, AdaptorVariant::kDropout, AdaptorVariant::kAllora,
                           AdaptorVariant::kAlloraDropout, AdaptorVariant::kAlloraOutputDependent,
                           AdaptorVariant::kAdaptiveScaling}) {
    EXPECT_EQ(parse_adaptor(to_string(v)), v);
  }
  EXPECT_THROW(parse_adaptor("lora"), InvalidArgument);
  EXPECT_NO_THROW((AdaptorKind{AdaptorVariant::kDropout, 1.0, 0.5}.validate()));
  EXPECT_THROW((AdaptorKind{AdaptorVariant::kPlain, 1.0, 0.5}.validate()), InvalidArgument);
  EXPECT_THROW((AdaptorKind{AdaptorVariant::kAllora, 0.0, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((AdaptorKind{AdaptorVariant::kAlloraDropout, 1.0, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((AdaptorKind{AdaptorVariant::kDropout, 1.0, 1.5}.validate()), InvalidArgument);
}

TEST(AdaptorDispatch, EvaluationModeDropsMask) {
  oracle::Rand r(14);
  const LoraLayer l = random_layer(r, 4, 3, 2, 2.0);
  const Matrix x = r.matrix(5, 3), u = r.matrix(5, 4);
  const AdaptorKind d{AdaptorVariant::kDropout, 1.0, 0.5};
  EXPECT_EQ(adaptor_forward(d, l, x, nullptr), forward(l, x));
  EXPECT_EQ(adaptor_backward(d, l, x, u, nullptr).grad_b, plain_backward(l, x, u).grad_b);
  const AdaptorKind s{AdaptorVariant::kAdaptiveScaling, 2.0, 1.0};
  EXPECT_EQ(adaptor_forward(s, l, x, nullptr), asf_forward(l, x, 2.0));
}

}  // namespace
}  // namespace allora
