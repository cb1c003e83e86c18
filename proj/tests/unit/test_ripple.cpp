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

#include <cmath>

#include "allora/error.hpp"
#include "allora/ripple.hpp"
#include "oracles.hpp"

namespace allora {
namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> dense_product_apply(const LayeredModel& m, const std::vector<double>& x) {
  const std::size_t d = m.dim();
  oracle::Dense p(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) p[i][i] = 1.0;
  for (const auto& l : m.layers) {
    auto eff = oracle::to_dense(l.w());
    const auto ba = oracle::matmul(oracle::to_dense(l.b()), oracle::to_dense(l.a()));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) eff[i][j] += m.eta * ba[i][j];
    p = oracle::matmul(eff, p);
  }
  std::vector<double> y(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) y[i] += p[i][j] * x[j];
  return y;
}

std::vector<double> random_vector(CounterRng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

TEST(ForwardLayered, SingleLayerByHand) {
  LayeredModel m;
  m.eta = 2.0;
  m.layers.emplace_back(Matrix{{1, 0}, {0, 2}}, Matrix{{1, 1}}, Matrix{{1}, {0}}, 1.0);
  // (W + 2·BA)·x with BA = [[1,1],[0,0]].
  EXPECT_EQ(forward_layered(m, {1, -1}), (std::vector<double>{1, -2}));
  EXPECT_THROW(forward_layered(m, {1, 2, 3}), DimensionMismatch);
}

TEST(ForwardLayered, SingleLayerZeroBIsBaseMap) {
  CounterRng rng(6);
  LayeredModel m = random_layered_model(4, 1, 1, 2.0, rng);
  m.layers[0].set_b(Matrix(4, 1));
  const std::vector<double> x{1, -2, 0.5, 3};
  const Matrix wx = matmul(m.layers[0].w(), Matrix{{1}, {-2}, {0.5}, {3}});
  const auto y = forward_layered(m, x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], wx(i, 0), 1e-15);
}

TEST(ForwardLayered, AgreesWithDenseProduct) {
  CounterRng rng(1);
  for (int t = 0; t < 10; ++t) {
    const LayeredModel m = random_layered_model(5, 4, 2, 0.5 * t, rng);
    const auto x = random_vector(rng, 5);
    const auto got = forward_layered(m, x), want = dense_product_apply(m, x);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(got[i], want[i], 1e-12 * (1.0 + std::abs(want[i])));
  }
}

TEST(ForwardLayered, IdentityWeightsWithAlignedUnitPerturbationDoubles) {
  const std::size_t d = 3;
  for (std::size_t layers = 1; layers <= 6; ++layers) {
    LayeredModel m;
    m.eta = 1.0;
    for (std::size_t l = 0; l < layers; ++l) {
      m.layers.emplace_back(Matrix::identity(d), Matrix{{1, 0, 0}}, Matrix{{1}, {0}, {0}}, 1.0);
    }
    EXPECT_DOUBLE_EQ(forward_layered(m, {1, 0, 0})[0], std::ldexp(1.0, int(layers)));
    const RippleBound b = ripple_bound(m, {1, 0, 0});
    EXPECT_NEAR(b.lhs, b.rhs, 1e-9 * b.rhs);
  }
}

TEST(RippleBound, HoldsForRandomModels) {
  CounterRng rng(2);
  for (int t = 0; t < 50; ++t) {
    const LayeredModel m = random_layered_model(6, 1 + t % 7, 1 + t % 3, 0.25 * (t % 9), rng);
    const auto x = random_vector(rng, 6);
    const RippleBound b = ripple_bound(m, x);
    EXPECT_LE(b.lhs, b.rhs * (1.0 + 1e-9));
    EXPECT_LE(b.rhs, b.mean_form * (1.0 + 1e-9));
    EXPECT_NEAR(b.lhs, norm2(forward_layered(m, x)), 1e-12 * b.lhs);
  }
}

TEST(RippleBound, ZeroBReducesToBaseProduct) {
  CounterRng rng(3);
  LayeredModel m = random_layered_model(5, 3, 2, 2.0, rng);
  for (auto& l : m.layers) l.set_b(Matrix(5, 2));
  const auto x = random_vector(rng, 5);
  const RippleBound b = ripple_bound(m, x);
  EXPECT_EQ(b.mean_ratio, 0.0);
  EXPECT_NEAR(b.rhs, b.constant * norm2(x), 1e-9 * b.rhs);
}

TEST(AlignedWorstCase, BoundIsAttained) {
  for (double eta : {0.0, 0.5, 1.0, 3.0}) {
    for (std::size_t layers : {1u, 4u, 12u}) {
      const AlignedCase c = aligned_worst_case(8, layers, eta, 11);
      const RippleBound b = ripple_bound(c.model, c.x);
      const double want = std::pow(1.0 + eta, double(layers)) * norm2(c.x);
      EXPECT_NEAR(b.lhs, want, 1e-9 * want);
      EXPECT_NEAR(b.rhs, b.lhs, 1e-6 * b.lhs);
      EXPECT_NEAR(b.constant, 1.0, 1e-9);
    }
  }
}

TEST(RandomOrthogonal, IsOrthogonal) {
  CounterRng rng(4);
  const Matrix q = random_orthogonal(7, rng);
  EXPECT_LT(max_abs(matmul_tn(q, q) - Matrix::identity(7)), 1e-12);
}

TEST(RippleGrowthStudy, GrowthMatchesOnePlusEta) {
  for (double eta : {0.0, 1.0, 3.0}) {
    const StudyResult s = ripple_growth_study(8, 12, eta, 5);
    const auto ratio = s.numeric_column("growth_ratio");
    const auto bound = s.numeric_column("bound_ratio");
    ASSERT_EQ(ratio.size(), 12u);
    for (std::size_t i = 0; i < ratio.size(); ++i) {
      EXPECT_NEAR(ratio[i], 1.0 + eta, 1e-9 * (1.0 + eta));
      EXPECT_NEAR(bound[i], 1.0, 1e-6);
    }
  }
  EXPECT_THROW(ripple_growth_study(8, 1, 1.0, 0), InvalidArgument);
  EXPECT_THROW(ripple_growth_study(8, 4, -1.0, 0), InvalidArgument);
}

TEST(LayeredModel, ValidateChecksShapes) {
  LayeredModel m;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m.layers.emplace_back(Matrix(2, 3), Matrix(1, 3), Matrix(2, 1), 1.0);
  EXPECT_THROW(m.validate(), DimensionMismatch);
}

}  // namespace
}  // namespace allora
