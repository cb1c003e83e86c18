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
#include "allora/linalg.hpp"
#include "frozen_values.hpp"
#include "oracles.hpp"

namespace allora {
namespace {

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix m{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(matmul(Matrix::identity(3), m), m);
}

TEST(Matmul, SmallProduct) {
  const Matrix c = matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{5}, {6}});
  EXPECT_EQ(c, (Matrix{{17}, {39}}));
}

TEST(Matmul, ZeroMatrixGivesZero) {
  const Matrix z(2, 3);
  const Matrix m{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(matmul(z, m), Matrix(2, 2));
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  oracle::Rand r(1);
  const Matrix a = r.matrix(7, 5), b = r.matrix(5, 4);
  const Matrix want = oracle::from_dense(oracle::matmul(oracle::to_dense(a), oracle::to_dense(b)));
  EXPECT_LT(max_abs(matmul(a, b) - want), 1e-12);
  EXPECT_LT(max_abs(matmul_tn(transpose(a), b) - want), 1e-12);
  EXPECT_LT(max_abs(matmul_nt(a, transpose(b)) - want), 1e-12);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL() << "expected DimensionMismatch";
  } catch (const DimensionMismatch& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
  }
}

TEST(Matmul, AssociativityProperty) {
  oracle::Rand r(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = r.matrix(1 + r.below(5), 1 + r.below(5));
    const Matrix b = r.matrix(a.cols(), 1 + r.below(5));
    const Matrix c = r.matrix(b.cols(), 1 + r.below(5));
    const Matrix lhs = matmul(matmul(a, b), c), rhs = matmul(a, matmul(b, c));
    EXPECT_LE(frobenius_norm(lhs - rhs), 1e-9 * std::max(1.0, frobenius_norm(lhs)));
  }
}

TEST(Transpose, IsAnInvolution) {
  oracle::Rand r(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix m = r.matrix(1 + r.below(6), 1 + r.below(6));
    EXPECT_EQ(transpose(transpose(m)), m);
  }
}

TEST(RowNorms, Examples) {
  EXPECT_EQ(row_norms(Matrix::identity(2)), (std::vector<double>{1, 1}));
  EXPECT_EQ(row_norms(Matrix{{3, 4}}), (std::vector<double>{5}));
  EXPECT_THROW(row_norms(Matrix()), InvalidArgument);
}

TEST(RowNorms, MatchSumOfSquares) {
  oracle::Rand r(4);
  const Matrix m = r.matrix(5, 7);
  const std::vector<double> n = row_norms(m);
  ASSERT_EQ(n.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) s += m(i, j) * m(i, j);
    EXPECT_NEAR(n[i], std::sqrt(s), 1e-12);
  }
}

TEST(RowNorms, FrobeniusIdentityProperty) {
  oracle::Rand r(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = r.matrix(1 + r.below(8), 1 + r.below(8));
    double s = 0.0;
    for (double v : row_norms(m)) s += v * v;
    EXPECT_LE(oracle::rel(s, frobenius_norm_sq(m)), 1e-12);
  }
}

TEST(Solve, RefusesSingularSystems) {
  EXPECT_THROW(solve(Matrix{{1, 2}, {2, 4}}, Matrix{{1}, {1}}), SingularMatrix);
  EXPECT_THROW(inverse(Matrix(3, 3)), SingularMatrix);
}

TEST(Solve, InverseMatchesGaussJordanOracle) {
  oracle::Rand r(6);
  const Matrix a = r.matrix(5, 5);
  const Matrix want = oracle::from_dense(oracle::inverse(oracle::to_dense(a)));
  EXPECT_LT(oracle::max_rel_err(inverse(a), want), 1e-10);
}

TEST(RidgeSolve, ZeroMuIsExactSolve) {
  oracle::Rand r(7);
  const Matrix x = r.matrix(4, 4), y = r.matrix(4, 2);
  const Matrix want = oracle::from_dense(oracle::matmul(oracle::inverse(oracle::to_dense(x)),
                                                        oracle::to_dense(y)));
  EXPECT_LT(oracle::max_rel_err(ridge_solve(x, y, 0.0), want), 1e-9);
}

TEST(RidgeSolve, HugeMuDrivesSolutionToZero) {
  oracle::Rand r(8);
  EXPECT_LT(frobenius_norm(ridge_solve(r.matrix(6, 3), r.matrix(6, 2), 1e12)), 1e-6);
}

TEST(RidgeSolve, MatchesExactRationalSolution) {
  const Matrix x{{1, 2, 0}, {0, 1, -1}, {2, 0, 1}, {1, 1, 1}, {-1, 0, 2}, {0, 3, 1}};
  const Matrix y{{1, 0}, {2, -1}, {0, 1}, {1, 1}, {-1, 2}, {3, 0}};
  const Matrix w = ridge_solve(x, y, 0.7);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_LE(oracle::rel(w.data()[i], frozen::kRidge[i]), 1e-9) << "entry " << i;
  }
}

TEST(RidgeSolve, MatchesNormalEquationsOracle) {
  oracle::Rand r(9);
  const Matrix x = r.matrix(6, 3), y = r.matrix(6, 2);
  auto xd = oracle::to_dense(x);
  auto g = oracle::matmul(oracle::transpose(xd), xd);
  for (std::size_t i = 0; i < 3; ++i) g[i][i] += 0.7;
  const Matrix want = oracle::from_dense(
      oracle::matmul(oracle::inverse(g), oracle::matmul(oracle::transpose(xd), oracle::to_dense(y))));
  EXPECT_LT(oracle::max_rel_err(ridge_solve(x, y, 0.7), want), 1e-9);
}

TEST(RidgeSolve, SingularWithoutRegularisationIsAnError) {
  const Matrix x{{1, 2}, {2, 4}, {3, 6}};
  EXPECT_THROW(ridge_solve(x, Matrix{{1}, {2}, {3}}, 0.0), SingularMatrix);
  EXPECT_NO_THROW(ridge_solve(x, Matrix{{1}, {2}, {3}}, 0.1));
}

TEST(SpectralNorm, MatchesExactValue) {
  const Matrix m{{2, -1, 0}, {1, 3, 1}, {0, 1, 4}};
  EXPECT_NEAR(spectral_norm(m), frozen::kSpectral, 1e-7);
}

TEST(SpectralNorm, ZeroAndOrthogonal) {
  EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0);
  const double c = std::cos(0.3), s = std::sin(0.3);
  EXPECT_NEAR(spectral_norm(Matrix{{c, -s}, {s, c}}), 1.0, 1e-9);
}

TEST(SymmetricEigen, ReconstructsInput) {
  oracle::Rand r(10);
  const Matrix a = r.matrix(6, 6);
  const Matrix s = matmul_tn(a, a);
  const SymmetricEigen e = symmetric_eigen(s);
  Matrix d(6, 6);
  for (std::size_t k = 0; k < 6; ++k) d(k, k) = e.values[k];
  const Matrix back = matmul(matmul(e.vectors, d), transpose(e.vectors));
  EXPECT_LT(max_abs(back - s), 1e-9);
  EXPECT_TRUE(std::is_sorted(e.values.begin(), e.values.end()));
}

TEST(MatrixInvariants, FiniteInputsStayFinite) {
  oracle::Rand r(11);
  const Matrix a = r.matrix(4, 4), b = r.matrix(4, 4);
  for (const Matrix& m : {matmul(a, b), a + b, a - b, 2.0 * a, hadamard(a, b), inverse(a)}) {
    EXPECT_TRUE(m.all_finite());
  }
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionMismatch);
}

}  // namespace
}  // namespace allora
