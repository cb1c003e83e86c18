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

#ifndef ALLORA_LINALG_HPP_
#define ALLORA_LINALG_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace allora {

/// Dense row-major matrix of doubles. Copyable value type; every free
/// function below is pure and returns a fresh matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  // Exact (bitwise for finite values) comparison.
  bool operator==(const Matrix& other) const = default;

  std::string shape() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b and a·bᵀ without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);
Matrix hadamard(const Matrix& a, const Matrix& b);
// Multiplies column j of m by factors[j].
Matrix scale_columns(const Matrix& m, std::span<const double> factors);
// Multiplies row i of m by factors[i].
Matrix scale_rows(const Matrix& m, std::span<const double> factors);

double frobenius_norm(const Matrix& m);
double frobenius_norm_sq(const Matrix& m);
double trace(const Matrix& m);
double max_abs(const Matrix& m);

/// Euclidean norm of each row.
std::vector<double> row_norms(const Matrix& m);
/// Squared Euclidean norm of each column.
std::vector<double> col_norms_sq(const Matrix& m);

/// Solves a·x = b by Gaussian elimination with partial pivoting. Throws
/// SingularMatrix when a pivot falls below 1e-12 times the largest entry of a.
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

/// argmin_W ‖Y − XW‖²_F + μ‖W‖²_F, i.e. (XᵀX + μI)⁻¹XᵀY.
Matrix ridge_solve(const Matrix& x, const Matrix& y, double mu);

/// Largest singular value by power iteration on mᵀm. Stops when the relative
/// change of the eigenvalue estimate drops under `tol`; throws NoConvergence
/// after `max_iter` iterations.
double spectral_norm(const Matrix& m, double tol = 1e-8, int max_iter = 10000);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

/// Cyclic Jacobi rotations; `m` must be square and symmetric.
SymmetricEigen symmetric_eigen(const Matrix& m, double tol = 1e-10);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

}  // namespace allora

#endif  // ALLORA_LINALG_HPP_
