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

// Reference implementations for tests. Written against plain nested
// vectors and std::mt19937_64 so they share no arithmetic with the library.

#ifndef ALLORA_TESTS_SUPPORT_ORACLES_HPP_
#define ALLORA_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "allora/linalg.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const allora::Matrix& m) {
  Dense d(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

inline allora::Matrix from_dense(const Dense& d) {
  allora::Matrix m(d.size(), d.empty() ? 0 : d[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = d[i][j];
  return m;
}

inline Dense matmul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Dense c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < k; ++t) c[i][j] += a[i][t] * b[t][j];
  return c;
}

inline Dense transpose(const Dense& a) {
  Dense t(a.empty() ? 0 : a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

// Gauss-Jordan with full row scan for the pivot.
inline Dense inverse(Dense a) {
  const std::size_t n = a.size();
  Dense inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-14) throw std::runtime_error("oracle inverse: singular");
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : gen_(seed) {}
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
  allora::Matrix matrix(std::size_t r, std::size_t c) {
    allora::Matrix m(r, c);
    for (double& v : m.data()) v = normal();
    return m;
  }
  allora::Matrix integer_matrix(std::size_t r, std::size_t c, int lo, int hi) {
    allora::Matrix m(r, c);
    for (double& v : m.data())
      v = static_cast<double>(std::uniform_int_distribution<int>(lo, hi)(gen_));
    return m;
  }

 private:
  std::mt19937_64 gen_;
};

// Probability-weighted sum of f over all {0, 1/keep} masks of the shape.
inline double mask_expectation(std::size_t rows, std::size_t cols, double keep,
                               const std::function<double(const allora::Matrix&)>& f) {
  const std::size_t n = rows * cols;
  if (n > 22) throw std::runtime_error("mask_expectation: too many entries");
  double total = 0.0;
  allora::Matrix mask(rows, cols);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    double w = 1.0;
    for (std::size_t e = 0; e < n; ++e) {
      const bool on = (bits >> e) & 1U;
      mask.data()[e] = on ? 1.0 / keep : 0.0;
      w *= on ? keep : 1.0 - keep;
    }
    total += w * f(mask);
  }
  return total;
}

// Same, for matrix-valued f.
inline allora::Matrix mask_expectation_matrix(
    std::size_t rows, std::size_t cols, double keep,
    const std::function<allora::Matrix(const allora::Matrix&)>& f) {
  const std::size_t n = rows * cols;
  allora::Matrix total;
  allora::Matrix mask(rows, cols);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    double w = 1.0;
    for (std::size_t e = 0; e < n; ++e) {
      const bool on = (bits >> e) & 1U;
      mask.data()[e] = on ? 1.0 / keep : 0.0;
      w *= on ? keep : 1.0 - keep;
    }
    allora::Matrix v = f(mask);
    if (total.data().empty()) total = allora::Matrix(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.data().size(); ++i) total.data()[i] += w * v.data()[i];
  }
  return total;
}

inline allora::Matrix central_difference(allora::Matrix at,
                                         const std::function<double(const allora::Matrix&)>& f,
                                         double h = 1e-5) {
  allora::Matrix g(at.rows(), at.cols());
  for (std::size_t i = 0; i < at.data().size(); ++i) {
    const double orig = at.data()[i];
    at.data()[i] = orig + h;
    const double up = f(at);
    at.data()[i] = orig - h;
    const double down = f(at);
    at.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Per-entry relative error with a unit floor on the magnitude.
inline double max_rel_err(const allora::Matrix& a, const allora::Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double e = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    e = std::max(e, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1.0}));
  }
  return e;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Sample variance by the two-pass formula, (n − 1) denominator.
inline double two_pass_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace oracle

#endif  // ALLORA_TESTS_SUPPORT_ORACLES_HPP_
