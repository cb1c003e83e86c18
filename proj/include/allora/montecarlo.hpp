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

#ifndef ALLORA_MONTECARLO_HPP_
#define ALLORA_MONTECARLO_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "allora/dropout_analysis.hpp"
#include "allora/linalg.hpp"
#include "allora/network.hpp"
#include "allora/rng.hpp"
#include "allora/study.hpp"

// Stochastic counterparts of dropout_analysis. Matrices use the regression
// layout documented there (a: D×r, b: r×C, mask: N×r).

namespace allora {

/// Entries i.i.d. in {0, 1/keep}, P(1/keep) = keep, drawn row-major.
Matrix sample_mask(std::size_t rows, std::size_t cols, double keep, std::uint64_t seed);
Matrix sample_mask(std::size_t rows, std::size_t cols, double keep, CounterRng& rng);

/// ‖Y − XW − ((XA)⊙V)B‖²_F for one realised mask V.
double empirical_lora_loss(const Matrix& x, const Matrix& w, const Matrix& y, const Matrix& a,
                           const Matrix& b, const Matrix& mask);

/// Exact gradient of empirical_lora_loss w.r.t. a and b for a fixed mask.
LoraGradients grad_empirical_lora(const Matrix& x, const Matrix& w, const Matrix& y,
                                  const Matrix& a, const Matrix& b, const Matrix& mask);

struct DeviationStudy {
  std::vector<std::size_t> sample_counts;
  std::vector<double> mean_abs_deviation;
  std::vector<double> bound;  // std_estimate / √N
  double std_estimate = 0.0;
  double expected_loss = 0.0;
  double slope = 0.0;  // least-squares log-log slope of mean_abs_deviation
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

struct DeviationOptions {
  std::size_t trials = 200;
  std::size_t std_samples = 100000;
};

/// For each N, the trial-average of |(1/N)Σ_n L(V_n) − E[L]| with E[L] in
/// closed form, next to the bound Std[L]/√N (Std from `std_samples`
/// independent draws). Trial t, count index i uses stream split(1).split(t)
/// .split(i) of CounterRng(seed); the Std estimate uses split(0).
DeviationStudy deviation_study(const Matrix& x, const Matrix& w, const Matrix& y,
                               const Matrix& a, const Matrix& b, double keep,
                               const std::vector<std::size_t>& sample_counts,
                               std::uint64_t seed, const DeviationOptions& options = {});

StudyResult to_study(const DeviationStudy& s);

/// Analysis-layout regression instance (x N×D, w D×C, y N×C, a D×r, b r×C)
/// with standard normal entries, so the adapter term is generically nonzero.
struct LoraInstance {
  Matrix x, w, y, a, b;
};
LoraInstance random_lora_instance(std::uint64_t seed, std::size_t n = 16, std::size_t d = 6,
                                  std::size_t c = 3, std::size_t r = 2);

/// Least-squares slope of log(ys) against log(xs); nan if any y ≤ 0.
double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Linear-interpolated quantile (q ∈ [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct GradientVarianceResult {
  std::size_t layer = 0;
  Matrix mean_a, std_a;  // per entry; std uses the (R − 1) denominator
  Matrix mean_b, std_b;
  std::vector<double> quantile_levels;
  std::vector<double> std_quantiles;  // over all entries of std_a and std_b
  StudyResult table;
};

/// Flattened [grad_a | grad_b] of `layer` for `realizations` mask draws on
/// one fixed batch; realization j uses CounterRng(seed).split(j).
std::vector<std::vector<double>> collect_gradient_samples(const Network& net,
                                                          const Matrix& x, const Matrix& y,
                                                          LossKind loss, double keep,
                                                          std::size_t layer,
                                                          std::size_t realizations,
                                                          std::uint64_t seed);

/// Per-entry spread of the dropout gradient of one layer under many mask
/// realizations on a fixed batch (Welford accumulation).
GradientVarianceResult gradient_variance_study(const Network& net, const Matrix& x,
                                               const Matrix& y, LossKind loss, double keep,
                                               std::size_t layer, std::size_t realizations,
                                               std::uint64_t seed);

}  // namespace allora

#endif  // ALLORA_MONTECARLO_HPP_
