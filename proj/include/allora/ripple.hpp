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

#ifndef ALLORA_RIPPLE_HPP_
#define ALLORA_RIPPLE_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "allora/lora.hpp"
#include "allora/rng.hpp"
#include "allora/study.hpp"

namespace allora {

/// Stack of square LoRA-perturbed linear maps sharing one scaling factor:
/// f_L(x) = (W_L + η·B_L·A_L)···(W_1 + η·B_1·A_1)·x. The layers' own
/// alpha is ignored in favour of `eta`.
struct LayeredModel {
  std::vector<LoraLayer> layers;
  double eta = 1.0;

  std::size_t dim() const { return layers.front().n_in(); }
  /// Throws unless there is at least one layer and all are d×d.
  void validate() const;
};

std::vector<double> forward_layered(const LayeredModel& model, const std::vector<double>& x);

struct RippleBound {
  double lhs = 0.0;           // ‖f_L(x)‖₂
  double rhs = 0.0;           // Π_l (‖W_l‖ + η‖B_lA_l‖) · ‖x‖
  double constant = 0.0;      // C = Π_l ‖W_l‖
  double mean_ratio = 0.0;    // m̄ = mean_l ‖B_lA_l‖ / ‖W_l‖
  double mean_form = 0.0;     // C·(1 + η·m̄)^L·‖x‖ ≥ rhs
};

/// Spectral norms by power iteration (tol 1e-8).
RippleBound ripple_bound(const LayeredModel& model, const std::vector<double>& x);

/// Orthogonal W_l with rank-1 B_lA_l = u_l·v_lᵀ aligned to the incoming
/// activation, v_l = f_{l−1}(x)/‖f_{l−1}(x)‖ and u_l = W_l·v_l, so every
/// inequality in the product bound is an equality: ‖f_L(x)‖ = (1+η)^L‖x‖.
struct AlignedCase {
  LayeredModel model;
  std::vector<double> x;
};
AlignedCase aligned_worst_case(std::size_t d, std::size_t layers, double eta,
                               std::uint64_t seed);

/// Random d×d Gaussian W_l (entries N(0, 1/d)) and rank-`rank` factors with
/// entries N(0, 1/d).
LayeredModel random_layered_model(std::size_t d, std::size_t layers, std::size_t rank,
                                  double eta, CounterRng& rng);

/// Random orthogonal d×d matrix (Gram-Schmidt on a Gaussian matrix).
Matrix random_orthogonal(std::size_t d, CounterRng& rng);

/// Worst-case growth per depth L = 1..L_max: columns L, log_growth (log of
/// ‖f_L‖/‖x‖ divided by L), growth_ratio (its exponential), bound_ratio
/// (rhs/lhs), mbar.
StudyResult ripple_growth_study(std::size_t d, std::size_t max_layers, double eta,
                                std::uint64_t seed);

}  // namespace allora

#endif  // ALLORA_RIPPLE_HPP_
