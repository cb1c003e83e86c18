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

#ifndef ALLORA_ADAPTERS_HPP_
#define ALLORA_ADAPTERS_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "allora/linalg.hpp"
#include "allora/lora.hpp"

namespace allora {

enum class AdaptorVariant {
  kPlain,
  kDropout,
  kAllora,
  kAlloraDropout,
  kAlloraOutputDependent,
  kAdaptiveScaling,
};

/// CLI spelling: plain, dropout, allora, allora-d, allora-od, asf.
std::string_view to_string(AdaptorVariant v);
AdaptorVariant parse_adaptor(std::string_view name);

/// Output/gradient adaptor selection. `eta` is the maximum of the adaptive
/// factor (unused by kPlain and kDropout, whose scaling lives in the layer's
/// alpha / rank); `keep_prob` only applies to the dropout variants.
struct AdaptorKind {
  AdaptorVariant variant = AdaptorVariant::kPlain;
  double eta = 1.0;
  double keep_prob = 1.0;

  bool uses_mask() const noexcept {
    return variant == AdaptorVariant::kDropout || variant == AdaptorVariant::kAlloraDropout;
  }
  /// Throws InvalidArgument on eta ≤ 0, keep outside (0, 1], or keep ≠ 1 for
  /// a variant without dropout.
  void validate() const;
};

/// 1/√(x + 1/η²): equals η at x = 0 and decreases strictly in x.
double adaptive_factor(double x, double eta);

struct BackwardResult {
  Matrix grad_a;
  Matrix grad_b;
  Matrix grad_input;
};

/// Exact gradients of forward(layer, x) for dL/d(output) = upstream.
BackwardResult plain_backward(const LoraLayer& layer, const Matrix& x, const Matrix& upstream);

/// Factor per output row i: adaptive_factor(‖(BA)_{i,:}‖₂, η).
std::vector<double> allora_factors(const LoraLayer& layer, double eta);

/// Upstream column i is multiplied by allora_factors()[i] before forming the
/// A and B gradients; grad_input is left unscaled.
BackwardResult allora_backward(const LoraLayer& layer, const Matrix& x,
                               const Matrix& upstream, double eta);

/// Factor per output unit i: adaptive_factor(mean_n |f(x)_{n,i}|, η), with f
/// the low-rank branch output over the batch.
std::vector<double> allora_od_factors(const LoraLayer& layer, const Matrix& x, double eta);

BackwardResult allora_od_backward(const LoraLayer& layer, const Matrix& x,
                                  const Matrix& upstream, double eta);

/// Shared scaling path of the ALLoRA family: gradients of A and B from
/// upstream ⊙ factors (per output column), optional bottleneck mask,
/// unscaled grad_input.
BackwardResult scaled_backward(const LoraLayer& layer, const Matrix& x,
                               const Matrix& upstream, std::span<const double> factors,
                               const Matrix* mask);

/// Element-wise adaptive scaling of the branch, f ↦ f/√(|f| + 1/η²), with the
/// base path x·Wᵀ added unscaled.
Matrix asf_forward(const LoraLayer& layer, const Matrix& x, double eta);
/// True gradient of asf_forward, including grad_input.
BackwardResult asf_backward(const LoraLayer& layer, const Matrix& x, const Matrix& upstream,
                            double eta);

/// Bottleneck dropout: x·Wᵀ + η·((x·Aᵀ)⊙mask)·Bᵀ with mask batch × r.
Matrix dropout_forward(const LoraLayer& layer, const Matrix& x, const Matrix& mask);
BackwardResult dropout_backward(const LoraLayer& layer, const Matrix& x,
                                const Matrix& upstream, const Matrix& mask);
/// ALLoRA+D: masked bottleneck, then the ALLoRA row factors.
BackwardResult allora_dropout_backward(const LoraLayer& layer, const Matrix& x,
                                       const Matrix& upstream, const Matrix& mask,
                                       double eta);

/// Dispatch on the variant. `mask` is required in training mode for the
/// dropout variants; passing nullptr selects evaluation mode (no mask).
Matrix adaptor_forward(const AdaptorKind& kind, const LoraLayer& layer, const Matrix& x,
                       const Matrix* mask);
BackwardResult adaptor_backward(const AdaptorKind& kind, const LoraLayer& layer,
                                const Matrix& x, const Matrix& upstream, const Matrix* mask);

}  // namespace allora

#endif  // ALLORA_ADAPTERS_HPP_
