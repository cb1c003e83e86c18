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

#ifndef ALLORA_DROPOUT_ANALYSIS_HPP_
#define ALLORA_DROPOUT_ANALYSIS_HPP_

#include <vector>

#include "allora/linalg.hpp"
#include "allora/lora.hpp"

// Closed-form expectations of dropout-regularised least-squares losses.
//
// Unless a LoraLayer is passed, matrices use the regression layout:
//   x: N×D inputs, y: N×C targets, w: D×C base weight,
//   a: D×r left factor, b: r×C right factor,
// and the stochastic loss is ‖Y − XW − ((XA)⊙V)B‖²_F with V i.i.d. in
// {0, 1/keep}, P(1/keep) = keep. The LoraLayer overloads transcribe a layer
// (W̃ = W + η·B·A acting as x·W̃ᵀ) into this layout: w ↦ Wᵀ, a ↦ Aᵀ,
// b ↦ η·Bᵀ.
//
// All gradients are exact derivatives of the returned totals, so they carry
// the factor 2 from differentiating squared norms.

namespace allora {

struct LossDecomposition {
  double blue = 0.0;    // dropout-free terms
  double orange = 0.0;  // dropout-induced regulariser, (1/keep − 1)·(…)
  double total = 0.0;
};

/// Throws InvalidArgument unless keep ∈ (0, 1].
void check_keep(double keep, const char* op);

/// E‖Y − (XW)⊙V‖²_F with V ∈ {0, 1/keep}^{N×C}.
LossDecomposition expected_ols_dropout_loss(const Matrix& x, const Matrix& w,
                                            const Matrix& y, double keep);

/// keep·(XᵀX)⁻¹XᵀY, the minimiser of expected_ols_dropout_loss.
Matrix ols_dropout_minimizer(const Matrix& x, const Matrix& y, double keep);

/// Gradient of expected_ols_dropout_loss(x, w, y, keep).total w.r.t. w.
Matrix grad_expected_ols_dropout(const Matrix& x, const Matrix& w, const Matrix& y,
                                 double keep);

LossDecomposition expected_lora_loss(const Matrix& x, const Matrix& w, const Matrix& y,
                                     const Matrix& a, const Matrix& b, double keep);

struct LoraGradients {
  Matrix grad_a;
  Matrix grad_b;
};

LoraGradients grad_expected_lora(const Matrix& x, const Matrix& w, const Matrix& y,
                                 const Matrix& a, const Matrix& b, double keep);

struct RegularizerGradients {
  Matrix grad_a;
  Matrix grad_b;
  // ‖B_{k,:}‖², the weight-decay strength on column k of A (before the
  // (1/keep − 1) coefficient and factor 2).
  std::vector<double> a_strength;
  // ‖(XA)_{:,k}‖², the weight-decay strength on row k of B.
  std::vector<double> b_strength;
};

/// Gradient of the orange term alone.
RegularizerGradients dropout_regularizer_grads(const Matrix& x, const Matrix& a,
                                               const Matrix& b, double keep);

// Layer-layout entry points. `y` is the N×n_out regression target of the
// layer output; gradients come back shaped like layer.a() and layer.b().
LossDecomposition expected_lora_loss(const LoraLayer& layer, const Matrix& x,
                                     const Matrix& y, double keep);
LoraGradients grad_expected_lora(const LoraLayer& layer, const Matrix& x, const Matrix& y,
                                 double keep);

}  // namespace allora

#endif  // ALLORA_DROPOUT_ANALYSIS_HPP_
