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

#ifndef ALLORA_LORA_HPP_
#define ALLORA_LORA_HPP_

#include <cstddef>
#include <cstdint>

#include "allora/linalg.hpp"

namespace allora {

// How the low-rank branch reaches the layer output.
enum class OutputMode {
  kLinear,           // y = x·Wᵀ + η·x·Aᵀ·Bᵀ
  kAdaptiveScaling,  // branch output passed through the ASF output adaptor
};

/// Frozen base weight plus a trainable low-rank pair.
///
/// Layout: w is n_out × n_in, a is r × n_in, b is n_out × r, so B·A has one
/// row per output unit and forward(x) = x·Wᵀ + η·x·Aᵀ·Bᵀ with η = alpha / r.
class LoraLayer {
 public:
  /// Zero B, A drawn i.i.d. uniform on ±1/√n_in from `seed`.
  static LoraLayer init(Matrix w, std::size_t rank, double alpha, double keep_prob,
                        std::uint64_t seed);

  LoraLayer(Matrix w, Matrix a, Matrix b, double alpha, double keep_prob = 1.0);

  const Matrix& w() const noexcept { return w_; }
  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  std::size_t n_out() const noexcept { return w_.rows(); }
  std::size_t n_in() const noexcept { return w_.cols(); }
  std::size_t rank() const noexcept { return a_.rows(); }
  double alpha() const noexcept { return alpha_; }
  double scaling() const noexcept { return alpha_ / static_cast<double>(rank()); }
  double keep_prob() const noexcept { return keep_prob_; }
  OutputMode output_mode() const noexcept { return mode_; }

  void set_output_mode(OutputMode mode) noexcept { mode_ = mode; }
  void set_a(Matrix a);
  void set_b(Matrix b);
  // Only pretraining touches the base weight.
  void set_w(Matrix w);

  /// a -= lr·grad_a, b -= lr·grad_b.
  void sgd_step(const Matrix& grad_a, const Matrix& grad_b, double lr);

 private:
  Matrix w_;
  Matrix a_;
  Matrix b_;
  double alpha_;
  double keep_prob_;
  OutputMode mode_ = OutputMode::kLinear;
};

/// x·Wᵀ + η·x·Aᵀ·Bᵀ; ignores the output mode (see asf_forward for ASF).
Matrix forward(const LoraLayer& layer, const Matrix& x);

/// Low-rank branch alone: η·x·Aᵀ·Bᵀ.
Matrix lora_branch(const LoraLayer& layer, const Matrix& x);

/// Unscaled B·A (n_out × n_in).
Matrix delta(const LoraLayer& layer);

/// W + η·B·A. Throws InvalidArgument for ASF layers, whose output adaptor is
/// not linear in B·A.
Matrix merge(const LoraLayer& layer);

}  // namespace allora

#endif  // ALLORA_LORA_HPP_
