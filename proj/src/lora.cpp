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

#include "allora/lora.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "allora/error.hpp"
#include "allora/rng.hpp"

namespace allora {

namespace {

void validate(const Matrix& w, const Matrix& a, const Matrix& b, double alpha,
              double keep_prob) {
  if (w.empty()) throw InvalidArgument("LoraLayer: base weight is empty");
  const std::size_t r = a.rows();
  if (r == 0 || r > std::min(w.rows(), w.cols())) {
    throw InvalidArgument("LoraLayer: rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(std::min(w.rows(), w.cols())) + "]");
  }
  if (a.cols() != w.cols()) {
    throw DimensionMismatch("LoraLayer: A is " + a.shape() + " but W is " + w.shape());
  }
  if (b.rows() != w.rows() || b.cols() != r) {
    throw DimensionMismatch("LoraLayer: B is " + b.shape() + ", expected " +
                            std::to_string(w.rows()) + "x" + std::to_string(r));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("LoraLayer: alpha must be positive and finite");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw InvalidArgument("LoraLayer: keep_prob must lie in (0, 1]");
  }
}

}  // namespace

LoraLayer LoraLayer::init(Matrix w, std::size_t rank, double alpha, double keep_prob,
                          std::uint64_t seed) {
  if (w.empty()) throw InvalidArgument("LoraLayer::init: base weight is empty");
  if (rank == 0 || rank > std::min(w.rows(), w.cols())) {
    throw InvalidArgument("LoraLayer::init: rank " + std::to_string(rank) +
                          " outside [1, " + std::to_string(std::min(w.rows(), w.cols())) +
                          "]");
  }
  const std::size_t n_in = w.cols();
  const std::size_t n_out = w.rows();
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
  CounterRng rng(seed);
  Matrix a(rank, n_in);
  for (double& v : a.data()) v = rng.uniform(-bound, bound);
  return LoraLayer(std::move(w), std::move(a), Matrix(n_out, rank), alpha, keep_prob);
}

LoraLayer::LoraLayer(Matrix w, Matrix a, Matrix b, double alpha, double keep_prob)
    : w_(std::move(w)), a_(std::move(a)), b_(std::move(b)), alpha_(alpha),
      keep_prob_(keep_prob) {
  validate(w_, a_, b_, alpha_, keep_prob_);
}

void LoraLayer::set_a(Matrix a) {
  if (a.rows() != a_.rows() || a.cols() != a_.cols()) {
    throw DimensionMismatch("LoraLayer::set_a: got " + a.shape() + ", expected " + a_.shape());
  }
  a_ = std::move(a);
}

void LoraLayer::set_b(Matrix b) {
  if (b.rows() != b_.rows() || b.cols() != b_.cols()) {
    throw DimensionMismatch("LoraLayer::set_b: got " + b.shape() + ", expected " + b_.shape());
  }
  b_ = std::move(b);
}

void LoraLayer::set_w(Matrix w) {
  if (w.rows() != w_.rows() || w.cols() != w_.cols()) {
    throw DimensionMismatch("LoraLayer::set_w: got " + w.shape() + ", expected " + w_.shape());
  }
  w_ = std::move(w);
}

void LoraLayer::sgd_step(const Matrix& grad_a, const Matrix& grad_b, double lr) {
  if (grad_a.rows() != a_.rows() || grad_a.cols() != a_.cols() ||
      grad_b.rows() != b_.rows() || grad_b.cols() != b_.cols()) {
    throw DimensionMismatch("LoraLayer::sgd_step: gradients " + grad_a.shape() + ", " +
                            grad_b.shape() + " do not match A " + a_.shape() + ", B " +
                            b_.shape());
  }
  auto ad = a_.data();
  auto ga = grad_a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] -= lr * ga[i];
  auto bd = b_.data();
  auto gb = grad_b.data();
  for (std::size_t i = 0; i < bd.size(); ++i) bd[i] -= lr * gb[i];
}

Matrix lora_branch(const LoraLayer& layer, const Matrix& x) {
  if (x.cols() != layer.n_in()) {
    throw DimensionMismatch("forward: input " + x.shape() + " does not match n_in " +
                            std::to_string(layer.n_in()));
  }
  return layer.scaling() * matmul_nt(matmul_nt(x, layer.a()), layer.b());
}

Matrix forward(const LoraLayer& layer, const Matrix& x) {
  Matrix branch = lora_branch(layer, x);
  return matmul_nt(x, layer.w()) + branch;
}

Matrix delta(const LoraLayer& layer) { return matmul(layer.b(), layer.a()); }

Matrix merge(const LoraLayer& layer) {
  if (layer.output_mode() == OutputMode::kAdaptiveScaling) {
    throw InvalidArgument("merge: an ASF layer cannot merge BA back into W");
  }
  return layer.w() + layer.scaling() * delta(layer);
}

}  // namespace allora
