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

#include "allora/adapters.hpp"

#include <cmath>
#include <string>

#include "allora/error.hpp"

namespace allora {

namespace {

void check_backward_shapes(const LoraLayer& layer, const Matrix& x, const Matrix& upstream) {
  if (x.cols() != layer.n_in()) {
    throw DimensionMismatch("backward: input " + x.shape() + " does not match n_in " +
                            std::to_string(layer.n_in()));
  }
  if (upstream.rows() != x.rows() || upstream.cols() != layer.n_out()) {
    throw DimensionMismatch("backward: upstream gradient " + upstream.shape() +
                            " does not match output " + std::to_string(x.rows()) + "x" +
                            std::to_string(layer.n_out()));
  }
}

void check_mask(const LoraLayer& layer, const Matrix& x, const Matrix& mask) {
  if (mask.rows() != x.rows() || mask.cols() != layer.rank()) {
    throw DimensionMismatch("dropout: mask " + mask.shape() + " does not match bottleneck " +
                            std::to_string(x.rows()) + "x" + std::to_string(layer.rank()));
  }
}

// dL/dH for H = x·Aᵀ given dL/d(branch output): η·(G·B), masked if needed.
Matrix bottleneck_grad(const LoraLayer& layer, const Matrix& branch_upstream,
                       const Matrix* mask) {
  Matrix d = layer.scaling() * matmul(branch_upstream, layer.b());
  return mask ? hadamard(d, *mask) : d;
}

// Gradient w.r.t. the layer input: G·W through the base path plus the
// bottleneck gradient pulled back through A.
Matrix input_gradient(const LoraLayer& layer, const Matrix& upstream,
                      const Matrix& branch_upstream, const Matrix* mask) {
  return matmul(upstream, layer.w()) +
         matmul(bottleneck_grad(layer, branch_upstream, mask), layer.a());
}

// A and B gradients for dL/d(branch output) = branch_upstream.
void weight_grads(const LoraLayer& layer, const Matrix& x, const Matrix& branch_upstream,
                  const Matrix* mask, BackwardResult& out) {
  Matrix h = matmul_nt(x, layer.a());
  if (mask) h = hadamard(h, *mask);
  out.grad_b = layer.scaling() * matmul_tn(branch_upstream, h);
  out.grad_a = matmul_tn(bottleneck_grad(layer, branch_upstream, mask), x);
}

double asf_value(double f, double c) { return f / std::sqrt(std::abs(f) + c); }

// d/df [f/√(|f| + c)] = (|f|/2 + c)/(|f| + c)^{3/2}; continuous at 0 where it
// equals c^{-1/2} = η.
double asf_slope(double f, double c) {
  const double m = std::abs(f);
  const double s = m + c;
  return (0.5 * m + c) / (s * std::sqrt(s));
}

}  // namespace

std::string_view to_string(AdaptorVariant v) {
  switch (v) {
    case AdaptorVariant::kPlain: return "plain";
    case AdaptorVariant::kDropout: return "dropout";
    case AdaptorVariant::kAllora: return "allora";
    case AdaptorVariant::kAlloraDropout: return "allora-d";
    case AdaptorVariant::kAlloraOutputDependent: return "allora-od";
    case AdaptorVariant::kAdaptiveScaling: return "asf";
  }
  return "unknown";
}

AdaptorVariant parse_adaptor(std::string_view name) {
  for (auto v : {AdaptorVariant::kPlain, AdaptorVariant::kDropout, AdaptorVariant::kAllora,
                 AdaptorVariant::kAlloraDropout, AdaptorVariant::kAlloraOutputDependent,
                 AdaptorVariant::kAdaptiveScaling}) {
    if (to_string(v) == name) return v;
  }
  throw InvalidArgument("unknown adaptor '" + std::string(name) + "'");
}

void AdaptorKind::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidArgument("adaptor: eta must be positive and finite");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw InvalidArgument("adaptor: keep probability must lie in (0, 1]");
  }
  if (!uses_mask() && keep_prob != 1.0) {
    throw InvalidArgument("adaptor: '" + std::string(to_string(variant)) +
                          "' does not use dropout, keep probability must be 1");
  }
}

double adaptive_factor(double x, double eta) {
  if (!(x >= 0.0)) throw InvalidArgument("adaptive_factor: argument must be nonnegative");
  if (!(eta > 0.0)) throw InvalidArgument("adaptive_factor: eta must be positive");
  return 1.0 / std::sqrt(x + 1.0 / (eta * eta));
}

BackwardResult plain_backward(const LoraLayer& layer, const Matrix& x,
                              const Matrix& upstream) {
  check_backward_shapes(layer, x, upstream);
  BackwardResult out;
  weight_grads(layer, x, upstream, nullptr, out);
  out.grad_input = input_gradient(layer, upstream, upstream, nullptr);
  return out;
}

std::vector<double> allora_factors(const LoraLayer& layer, double eta) {
  std::vector<double> f = row_norms(delta(layer));
  for (double& v : f) v = adaptive_factor(v, eta);
  return f;
}

BackwardResult scaled_backward(const LoraLayer& layer, const Matrix& x,
                               const Matrix& upstream, std::span<const double> factors,
                               const Matrix* mask) {
  check_backward_shapes(layer, x, upstream);
  if (mask) check_mask(layer, x, *mask);
  BackwardResult out;
  weight_grads(layer, x, scale_columns(upstream, factors), mask, out);
  out.grad_input = input_gradient(layer, upstream, upstream, mask);
  return out;
}

BackwardResult allora_backward(const LoraLayer& layer, const Matrix& x,
                               const Matrix& upstream, double eta) {
  const std::vector<double> f = allora_factors(layer, eta);
  return scaled_backward(layer, x, upstream, f, nullptr);
}

std::vector<double> allora_od_factors(const LoraLayer& layer, const Matrix& x, double eta) {
  const Matrix branch = lora_branch(layer, x);
  std::vector<double> mean_abs(branch.cols(), 0.0);
  for (std::size_t n = 0; n < branch.rows(); ++n) {
    auto r = branch.row(n);
    for (std::size_t i = 0; i < r.size(); ++i) mean_abs[i] += std::abs(r[i]);
  }
  const double inv_batch = 1.0 / static_cast<double>(branch.rows());
  for (double& v : mean_abs) v = adaptive_factor(v * inv_batch, eta);
  return mean_abs;
}

BackwardResult allora_od_backward(const LoraLayer& layer, const Matrix& x,
                                  const Matrix& upstream, double eta) {
  check_backward_shapes(layer, x, upstream);
  const std::vector<double> f = allora_od_factors(layer, x, eta);
  return scaled_backward(layer, x, upstream, f, nullptr);
}

Matrix asf_forward(const LoraLayer& layer, const Matrix& x, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("asf_forward: eta must be positive");
  const double c = 1.0 / (eta * eta);
  Matrix branch = lora_branch(layer, x);
  for (double& v : branch.data()) v = asf_value(v, c);
  return matmul_nt(x, layer.w()) + branch;
}

BackwardResult asf_backward(const LoraLayer& layer, const Matrix& x, const Matrix& upstream,
                            double eta) {
  check_backward_shapes(layer, x, upstream);
  if (!(eta > 0.0)) throw InvalidArgument("asf_backward: eta must be positive");
  const double c = 1.0 / (eta * eta);
  Matrix branch_upstream = lora_branch(layer, x);
  auto g = upstream.data();
  auto bu = branch_upstream.data();
  for (std::size_t i = 0; i < bu.size(); ++i) bu[i] = g[i] * asf_slope(bu[i], c);
  BackwardResult out;
  weight_grads(layer, x, branch_upstream, nullptr, out);
  out.grad_input = input_gradient(layer, upstream, branch_upstream, nullptr);
  return out;
}

Matrix dropout_forward(const LoraLayer& layer, const Matrix& x, const Matrix& mask) {
  if (x.cols() != layer.n_in()) {
    throw DimensionMismatch("dropout_forward: input " + x.shape() + " does not match n_in " +
                            std::to_string(layer.n_in()));
  }
  check_mask(layer, x, mask);
  const Matrix h = hadamard(matmul_nt(x, layer.a()), mask);
  return matmul_nt(x, layer.w()) + layer.scaling() * matmul_nt(h, layer.b());
}

BackwardResult dropout_backward(const LoraLayer& layer, const Matrix& x,
                                const Matrix& upstream, const Matrix& mask) {
  check_backward_shapes(layer, x, upstream);
  check_mask(layer, x, mask);
  BackwardResult out;
  weight_grads(layer, x, upstream, &mask, out);
  out.grad_input = input_gradient(layer, upstream, upstream, &mask);
  return out;
}

BackwardResult allora_dropout_backward(const LoraLayer& layer, const Matrix& x,
                                       const Matrix& upstream, const Matrix& mask,
                                       double eta) {
  const std::vector<double> f = allora_factors(layer, eta);
  return scaled_backward(layer, x, upstream, f, &mask);
}

Matrix adaptor_forward(const AdaptorKind& kind, const LoraLayer& layer, const Matrix& x,
                       const Matrix* mask) {
  switch (kind.variant) {
    case AdaptorVariant::kDropout:
    case AdaptorVariant::kAlloraDropout:
      return mask ? dropout_forward(layer, x, *mask) : forward(layer, x);
    case AdaptorVariant::kAdaptiveScaling:
      return asf_forward(layer, x, kind.eta);
    default:
      return forward(layer, x);
  }
}

BackwardResult adaptor_backward(const AdaptorKind& kind, const LoraLayer& layer,
                                const Matrix& x, const Matrix& upstream, const Matrix* mask) {
  switch (kind.variant) {
    case AdaptorVariant::kPlain:
      return plain_backward(layer, x, upstream);
    case AdaptorVariant::kDropout:
      return mask ? dropout_backward(layer, x, upstream, *mask)
                  : plain_backward(layer, x, upstream);
    case AdaptorVariant::kAllora:
      return allora_backward(layer, x, upstream, kind.eta);
    case AdaptorVariant::kAlloraDropout:
      return mask ? allora_dropout_backward(layer, x, upstream, *mask, kind.eta)
                  : allora_backward(layer, x, upstream, kind.eta);
    case AdaptorVariant::kAlloraOutputDependent:
      return allora_od_backward(layer, x, upstream, kind.eta);
    case AdaptorVariant::kAdaptiveScaling:
      return asf_backward(layer, x, upstream, kind.eta);
  }
  throw InvalidArgument("adaptor_backward: unknown variant");
}

}  // namespace allora
