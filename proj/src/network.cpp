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

#include "allora/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "allora/error.hpp"
#include "allora/rng.hpp"

namespace allora {

std::string_view to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

std::string_view to_string(LossKind l) {
  return l == LossKind::kSquaredError ? "squared_error" : "softmax_cross_entropy";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

LossKind parse_loss(std::string_view name) {
  if (name == "squared_error") return LossKind::kSquaredError;
  if (name == "softmax_cross_entropy") return LossKind::kSoftmaxCrossEntropy;
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

Network Network::create(std::size_t n_in, const ModelSpec& spec, std::uint64_t seed) {
  if (n_in == 0 || spec.widths.empty()) {
    throw InvalidArgument("Network::create: need a positive input width and at least one layer");
  }
  CounterRng root(seed);
  std::vector<LoraLayer> layers;
  std::size_t fan_in = n_in;
  for (std::size_t l = 0; l < spec.widths.size(); ++l) {
    const std::size_t fan_out = spec.widths[l];
    if (fan_out == 0) throw InvalidArgument("Network::create: zero layer width");
    CounterRng rng = root.split(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    layers.push_back(LoraLayer::init(std::move(w), 1, 1.0, 1.0, mix64(seed ^ (l + 1))));
    fan_in = fan_out;
  }
  return Network(std::move(layers), spec.activation);
}

Network::Network(std::vector<LoraLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw InvalidArgument("Network: no layers");
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].n_in() != layers_[l - 1].n_out()) {
      throw DimensionMismatch("Network: layer " + std::to_string(l) + " expects " +
                              std::to_string(layers_[l].n_in()) + " inputs but layer " +
                              std::to_string(l - 1) + " emits " +
                              std::to_string(layers_[l - 1].n_out()));
    }
  }
}

void Network::attach_adapters(std::size_t rank, double alpha, OutputMode mode,
                              std::uint64_t seed) {
  CounterRng root(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LoraLayer& old = layers_[l];
    const std::size_t r = std::min({rank, old.n_out(), old.n_in()});
    // Alpha is scaled with a capped rank so η = alpha / rank is preserved.
    const double a = alpha * static_cast<double>(r) / static_cast<double>(rank);
    LoraLayer fresh = LoraLayer::init(old.w(), r, a, 1.0, root.split(l).next_u64());
    fresh.set_output_mode(mode);
    layers_[l] = std::move(fresh);
  }
}

namespace {

void apply_activation(Activation act, Matrix& m) {
  if (act == Activation::kRelu) {
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
  }
}

void apply_activation_grad(Activation act, const Matrix& pre, Matrix& grad) {
  if (act == Activation::kRelu) {
    auto p = pre.data();
    auto g = grad.data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(p[i] > 0.0)) g[i] = 0.0;
  }
}

}  // namespace

Matrix network_forward(const Network& net, const AdaptorKind& kind, const Matrix& x,
                       const std::vector<Matrix>* masks, ForwardCache* cache) {
  const auto& layers = net.layers();
  if (masks && masks->size() != layers.size()) {
    throw DimensionMismatch("network_forward: " + std::to_string(masks->size()) +
                            " masks for " + std::to_string(layers.size()) + " layers");
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix* mask = masks ? &(*masks)[l] : nullptr;
    Matrix z = adaptor_forward(kind, layers[l], h, mask);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(z);
    }
    if (l + 1 < layers.size()) apply_activation(net.activation(), z);
    h = std::move(z);
  }
  return h;
}

LossAndGrad loss_and_grad(LossKind kind, const Matrix& output, const Matrix& y) {
  if (output.rows() != y.rows() || output.cols() != y.cols()) {
    throw DimensionMismatch("loss: output " + output.shape() + " vs target " + y.shape());
  }
  if (output.rows() == 0) throw InvalidArgument("loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(output.rows());
  LossAndGrad out;
  if (kind == LossKind::kSquaredError) {
    Matrix diff = output - y;
    out.loss = frobenius_norm_sq(diff) * inv_n;
    out.grad = (2.0 * inv_n) * diff;
    return out;
  }
  out.grad = Matrix(output.rows(), output.cols());
  double total = 0.0;
  for (std::size_t n = 0; n < output.rows(); ++n) {
    auto z = output.row(n);
    auto t = y.row(n);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom) + zmax;
    auto g = out.grad.row(n);
    double t_sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      total -= t[j] * (z[j] - log_denom);
      t_sum += t[j];
    }
    for (std::size_t j = 0; j < z.size(); ++j) {
      g[j] = (t_sum * std::exp(z[j] - log_denom) - t[j]) * inv_n;
    }
  }
  out.loss = total * inv_n;
  return out;
}

NetworkGradients network_backward(const Network& net, const AdaptorKind& kind,
                                  const ForwardCache& cache, const Matrix& upstream,
                                  const std::vector<Matrix>* masks, bool base_weights) {
  const auto& layers = net.layers();
  const std::size_t n_layers = layers.size();
  if (cache.inputs.size() != n_layers) {
    throw InvalidArgument("network_backward: forward cache does not match the network");
  }
  NetworkGradients g;
  g.grad_a.resize(n_layers);
  g.grad_b.resize(n_layers);
  if (base_weights) g.grad_w.resize(n_layers);
  Matrix grad = upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (l + 1 < n_layers) apply_activation_grad(net.activation(), cache.pre[l], grad);
    const Matrix* mask = masks ? &(*masks)[l] : nullptr;
    BackwardResult r = adaptor_backward(kind, layers[l], cache.inputs[l], grad, mask);
    if (base_weights) g.grad_w[l] = matmul_tn(grad, cache.inputs[l]);
    g.grad_a[l] = std::move(r.grad_a);
    g.grad_b[l] = std::move(r.grad_b);
    grad = std::move(r.grad_input);
  }
  return g;
}

double accuracy(const Matrix& output, const Matrix& y) {
  if (output.rows() != y.rows() || output.cols() != y.cols()) {
    throw DimensionMismatch("accuracy: output " + output.shape() + " vs target " + y.shape());
  }
  if (output.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t n = 0; n < output.rows(); ++n) {
    auto o = output.row(n);
    auto t = y.row(n);
    const auto po = std::max_element(o.begin(), o.end()) - o.begin();
    const auto pt = std::max_element(t.begin(), t.end()) - t.begin();
    if (po == pt) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(output.rows());
}

}  // namespace allora
