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

#include "allora/ripple.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "allora/error.hpp"

namespace allora {

namespace {

std::vector<double> apply(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
  return out;
}

Matrix effective(const LoraLayer& layer, double eta) {
  return layer.w() + eta * delta(layer);
}

}  // namespace

void LayeredModel::validate() const {
  if (layers.empty()) throw InvalidArgument("LayeredModel: no layers");
  if (!(eta >= 0.0)) throw InvalidArgument("LayeredModel: eta must be nonnegative");
  const std::size_t d = layers.front().n_in();
  for (const auto& l : layers) {
    if (l.n_in() != d || l.n_out() != d) {
      throw DimensionMismatch("LayeredModel: layer is " + l.w().shape() + ", expected " +
                              std::to_string(d) + "x" + std::to_string(d));
    }
  }
}

std::vector<double> forward_layered(const LayeredModel& model, const std::vector<double>& x) {
  model.validate();
  if (x.size() != model.dim()) {
    throw DimensionMismatch("forward_layered: input has " + std::to_string(x.size()) +
                            " entries, model width is " + std::to_string(model.dim()));
  }
  std::vector<double> h = x;
  for (const auto& layer : model.layers) h = apply(effective(layer, model.eta), h);
  return h;
}

RippleBound ripple_bound(const LayeredModel& model, const std::vector<double>& x) {
  const std::vector<double> out = forward_layered(model, x);
  RippleBound b;
  b.lhs = norm2(out);
  const double x_norm = norm2(x);
  double product = 1.0;
  double constant = 1.0;
  double ratio_sum = 0.0;
  for (const auto& layer : model.layers) {
    const double w_norm = spectral_norm(layer.w());
    const double d_norm = spectral_norm(delta(layer));
    product *= w_norm + model.eta * d_norm;
    constant *= w_norm;
    ratio_sum += w_norm > 0.0 ? d_norm / w_norm : 0.0;
  }
  const double depth = static_cast<double>(model.layers.size());
  b.rhs = product * x_norm;
  b.constant = constant;
  b.mean_ratio = ratio_sum / depth;
  b.mean_form = constant * std::pow(1.0 + model.eta * b.mean_ratio, depth) * x_norm;
  return b;
}

Matrix random_orthogonal(std::size_t d, CounterRng& rng) {
  Matrix q(d, d);
  for (std::size_t attempt = 0;; ++attempt) {
    for (double& v : q.data()) v = rng.normal();
    bool ok = true;
    // Modified Gram-Schmidt on rows.
    for (std::size_t i = 0; i < d && ok; ++i) {
      auto qi = q.row(i);
      for (std::size_t k = 0; k < i; ++k) {
        const double p = dot(qi, q.row(k));
        auto qk = q.row(k);
        for (std::size_t j = 0; j < d; ++j) qi[j] -= p * qk[j];
      }
      const double n = norm2(qi);
      if (n < 1e-8) {
        ok = false;
        break;
      }
      for (double& v : qi) v /= n;
    }
    if (ok) return q;
    if (attempt > 16) throw NoConvergence("random_orthogonal: degenerate draws");
  }
}

AlignedCase aligned_worst_case(std::size_t d, std::size_t layers, double eta,
                               std::uint64_t seed) {
  if (d == 0 || layers == 0) throw InvalidArgument("aligned_worst_case: d and L must be positive");
  if (!(eta >= 0.0)) throw InvalidArgument("aligned_worst_case: eta must be nonnegative");
  CounterRng rng(seed);
  AlignedCase c;
  c.model.eta = eta;
  c.x.resize(d);
  for (double& v : c.x) v = rng.normal();
  std::vector<double> h = c.x;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix w = random_orthogonal(d, rng);
    const double hn = norm2(h);
    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = h[j] / hn;
    const std::vector<double> u = apply(w, v);
    Matrix a(1, d);
    Matrix b(d, 1);
    for (std::size_t j = 0; j < d; ++j) {
      a(0, j) = v[j];
      b(j, 0) = u[j];
    }
    LoraLayer layer(std::move(w), std::move(a), std::move(b), 1.0);
    h = apply(effective(layer, eta), h);
    c.model.layers.push_back(std::move(layer));
  }
  return c;
}

LayeredModel random_layered_model(std::size_t d, std::size_t layers, std::size_t rank,
                                  double eta, CounterRng& rng) {
  LayeredModel m;
  m.eta = eta;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix w(d, d), a(rank, d), b(d, rank);
    for (double& v : w.data()) v = sd * rng.normal();
    for (double& v : a.data()) v = sd * rng.normal();
    for (double& v : b.data()) v = sd * rng.normal();
    m.layers.emplace_back(std::move(w), std::move(a), std::move(b), 1.0);
  }
  return m;
}

StudyResult ripple_growth_study(std::size_t d, std::size_t max_layers, double eta,
                                std::uint64_t seed) {
  if (max_layers < 2) throw InvalidArgument("ripple_growth_study: need at least two layers");
  StudyResult table("ripple", {"L", "log_growth", "growth_ratio", "bound_ratio", "mbar"});
  const AlignedCase full = aligned_worst_case(d, max_layers, eta, seed);
  const double x_norm = norm2(full.x);
  for (std::size_t depth = 1; depth <= max_layers; ++depth) {
    LayeredModel prefix;
    prefix.eta = eta;
    prefix.layers.assign(full.model.layers.begin(), full.model.layers.begin() + depth);
    const RippleBound b = ripple_bound(prefix, full.x);
    const double log_growth = std::log(b.lhs / x_norm) / static_cast<double>(depth);
    table.add_row({static_cast<std::int64_t>(depth), log_growth, std::exp(log_growth),
                   b.rhs / b.lhs, b.mean_ratio});
  }
  return table;
}

}  // namespace allora
