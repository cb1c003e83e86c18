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

#include "allora/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "allora/error.hpp"
#include "allora/parallel.hpp"

namespace allora {

namespace {

// Draws losses L(V) without materialising V; consumes the stream in the same
// row-major order as sample_mask().
class LossSampler {
 public:
  LossSampler(const Matrix& x, const Matrix& w, const Matrix& y, const Matrix& a,
              const Matrix& b, double keep)
      : residual_(y - matmul(x, w)), xa_(matmul(x, a)), b_(b), keep_(keep),
        inv_keep_(1.0 / keep), scratch_(y.cols()) {}

  double sample(CounterRng& rng) {
    double loss = 0.0;
    for (std::size_t n = 0; n < residual_.rows(); ++n) {
      auto r = residual_.row(n);
      std::copy(r.begin(), r.end(), scratch_.begin());
      for (std::size_t k = 0; k < xa_.cols(); ++k) {
        if (!(rng.uniform() < keep_)) continue;
        const double coef = xa_(n, k) * inv_keep_;
        auto bk = b_.row(k);
        for (std::size_t c = 0; c < scratch_.size(); ++c) scratch_[c] -= coef * bk[c];
      }
      for (double v : scratch_) loss += v * v;
    }
    return loss;
  }

 private:
  Matrix residual_;
  Matrix xa_;
  Matrix b_;
  double keep_;
  double inv_keep_;
  std::vector<double> scratch_;
};

struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    count += 1.0;
    const double d = v - mean;
    mean += d / count;
    m2 += d * (v - mean);
  }
  // Chan et al. pairwise combination.
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double n = count + o.count;
    const double d = o.mean - mean;
    mean += d * o.count / n;
    m2 += o.m2 + d * d * count * o.count / n;
    count = n;
  }
};

void check_mc_shapes(const Matrix& x, const Matrix& w, const Matrix& y, const Matrix& a,
                     const Matrix& b, const Matrix& mask) {
  if (mask.rows() != x.rows() || mask.cols() != a.cols()) {
    throw DimensionMismatch("empirical_lora_loss: mask " + mask.shape() + " should be " +
                            std::to_string(x.rows()) + "x" + std::to_string(a.cols()));
  }
  if (x.cols() != w.rows() || w.cols() != y.cols() || x.rows() != y.rows() ||
      a.rows() != x.cols() || b.rows() != a.cols() || b.cols() != y.cols()) {
    throw DimensionMismatch("empirical_lora_loss: incompatible shapes X " + x.shape() +
                            ", W " + w.shape() + ", Y " + y.shape() + ", A " + a.shape() +
                            ", B " + b.shape());
  }
}

}  // namespace

Matrix sample_mask(std::size_t rows, std::size_t cols, double keep, CounterRng& rng) {
  check_keep(keep, "sample_mask");
  Matrix m(rows, cols);
  const double inv = 1.0 / keep;
  for (double& v : m.data()) v = rng.uniform() < keep ? inv : 0.0;
  return m;
}

Matrix sample_mask(std::size_t rows, std::size_t cols, double keep, std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_mask(rows, cols, keep, rng);
}

double empirical_lora_loss(const Matrix& x, const Matrix& w, const Matrix& y, const Matrix& a,
                           const Matrix& b, const Matrix& mask) {
  check_mc_shapes(x, w, y, a, b, mask);
  const Matrix masked = hadamard(matmul(x, a), mask);
  return frobenius_norm_sq(y - matmul(x, w) - matmul(masked, b));
}

LoraGradients grad_empirical_lora(const Matrix& x, const Matrix& w, const Matrix& y,
                                  const Matrix& a, const Matrix& b, const Matrix& mask) {
  check_mc_shapes(x, w, y, a, b, mask);
  const Matrix masked = hadamard(matmul(x, a), mask);
  const Matrix z = y - matmul(x, w) - matmul(masked, b);
  // ∇_B = −2((XA)⊙V)ᵀZ, ∇_A = −2Xᵀ((ZBᵀ)⊙V)
  Matrix grad_b = (-2.0) * matmul_tn(masked, z);
  Matrix grad_a = (-2.0) * matmul_tn(x, hadamard(matmul_nt(z, b), mask));
  return {std::move(grad_a), std::move(grad_b)};
}

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InvalidArgument("fit_loglog_slope: need two or more paired points");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

DeviationStudy deviation_study(const Matrix& x, const Matrix& w, const Matrix& y,
                               const Matrix& a, const Matrix& b, double keep,
                               const std::vector<std::size_t>& sample_counts,
                               std::uint64_t seed, const DeviationOptions& options) {
  check_keep(keep, "deviation_study");
  if (sample_counts.empty()) throw InvalidArgument("deviation_study: no sample counts");
  for (std::size_t i = 0; i < sample_counts.size(); ++i) {
    if (sample_counts[i] == 0 || (i > 0 && sample_counts[i] <= sample_counts[i - 1])) {
      throw InvalidArgument("deviation_study: sample counts must be positive and ascending");
    }
  }
  if (options.trials == 0) throw InvalidArgument("deviation_study: trials must be >= 1");
  if (options.std_samples < 2) throw InvalidArgument("deviation_study: std_samples must be >= 2");

  DeviationStudy out;
  out.sample_counts = sample_counts;
  out.trials = options.trials;
  out.seed = seed;
  out.expected_loss = expected_lora_loss(x, w, y, a, b, keep).total;
  const std::size_t n_counts = sample_counts.size();

  if (keep == 1.0) {
    // Every mask is all-ones: the loss is deterministic.
    out.mean_abs_deviation.assign(n_counts, 0.0);
    out.bound.assign(n_counts, 0.0);
    out.slope = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const CounterRng root(seed);
  const LossSampler prototype(x, w, y, a, b, keep);

  constexpr std::size_t kStdChunks = 16;
  std::vector<Moments> chunk_moments(kStdChunks);
  const CounterRng std_root = root.split(0);
  parallel_for(kStdChunks, [&](std::size_t c) {
    LossSampler sampler = prototype;
    CounterRng rng = std_root.split(c);
    const std::size_t begin = c * options.std_samples / kStdChunks;
    const std::size_t end = (c + 1) * options.std_samples / kStdChunks;
    for (std::size_t s = begin; s < end; ++s) chunk_moments[c].add(sampler.sample(rng));
  });
  Moments total;
  for (const auto& m : chunk_moments) total.merge(m);
  out.std_estimate = std::sqrt(total.m2 / (total.count - 1.0));

  std::vector<std::vector<double>> dev(n_counts, std::vector<double>(options.trials));
  const CounterRng trial_root = root.split(1);
  parallel_for(options.trials, [&](std::size_t t) {
    LossSampler sampler = prototype;
    const CounterRng trial_rng = trial_root.split(t);
    for (std::size_t i = 0; i < n_counts; ++i) {
      CounterRng rng = trial_rng.split(i);
      CompensatedSum sum;
      for (std::size_t n = 0; n < sample_counts[i]; ++n) sum.add(sampler.sample(rng));
      const double avg = sum.value() / static_cast<double>(sample_counts[i]);
      dev[i][t] = std::abs(avg - out.expected_loss);
    }
  });

  std::vector<double> counts_d;
  for (std::size_t i = 0; i < n_counts; ++i) {
    CompensatedSum sum;
    for (double d : dev[i]) sum.add(d);
    out.mean_abs_deviation.push_back(sum.value() / static_cast<double>(options.trials));
    out.bound.push_back(out.std_estimate / std::sqrt(static_cast<double>(sample_counts[i])));
    counts_d.push_back(static_cast<double>(sample_counts[i]));
  }
  out.slope = n_counts >= 2 ? fit_loglog_slope(counts_d, out.mean_abs_deviation)
                            : std::numeric_limits<double>::quiet_NaN();
  return out;
}

LoraInstance random_lora_instance(std::uint64_t seed, std::size_t n, std::size_t d,
                                  std::size_t c, std::size_t r) {
  if (n == 0 || d == 0 || c == 0 || r == 0) {
    throw InvalidArgument("random_lora_instance: sizes must be positive");
  }
  CounterRng rng(seed);
  auto gaussian = [&rng](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
  };
  LoraInstance in;
  in.x = gaussian(n, d);
  in.w = gaussian(d, c);
  in.y = gaussian(n, c);
  in.a = gaussian(d, r);
  in.b = gaussian(r, c);
  return in;
}

StudyResult to_study(const DeviationStudy& s) {
  StudyResult table("deviation", {"N", "mean_abs_dev", "bound"});
  for (std::size_t i = 0; i < s.sample_counts.size(); ++i) {
    table.add_row({static_cast<std::int64_t>(s.sample_counts[i]), s.mean_abs_deviation[i],
                   s.bound[i]});
  }
  table.add_footer("slope", format_double(s.slope));
  return table;
}

std::vector<std::vector<double>> collect_gradient_samples(const Network& net,
                                                          const Matrix& x, const Matrix& y,
                                                          LossKind loss, double keep,
                                                          std::size_t layer,
                                                          std::size_t realizations,
                                                          std::uint64_t seed) {
  check_keep(keep, "gradient_variance_study");
  if (layer >= net.layers().size()) {
    throw InvalidArgument("gradient_variance_study: layer " + std::to_string(layer) +
                          " out of range");
  }
  const AdaptorKind kind{AdaptorVariant::kDropout, 1.0, keep};
  const CounterRng root(seed);
  std::vector<std::vector<double>> samples(realizations);
  parallel_for(realizations, [&](std::size_t j) {
    CounterRng rng = root.split(j);
    std::vector<Matrix> masks;
    for (const auto& l : net.layers()) masks.push_back(sample_mask(x.rows(), l.rank(), keep, rng));
    ForwardCache cache;
    const Matrix out = network_forward(net, kind, x, &masks, &cache);
    const LossAndGrad lg = loss_and_grad(loss, out, y);
    const NetworkGradients g = network_backward(net, kind, cache, lg.grad, &masks, false);
    auto& s = samples[j];
    s.assign(g.grad_a[layer].data().begin(), g.grad_a[layer].data().end());
    s.insert(s.end(), g.grad_b[layer].data().begin(), g.grad_b[layer].data().end());
  });
  return samples;
}

GradientVarianceResult gradient_variance_study(const Network& net, const Matrix& x,
                                               const Matrix& y, LossKind loss, double keep,
                                               std::size_t layer, std::size_t realizations,
                                               std::uint64_t seed) {
  if (realizations < 2) {
    throw InvalidArgument("gradient_variance_study: need at least two realizations");
  }
  const auto samples =
      collect_gradient_samples(net, x, y, loss, keep, layer, realizations, seed);
  const LoraLayer& probe = net.layers()[layer];
  const std::size_t n_a = probe.a().size();
  const std::size_t n_entries = samples.front().size();

  std::vector<Moments> moments(n_entries);
  for (const auto& s : samples)
    for (std::size_t e = 0; e < n_entries; ++e) moments[e].add(s[e]);

  GradientVarianceResult r;
  r.layer = layer;
  r.mean_a = Matrix(probe.a().rows(), probe.a().cols());
  r.std_a = r.mean_a;
  r.mean_b = Matrix(probe.b().rows(), probe.b().cols());
  r.std_b = r.mean_b;
  std::vector<double> all_std(n_entries);
  for (std::size_t e = 0; e < n_entries; ++e) {
    const double sd = std::sqrt(moments[e].m2 / (moments[e].count - 1.0));
    all_std[e] = sd;
    if (e < n_a) {
      r.mean_a.data()[e] = moments[e].mean;
      r.std_a.data()[e] = sd;
    } else {
      r.mean_b.data()[e - n_a] = moments[e].mean;
      r.std_b.data()[e - n_a] = sd;
    }
  }
  r.quantile_levels = {0.5, 0.9, 0.99, 1.0};
  r.table = StudyResult("gradient_variance", {"quantile", "std"});
  for (double q : r.quantile_levels) {
    r.std_quantiles.push_back(quantile(all_std, q));
    r.table.add_row({q, r.std_quantiles.back()});
  }
  r.table.add_footer("layer", std::to_string(layer));
  r.table.add_footer("realizations", std::to_string(realizations));
  return r;
}

}  // namespace allora
