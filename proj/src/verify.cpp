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

#include "allora/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "allora/adapters.hpp"
#include "allora/data_io.hpp"
#include "allora/dropout_analysis.hpp"
#include "allora/error.hpp"
#include "allora/linalg.hpp"
#include "allora/lora.hpp"
#include "allora/montecarlo.hpp"
#include "allora/ripple.hpp"
#include "allora/rng.hpp"

namespace allora {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kKeeps[] = {0.3, 0.5, 0.8};

// Error relative to the larger magnitude, floored at 1 so near-zero
// entries are judged absolutely.
double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

double max_rel_err(const Matrix& a, const Matrix& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    e = std::max(e, rel_err(a.data()[i], b.data()[i]));
  }
  return e;
}

// Strictly relative, for quantities that are never near zero.
double strict_rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Matrix gaussian(std::size_t r, std::size_t c, CounterRng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

class Harness {
 public:
  explicit Harness(const VerifyOptions& o) : opts_(o) {}

  // Perturbs a library result when this check is the fault target.
  void inject(const std::string& name, Matrix& m) const {
    if (opts_.fault == name && !m.data().empty()) m.data()[0] += 1e-3 * (1.0 + std::abs(m.data()[0]));
  }
  void inject(const std::string& name, double& v) const {
    if (opts_.fault == name) v += 1e-3 * (1.0 + std::abs(v));
  }

  void record(std::vector<CheckResult>& out, std::string module, std::string name,
              double observed, double expected, double tolerance, bool pass,
              std::string detail) const {
    out.push_back({std::move(module), std::move(name), pass, observed, expected, tolerance,
                   std::move(detail)});
  }

  CounterRng rng(std::uint64_t check_id) const { return CounterRng(opts_.seed).split(check_id); }

 private:
  const VerifyOptions& opts_;
};

// Probability-weighted sum of f(mask) over every {0, 1/keep} mask.
double enumerate_masks(std::size_t rows, std::size_t cols, double keep,
                       const std::function<double(const Matrix&)>& f) {
  const std::size_t n = rows * cols;
  if (n > 20) throw InvalidArgument("enumerate_masks: too many mask entries");
  double total = 0.0;
  Matrix mask(rows, cols);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    double weight = 1.0;
    for (std::size_t e = 0; e < n; ++e) {
      const bool on = (bits >> e) & 1U;
      mask.data()[e] = on ? 1.0 / keep : 0.0;
      weight *= on ? keep : 1.0 - keep;
    }
    total += weight * f(mask);
  }
  return total;
}

Matrix central_difference(Matrix at, const std::function<double(const Matrix&)>& f) {
  Matrix g(at.rows(), at.cols());
  for (std::size_t i = 0; i < at.data().size(); ++i) {
    const double orig = at.data()[i];
    at.data()[i] = orig + kFdStep;
    const double up = f(at);
    at.data()[i] = orig - kFdStep;
    const double down = f(at);
    at.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * kFdStep);
  }
  return g;
}

struct AnalysisInstance {
  Matrix x, w, y, a, b;
  double keep;
};

AnalysisInstance analysis_instance(CounterRng& rng, std::size_t n, std::size_t d,
                                   std::size_t c, std::size_t r, double keep) {
  return {gaussian(n, d, rng), gaussian(d, c, rng), gaussian(n, c, rng), gaussian(d, r, rng),
          gaussian(r, c, rng), keep};
}

LoraLayer random_layer(CounterRng& rng, std::size_t n_out, std::size_t n_in, std::size_t r,
                       double alpha, bool zero_b) {
  Matrix b = zero_b ? Matrix(n_out, r) : gaussian(n_out, r, rng);
  return LoraLayer(gaussian(n_out, n_in, rng), gaussian(r, n_in, rng), std::move(b), alpha);
}

// ---------------------------------------------------------------- dropout

void check_lora_enumeration(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(1);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(3);      // 2..4
    const std::size_t r = 1 + rng.below(16 / n);  // N·r ≤ 16
    const std::size_t r_eff = std::min<std::size_t>(r, 4);
    const AnalysisInstance in = analysis_instance(rng, n, 4, 3, r_eff, kKeeps[t % 3]);
    double closed = expected_lora_loss(in.x, in.w, in.y, in.a, in.b, in.keep).total;
    h.inject("expected_lora_loss", closed);
    const double brute = enumerate_masks(n, r_eff, in.keep, [&](const Matrix& m) {
      return empirical_lora_loss(in.x, in.w, in.y, in.a, in.b, m);
    });
    worst = std::max(worst, strict_rel(closed, brute));
  }
  h.record(out, "dropout", "expected_lora_loss", worst, 0.0, 1e-9, worst <= 1e-9,
           "closed form vs exhaustive mask average, 20 instances");
}

void check_ols_enumeration(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(2);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Matrix x = gaussian(3, 2, rng), w = gaussian(2, 2, rng), y = gaussian(3, 2, rng);
    const double keep = kKeeps[t % 3];
    double closed = expected_ols_dropout_loss(x, w, y, keep).total;
    h.inject("expected_ols_dropout_loss", closed);
    const Matrix xw = matmul(x, w);
    const double brute = enumerate_masks(3, 2, keep, [&](const Matrix& m) {
      return frobenius_norm_sq(y - hadamard(xw, m));
    });
    worst = std::max(worst, strict_rel(closed, brute));
  }
  h.record(out, "dropout", "expected_ols_dropout_loss", worst, 0.0, 1e-9, worst <= 1e-9,
           "closed form vs exhaustive mask average, 10 instances");
}

void check_tikhonov(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(3);
  const Whitening wh = whiten(gaussian(20, 4, rng));
  const Matrix y = gaussian(20, 3, rng);
  double worst = 0.0;
  for (double p : {0.3, 0.5, 0.9}) {
    Matrix got = ols_dropout_minimizer(wh.x_white, y, p);
    h.inject("ols_dropout_minimizer", got);
    const Matrix ridge = ridge_solve(wh.x_white, y, (1.0 - p) / p);
    worst = std::max(worst, max_abs(got - ridge) / max_abs(ridge));
  }
  h.record(out, "dropout", "ols_dropout_minimizer", worst, 0.0, 1e-8, worst <= 1e-8,
           "dropout minimiser vs ridge on whitened X, keep 0.3/0.5/0.9");
}

void check_ols_stationarity(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(4);
  const Matrix x = gaussian(6, 3, rng), y = gaussian(6, 2, rng);
  const double keep = 0.8;
  Matrix w = ols_dropout_minimizer(x, y, keep);
  h.inject("ols_stationarity", w);
  const Matrix g = central_difference(
      w, [&](const Matrix& m) { return expected_ols_dropout_loss(x, m, y, keep).total; });
  const double norm = frobenius_norm(g);
  h.record(out, "dropout", "ols_stationarity", norm, 0.0, 1e-8, norm <= 1e-8,
           "finite-difference gradient norm at the minimiser, keep 0.8");
}

void check_layout(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(5);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const LoraLayer layer = random_layer(rng, 3, 4, 2, 1.0 + t, false);
    const Matrix x = gaussian(5, 4, rng), y = gaussian(5, 3, rng);
    const double keep = kKeeps[t % 3];
    double via_layer = expected_lora_loss(layer, x, y, keep).total;
    h.inject("layout_transcription", via_layer);
    // Same quantity by enumeration in the layer's own layout.
    const double brute = enumerate_masks(5, 2, keep, [&](const Matrix& m) {
      return frobenius_norm_sq(y - dropout_forward(layer, x, m));
    });
    worst = std::max(worst, strict_rel(via_layer, brute));
  }
  h.record(out, "dropout", "layout_transcription", worst, 0.0, 1e-9, worst <= 1e-9,
           "layer-layout expected loss vs enumeration of the layer forward");
}

// -------------------------------------------------------------- gradients

void check_grad_expected(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(10);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const AnalysisInstance in = analysis_instance(rng, 5, 4, 3, 2, 0.7 - 0.02 * t);
    LoraGradients g = grad_expected_lora(in.x, in.w, in.y, in.a, in.b, in.keep);
    h.inject("grad_expected_lora", g.grad_a);
    const Matrix fa = central_difference(in.a, [&](const Matrix& m) {
      return expected_lora_loss(in.x, in.w, in.y, m, in.b, in.keep).total;
    });
    const Matrix fb = central_difference(in.b, [&](const Matrix& m) {
      return expected_lora_loss(in.x, in.w, in.y, in.a, m, in.keep).total;
    });
    worst = std::max({worst, max_rel_err(g.grad_a, fa), max_rel_err(g.grad_b, fb)});
  }
  h.record(out, "gradients", "grad_expected_lora", worst, 0.0, 1e-6, worst <= 1e-6,
           "analytic vs central differences, 20 instances");
}

void check_regularizer(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(11);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const AnalysisInstance in = analysis_instance(rng, 5, 4, 3, 2, kKeeps[t % 3]);
    RegularizerGradients g = dropout_regularizer_grads(in.x, in.a, in.b, in.keep);
    h.inject("dropout_regularizer_grads", g.grad_b);
    auto orange = [&](const Matrix& a, const Matrix& b) {
      return expected_lora_loss(in.x, in.w, in.y, a, b, in.keep).orange;
    };
    const Matrix fa = central_difference(in.a, [&](const Matrix& m) { return orange(m, in.b); });
    const Matrix fb = central_difference(in.b, [&](const Matrix& m) { return orange(in.a, m); });
    worst = std::max({worst, max_rel_err(g.grad_a, fa), max_rel_err(g.grad_b, fb)});
  }
  h.record(out, "gradients", "dropout_regularizer_grads", worst, 0.0, 1e-6, worst <= 1e-6,
           "orange-term gradients vs central differences, 20 instances");
}

void check_asf(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(12);
  double worst = 0.0;
  int done = 0;
  while (done < 10) {
    LoraLayer layer = random_layer(rng, 3, 4, 2, 2.0, false);
    const Matrix x = gaussian(4, 4, rng), g_up = gaussian(4, 3, rng);
    const double eta = 0.5 + 0.25 * done;
    const Matrix f = lora_branch(layer, x);
    if (std::any_of(f.data().begin(), f.data().end(),
                    [](double v) { return std::abs(v) < 1e-6; })) {
      continue;
    }
    BackwardResult br = asf_backward(layer, x, g_up, eta);
    h.inject("asf_backward", br.grad_a);
    auto loss = [&](const LoraLayer& l, const Matrix& in) {
      const Matrix o = asf_forward(l, in, eta);
      double s = 0.0;
      for (std::size_t i = 0; i < o.data().size(); ++i) s += o.data()[i] * g_up.data()[i];
      return s;
    };
    const Matrix fa = central_difference(layer.a(), [&](const Matrix& m) {
      LoraLayer l = layer;
      l.set_a(m);
      return loss(l, x);
    });
    const Matrix fb = central_difference(layer.b(), [&](const Matrix& m) {
      LoraLayer l = layer;
      l.set_b(m);
      return loss(l, x);
    });
    const Matrix fx = central_difference(x, [&](const Matrix& m) { return loss(layer, m); });
    worst = std::max({worst, max_rel_err(br.grad_a, fa), max_rel_err(br.grad_b, fb),
                      max_rel_err(br.grad_input, fx)});
    ++done;
  }
  h.record(out, "gradients", "asf_backward", worst, 0.0, 1e-6, worst <= 1e-6,
           "chain rule through the output adaptor vs central differences");
}

void check_allora_surrogate(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(13);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const LoraLayer layer = random_layer(rng, 3, 4, 2, 2.0, false);
    const Matrix x = gaussian(4, 4, rng), g_up = gaussian(4, 3, rng);
    const double eta = std::sqrt(1.0 + t % 4);
    BackwardResult br = allora_backward(layer, x, g_up, eta);
    h.inject("allora_backward", br.grad_b);
    // Factors frozen at the current state; the surrogate is linear in the
    // branch output with column i weighted by factor i.
    const Matrix ba = matmul(layer.b(), layer.a());
    std::vector<double> c(layer.n_out());
    for (std::size_t i = 0; i < c.size(); ++i) {
      double s = 0.0;
      for (double v : ba.row(i)) s += v * v;
      c[i] = 1.0 / std::sqrt(std::sqrt(s) + 1.0 / (eta * eta));
    }
    auto surrogate = [&](const Matrix& a, const Matrix& b) {
      const LoraLayer l(layer.w(), a, b, layer.alpha());
      const Matrix o = lora_branch(l, x);
      double s = 0.0;
      for (std::size_t n = 0; n < o.rows(); ++n)
        for (std::size_t i = 0; i < o.cols(); ++i) s += c[i] * g_up(n, i) * o(n, i);
      return s;
    };
    const Matrix fa =
        central_difference(layer.a(), [&](const Matrix& m) { return surrogate(m, layer.b()); });
    const Matrix fb =
        central_difference(layer.b(), [&](const Matrix& m) { return surrogate(layer.a(), m); });
    worst = std::max({worst, max_rel_err(br.grad_a, fa), max_rel_err(br.grad_b, fb)});
  }
  h.record(out, "gradients", "allora_backward", worst, 0.0, 1e-6, worst <= 1e-6,
           "row-scaled gradients vs differences of the scaled surrogate");
}

void check_grad_input(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(14);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const LoraLayer layer = random_layer(rng, 5, 4, 2, 3.0, t % 2 == 0);
    const Matrix x = gaussian(6, 4, rng), g_up = gaussian(6, 5, rng);
    const Matrix plain = plain_backward(layer, x, g_up).grad_input;
    Matrix al = allora_backward(layer, x, g_up, 2.0).grad_input;
    h.inject("allora_grad_input", al);
    const Matrix od = allora_od_backward(layer, x, g_up, 2.0).grad_input;
    worst = std::max({worst, max_abs(al - plain), max_abs(od - plain)});
  }
  h.record(out, "gradients", "allora_grad_input", worst, 0.0, 0.0, worst == 0.0,
           "ALLoRA and ALLoRA-OD input gradients equal Plain bit for bit");
}

void check_init_equivalence(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(15);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    // η = 1 and η = 2 scale by powers of two, so the comparison is exact.
    const double eta = t % 2 == 0 ? 1.0 : 2.0;
    const LoraLayer layer = random_layer(rng, 5, 4, 2, 2.0, true);
    const Matrix x = gaussian(6, 4, rng), g_up = gaussian(6, 5, rng);
    const BackwardResult p = plain_backward(layer, x, g_up);
    BackwardResult al = allora_backward(layer, x, g_up, eta);
    h.inject("allora_init_equivalence", al.grad_b);
    const BackwardResult od = allora_od_backward(layer, x, g_up, eta);
    const BackwardResult ad = allora_dropout_backward(layer, x, g_up, Matrix(6, 2, 1.0), eta);
    for (const BackwardResult* r : std::initializer_list<const BackwardResult*>{&al, &od, &ad}) {
      worst = std::max({worst, max_abs(r->grad_a - eta * p.grad_a),
                        max_abs(r->grad_b - eta * p.grad_b)});
    }
  }
  h.record(out, "gradients", "allora_init_equivalence", worst, 0.0, 0.0, worst == 0.0,
           "at B = 0 every ALLoRA variant applies exactly eta times the Plain gradient");
}

void check_asymmetry(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(16);
  double max_ga = 0.0, min_gb = INFINITY;
  for (double keep : {0.3, 0.5, 0.8, 1.0}) {
    AnalysisInstance in = analysis_instance(rng, 8, 5, 4, 3, keep);
    in.b = Matrix(3, 4);
    LoraGradients g = grad_expected_lora(in.x, in.w, in.y, in.a, in.b, keep);
    h.inject("zero_init_asymmetry", g.grad_a);
    max_ga = std::max(max_ga, frobenius_norm(g.grad_a));
    min_gb = std::min(min_gb, frobenius_norm(g.grad_b));
  }
  const bool pass = max_ga == 0.0 && min_gb > 1e-6;
  h.record(out, "gradients", "zero_init_asymmetry", max_ga, 0.0, 0.0, pass,
           "at B = 0: max |grad_a| = " + format_double(max_ga) + ", min |grad_b| = " +
               format_double(min_gb));
}

void check_dropout_enumeration(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(17);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const LoraLayer layer = random_layer(rng, 3, 4, 2, 2.0 + t, false);
    const Matrix x = gaussian(4, 4, rng), y = gaussian(4, 3, rng);
    const double keep = kKeeps[t % 3];
    LoraGradients expected = grad_expected_lora(layer, x, y, keep);
    h.inject("dropout_backward", expected.grad_a);
    Matrix avg_a(layer.rank(), layer.n_in()), avg_b(layer.n_out(), layer.rank());
    // Enumerate once per gradient entry family by accumulating via side effect.
    enumerate_masks(4, 2, keep, [&](const Matrix& m) {
      const Matrix up = 2.0 * (dropout_forward(layer, x, m) - y);
      const BackwardResult br = dropout_backward(layer, x, up, m);
      double weight = 1.0;
      for (double v : m.data()) weight *= v > 0.0 ? keep : 1.0 - keep;
      avg_a = avg_a + weight * br.grad_a;
      avg_b = avg_b + weight * br.grad_b;
      return 0.0;
    });
    worst = std::max({worst, max_rel_err(avg_a, expected.grad_a),
                      max_rel_err(avg_b, expected.grad_b)});
  }
  h.record(out, "gradients", "dropout_backward", worst, 0.0, 1e-9, worst <= 1e-9,
           "mask-averaged dropout backward vs expected-loss gradient");
}

// ----------------------------------------------------------------- ripple

void check_ripple_tightness(const Harness& h, std::vector<CheckResult>& out) {
  double worst_growth = 0.0, worst_tight = 0.0;
  for (double eta : {1.0, 2.0, 3.0}) {
    const AlignedCase ac = aligned_worst_case(6, 12, eta, h.rng(20).split(static_cast<std::uint64_t>(eta)).next_u64());
    RippleBound rb = ripple_bound(ac.model, ac.x);
    h.inject("ripple_tightness", rb.lhs);
    const double xn = norm2(ac.x);
    const double exact = std::pow(1.0 + eta, 12.0);
    const double growth = std::pow(rb.lhs / xn, 1.0 / 12.0);
    worst_growth = std::max(worst_growth, strict_rel(growth, 1.0 + eta));
    worst_tight = std::max({worst_tight, strict_rel(rb.lhs / xn, exact), strict_rel(rb.rhs / xn, exact)});
  }
  const bool pass = worst_growth <= 0.01 && worst_tight <= 1e-6;
  h.record(out, "ripple", "ripple_tightness", worst_tight, 0.0, 1e-6, pass,
           "aligned worst case, L = 12, eta 1/2/3; worst per-layer growth error " +
               format_double(worst_growth));
}

void check_ripple_bound(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(21);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t layers = 1 + rng.below(8);
    const double eta = 0.25 + 2.0 * rng.uniform();
    const LayeredModel m = random_layered_model(5, layers, 1 + rng.below(3), eta, rng);
    std::vector<double> x(5);
    for (double& v : x) v = rng.normal();
    RippleBound rb = ripple_bound(m, x);
    h.inject("ripple_bound", rb.lhs);
    worst = std::max(worst, rb.lhs / rb.rhs);
  }
  h.record(out, "ripple", "ripple_bound", worst, 1.0, 1.0 + 1e-6, worst <= 1.0 + 1e-6,
           "max lhs/rhs over 50 random layered models");
}

void check_forward_layered(const Harness& h, std::vector<CheckResult>& out) {
  CounterRng rng = h.rng(22);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const LayeredModel m = random_layered_model(4, 1 + t % 5, 2, 1.5, rng);
    Matrix prod = Matrix::identity(4);
    for (const LoraLayer& l : m.layers) prod = matmul(l.w() + m.eta * delta(l), prod);
    std::vector<double> x(4);
    for (double& v : x) v = rng.normal();
    std::vector<double> got = forward_layered(m, x);
    Matrix g(4, 1, got);
    h.inject("forward_layered", g);
    const Matrix want = matmul(prod, Matrix(4, 1, x));
    worst = std::max(worst, max_abs(g - want) / std::max(1.0, max_abs(want)));
  }
  h.record(out, "ripple", "forward_layered", worst, 0.0, 1e-9, worst <= 1e-9,
           "layer-by-layer forward vs dense matrix product");
}

}  // namespace

const std::vector<std::string>& verify_modules() {
  static const std::vector<std::string> m{"all", "dropout", "gradients", "ripple"};
  return m;
}

bool is_verify_module(std::string_view name) {
  const auto& m = verify_modules();
  return std::find(m.begin(), m.end(), name) != m.end();
}

std::vector<CheckResult> run_checks(const VerifyOptions& options) {
  if (!is_verify_module(options.module)) {
    throw InvalidArgument("verify: unknown module '" + options.module + "'");
  }
  const Harness h(options);
  std::vector<CheckResult> out;
  const bool all = options.module == "all";
  if (all || options.module == "dropout") {
    check_lora_enumeration(h, out);
    check_ols_enumeration(h, out);
    check_tikhonov(h, out);
    check_ols_stationarity(h, out);
    check_layout(h, out);
  }
  if (all || options.module == "gradients") {
    check_grad_expected(h, out);
    check_regularizer(h, out);
    check_asf(h, out);
    check_allora_surrogate(h, out);
    check_grad_input(h, out);
    check_init_equivalence(h, out);
    check_asymmetry(h, out);
    check_dropout_enumeration(h, out);
  }
  if (all || options.module == "ripple") {
    check_ripple_tightness(h, out);
    check_ripple_bound(h, out);
    check_forward_layered(h, out);
  }
  if (!options.fault.empty() &&
      std::none_of(out.begin(), out.end(),
                   [&](const CheckResult& c) { return c.name == options.fault; })) {
    throw InvalidArgument("verify: fault target '" + options.fault +
                          "' is not a check of module " + options.module);
  }
  return out;
}

}  // namespace allora
