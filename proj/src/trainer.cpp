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

#include "allora/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "allora/error.hpp"
#include "allora/montecarlo.hpp"
#include "allora/rng.hpp"

namespace allora {

namespace {

constexpr double kDivergenceThreshold = 1e12;

bool allora_family(AdaptorVariant v) {
  return v == AdaptorVariant::kAllora || v == AdaptorVariant::kAlloraDropout ||
         v == AdaptorVariant::kAlloraOutputDependent || v == AdaptorVariant::kAdaptiveScaling;
}

std::vector<std::size_t> shuffled(std::size_t n, CounterRng rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
  Matrix out(end - begin, m.cols());
  for (std::size_t i = begin; i < end; ++i) {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i - begin).begin());
  }
  return out;
}

double sum_sq(const std::vector<Matrix>& ms) {
  double s = 0.0;
  for (const auto& m : ms) s += frobenius_norm_sq(m);
  return s;
}

void check_loss(double loss, std::size_t step) {
  if (!std::isfinite(loss) || loss > kDivergenceThreshold) {
    throw Divergence("training diverged at step " + std::to_string(step) + " (loss " +
                     format_double(loss) + ")");
  }
}

// Iterates minibatches epoch by epoch until epochs run out or `steps` caps it.
template <typename Fn>
void for_each_batch(const Dataset& data, const TrainConfig& cfg, const CounterRng& shuffle_root,
                    Fn&& fn) {
  if (data.size() == 0) throw InvalidArgument("training: empty dataset");
  const std::size_t n = data.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t epochs =
      cfg.steps > 0 ? std::max<std::size_t>(1, (cfg.steps + per_epoch - 1) / per_epoch)
                    : cfg.epochs;
  std::size_t step = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    const std::vector<std::size_t> perm = shuffled(n, shuffle_root.split(e));
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      if (cfg.steps > 0 && step >= cfg.steps) return;
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      fn(step, gather_rows(data.x, perm, begin, end), gather_rows(data.y, perm, begin, end));
      ++step;
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) {
    throw InvalidArgument("train: learning rate must be finite and nonnegative");
  }
  if (batch_size == 0) throw InvalidArgument("train: batch size must be positive");
  if (epochs == 0 && steps == 0) throw InvalidArgument("train: need epochs or steps");
  if (rank == 0) throw InvalidArgument("train: rank must be positive");
  if (!(alpha > 0.0)) throw InvalidArgument("train: alpha must be positive");
  adaptor_kind().validate();
}

AdaptorKind TrainConfig::adaptor_kind() const { return {adaptor, eta, keep_prob}; }

StudyResult trace_table(const std::vector<TraceRecord>& traces) {
  StudyResult t("trace", {"step", "loss", "norm_a", "norm_b", "ba_row_norm_mean",
                          "grad_a_norm", "grad_b_norm"});
  for (const auto& r : traces) {
    t.add_row({static_cast<std::int64_t>(r.step), r.loss, r.norm_a, r.norm_b,
               r.ba_row_norm_mean, r.grad_a_norm, r.grad_b_norm});
  }
  return t;
}

AdapterNorms adapter_norms(const Network& net) {
  AdapterNorms n;
  double a_sq = 0.0, b_sq = 0.0, row_sum = 0.0;
  std::size_t rows = 0;
  for (const auto& l : net.layers()) {
    a_sq += frobenius_norm_sq(l.a());
    b_sq += frobenius_norm_sq(l.b());
    for (double v : row_norms(delta(l))) row_sum += v;
    rows += l.n_out();
  }
  n.norm_a = std::sqrt(a_sq);
  n.norm_b = std::sqrt(b_sq);
  n.ba_row_norm_mean = row_sum / static_cast<double>(rows);
  return n;
}

TestMetrics evaluate(const Network& net, const AdaptorKind& kind, const Dataset& data,
                     LossKind loss) {
  if (data.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  const Matrix out = network_forward(net, kind, data.x, nullptr, nullptr);
  return {loss_and_grad(loss, out, data.y).loss, accuracy(out, data.y)};
}

std::vector<TraceRecord> pretrain(Network& net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const AdaptorKind plain{};
  std::vector<TraceRecord> traces;
  const CounterRng root(cfg.seed);
  for_each_batch(data, cfg, root.split(1), [&](std::size_t step, const Matrix& x, const Matrix& y) {
    ForwardCache cache;
    const Matrix out = network_forward(net, plain, x, nullptr, &cache);
    const LossAndGrad lg = loss_and_grad(cfg.loss, out, y);
    check_loss(lg.loss, step);
    const NetworkGradients g = network_backward(net, plain, cache, lg.grad, nullptr, true);
    TraceRecord rec;
    rec.step = step;
    rec.loss = lg.loss;
    traces.push_back(rec);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      LoraLayer& layer = net.layers()[l];
      layer.set_w(layer.w() - cfg.base_lr * g.grad_w[l]);
    }
  });
  return traces;
}

std::vector<TraceRecord> finetune(Network& net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const AdaptorKind kind = cfg.adaptor_kind();
  const double alpha = allora_family(cfg.adaptor) ? static_cast<double>(cfg.rank) : cfg.alpha;
  const OutputMode mode = cfg.adaptor == AdaptorVariant::kAdaptiveScaling
                              ? OutputMode::kAdaptiveScaling
                              : OutputMode::kLinear;
  const CounterRng root(cfg.seed);
  net.attach_adapters(cfg.rank, alpha, mode, root.split(0).next_u64());
  const CounterRng mask_root = root.split(2);

  std::vector<TraceRecord> traces;
  for_each_batch(data, cfg, root.split(1), [&](std::size_t step, const Matrix& x, const Matrix& y) {
    std::vector<Matrix> masks;
    if (kind.uses_mask()) {
      CounterRng rng = mask_root.split(step);
      for (const auto& l : net.layers()) masks.push_back(sample_mask(x.rows(), l.rank(), kind.keep_prob, rng));
    }
    const std::vector<Matrix>* mask_ptr = kind.uses_mask() ? &masks : nullptr;
    ForwardCache cache;
    const Matrix out = network_forward(net, kind, x, mask_ptr, &cache);
    const LossAndGrad lg = loss_and_grad(cfg.loss, out, y);
    check_loss(lg.loss, step);
    const NetworkGradients g = network_backward(net, kind, cache, lg.grad, mask_ptr, false);

    const AdapterNorms norms = adapter_norms(net);
    TraceRecord rec;
    rec.step = step;
    rec.loss = lg.loss;
    rec.norm_a = norms.norm_a;
    rec.norm_b = norms.norm_b;
    rec.ba_row_norm_mean = norms.ba_row_norm_mean;
    rec.grad_a_norm = std::sqrt(sum_sq(g.grad_a));
    rec.grad_b_norm = std::sqrt(sum_sq(g.grad_b));
    traces.push_back(rec);

    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      net.layers()[l].sgd_step(g.grad_a[l], g.grad_b[l], cfg.base_lr);
    }
  });
  return traces;
}

Task make_task(const Dataset& data, const SplitSizes& sizes, const ModelSpec& spec,
               const TrainConfig& pre) {
  data.validate();
  if (sizes.pretrain == 0 || sizes.finetune == 0 || sizes.test == 0) {
    throw InvalidArgument("make_task: every split must be non-empty");
  }
  const std::size_t total = sizes.pretrain + sizes.finetune + sizes.test;
  if (total > data.size()) {
    throw InvalidArgument("make_task: splits need " + std::to_string(total) +
                          " rows, dataset has " + std::to_string(data.size()));
  }
  Network net = Network::create(data.x.cols(), spec, pre.seed);
  pretrain(net, data.slice(0, sizes.pretrain), pre);
  return Task{data.name, std::move(net),
              data.slice(sizes.pretrain, sizes.pretrain + sizes.finetune),
              data.slice(sizes.pretrain + sizes.finetune, total), pre.loss};
}

Task make_blob_task(std::uint64_t seed, const BlobTaskOptions& options) {
  const SplitSizes& s = options.sizes;
  ModelSpec spec = options.spec;
  if (spec.widths.empty() || spec.widths.back() != options.classes) {
    throw InvalidArgument("make_blob_task: last layer width must equal the class count");
  }
  const Dataset data = gen_blobs(s.pretrain + s.finetune + s.test, options.dim,
                                 options.classes, options.spread, seed);
  TrainConfig pre;
  pre.base_lr = options.pretrain_lr;
  pre.epochs = options.pretrain_epochs;
  pre.seed = mix64(seed);
  pre.loss = LossKind::kSoftmaxCrossEntropy;
  Task t = make_task(data, s, spec, pre);
  t.name = "blobs";
  return t;
}

FinetuneRun run_finetune(const Task& task, const TrainConfig& cfg) {
  FinetuneRun run{task.pretrained, {}, {}};
  TrainConfig c = cfg;
  c.loss = task.loss;
  run.traces = finetune(run.network, task.finetune, c);
  run.test = evaluate(run.network, c.adaptor_kind(), task.test, c.loss);
  return run;
}

FinetuneRun pretrain_then_finetune(const Dataset& data, const SplitSizes& sizes,
                                   const ModelSpec& spec, const TrainConfig& pre,
                                   const TrainConfig& fine) {
  return run_finetune(make_task(data, sizes, spec, pre), fine);
}

LinearTask make_linear_task(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t c,
                            std::size_t shift_rank, double noise) {
  if (n == 0 || d == 0 || c == 0 || shift_rank == 0) {
    throw InvalidArgument("make_linear_task: sizes must be positive");
  }
  CounterRng root(seed);
  CounterRng rng = root.split(0);
  LinearTask t;
  auto gaussian = [&](std::size_t r, std::size_t k, double sd) {
    Matrix m(r, k);
    for (double& v : m.data()) v = sd * rng.normal();
    return m;
  };
  t.w = gaussian(d, c, 1.0 / std::sqrt(static_cast<double>(d)));
  const Matrix u = gaussian(d, shift_rank, 1.0 / std::sqrt(static_cast<double>(d)));
  const Matrix v = gaussian(shift_rank, c, 1.0);
  const Matrix target = t.w + matmul(u, v);
  t.x = gaussian(n, d, 1.0);
  t.y = matmul(t.x, target) + gaussian(n, c, noise);
  t.x_test = gaussian(n, d, 1.0);
  t.y_test = matmul(t.x_test, target) + gaussian(n, c, noise);
  return t;
}

GapTrace expected_loss_finetune(const LinearTask& task, std::size_t rank, double keep,
                                std::size_t steps, double lr, std::uint64_t seed,
                                double lr_decay, const GapObserver& observer) {
  check_keep(keep, "expected_loss_finetune");
  if (!(lr_decay >= 0.0)) throw InvalidArgument("expected_loss_finetune: lr_decay must be >= 0");
  const std::size_t d = task.x.cols();
  const std::size_t c = task.y.cols();
  if (rank == 0 || rank > std::min(d, c)) {
    throw InvalidArgument("expected_loss_finetune: rank outside [1, min(D, C)]");
  }
  const CounterRng root(seed);
  CounterRng init_rng = root.split(0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix a0(d, rank);
  for (double& v : a0.data()) v = init_rng.uniform(-bound, bound);
  Matrix exp_a = a0, exp_b(rank, c);
  Matrix sto_a = a0, sto_b(rank, c);

  const Matrix test_base = task.y_test - matmul(task.x_test, task.w);
  const double inv_test = 1.0 / static_cast<double>(task.x_test.rows());
  auto metric = [&](const Matrix& a, const Matrix& b) {
    return frobenius_norm_sq(test_base - matmul(matmul(task.x_test, a), b)) * inv_test;
  };
  auto update = [](Matrix& a, Matrix& b, const LoraGradients& g, double step) {
    a = a - step * g.grad_a;
    b = b - step * g.grad_b;
  };

  GapTrace trace;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double me = metric(exp_a, exp_b);
    const double ms = metric(sto_a, sto_b);
    trace.expected_metric.push_back(me);
    trace.stochastic_metric.push_back(ms);
    trace.gap.push_back(std::abs(me - ms));
    const double le = expected_lora_loss(task.x, task.w, task.y, exp_a, exp_b, keep).total;
    CounterRng mask_rng = root.split(k + 1);
    const Matrix mask = sample_mask(task.x.rows(), rank, keep, mask_rng);
    const double ls = empirical_lora_loss(task.x, task.w, task.y, sto_a, sto_b, mask);
    trace.expected_loss.push_back(le);
    trace.stochastic_loss.push_back(ls);
    if (!std::isfinite(le) || !std::isfinite(ls) || le > kDivergenceThreshold ||
        ls > kDivergenceThreshold) {
      throw Divergence("expected_loss_finetune diverged at step " + std::to_string(k));
    }
    if (k == steps) break;
    const LoraGradients ge = grad_expected_lora(task.x, task.w, task.y, exp_a, exp_b, keep);
    if (observer) observer(k, exp_a, exp_b, ge);
    const LoraGradients gs = grad_empirical_lora(task.x, task.w, task.y, sto_a, sto_b, mask);
    const double step =
        lr_decay > 0.0 ? lr / (1.0 + static_cast<double>(k) / lr_decay) : lr;
    update(exp_a, exp_b, ge, step);
    update(sto_a, sto_b, gs, step);
  }
  return trace;
}

std::vector<double> ema_smooth(const std::vector<double>& values, double half_life) {
  if (!(half_life > 0.0)) throw InvalidArgument("ema_smooth: half-life must be positive");
  const double decay = std::pow(0.5, 1.0 / half_life);
  std::vector<double> out;
  out.reserve(values.size());
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s = i == 0 ? values[0] : decay * s + (1.0 - decay) * values[i];
    out.push_back(s);
  }
  return out;
}

StudyResult escape_study(const Task& task, double base_lr, double eta, std::size_t steps,
                         std::uint64_t seed, std::size_t rank, std::size_t batch_size) {
  if (!(eta > 1.0)) throw InvalidArgument("escape_study: eta must exceed 1");
  if (steps == 0) throw InvalidArgument("escape_study: need at least one step");
  TrainConfig base;
  base.steps = steps;
  base.seed = seed;
  base.rank = rank;
  base.alpha = static_cast<double>(rank);
  base.batch_size = batch_size;
  base.eta = eta;

  TrainConfig allora = base;
  allora.adaptor = AdaptorVariant::kAllora;
  allora.base_lr = base_lr;
  TrainConfig plain_lb = base;
  plain_lb.base_lr = base_lr;
  TrainConfig plain_eta = base;
  plain_eta.base_lr = eta * base_lr;

  auto norm_series = [&](const TrainConfig& cfg) {
    const FinetuneRun run = run_finetune(task, cfg);
    std::vector<double> s;
    for (const auto& r : run.traces) s.push_back(r.ba_row_norm_mean);
    s.push_back(adapter_norms(run.network).ba_row_norm_mean);
    return s;
  };
  const auto a = norm_series(allora);
  const auto p = norm_series(plain_lb);
  const auto q = norm_series(plain_eta);

  StudyResult table("escape", {"step", "allora_norm", "plain_lb_norm", "plain_eta_lb_norm"});
  for (std::size_t k = 0; k < a.size(); ++k) {
    table.add_row({static_cast<std::int64_t>(k), a[k], p[k], q[k]});
  }
  return table;
}

double relative_spread(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("relative_spread: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return (*hi - *lo) / mean;
}

StudyResult norm_vs_keep_study(const Task& task, const std::vector<double>& keep_values,
                               std::size_t steps, std::uint64_t seed, double lr,
                               std::size_t rank, std::size_t batch_size) {
  if (keep_values.empty()) throw InvalidArgument("norm_vs_keep_study: no keep values");
  StudyResult table("norms", {"keep", "final_norm_a", "final_norm_b"});
  std::vector<double> na, nb;
  for (double keep : keep_values) {
    check_keep(keep, "norm_vs_keep_study");
    TrainConfig cfg;
    cfg.adaptor = AdaptorVariant::kDropout;
    cfg.keep_prob = keep;
    cfg.base_lr = lr;
    cfg.steps = steps;
    cfg.seed = seed;
    cfg.rank = rank;
    cfg.alpha = static_cast<double>(rank);
    cfg.batch_size = batch_size;
    const FinetuneRun run = run_finetune(task, cfg);
    const AdapterNorms n = adapter_norms(run.network);
    na.push_back(n.norm_a);
    nb.push_back(n.norm_b);
    table.add_row({keep, n.norm_a, n.norm_b});
  }
  table.add_footer("spread_a", format_double(relative_spread(na)));
  table.add_footer("spread_b", format_double(relative_spread(nb)));
  return table;
}

}  // namespace allora
