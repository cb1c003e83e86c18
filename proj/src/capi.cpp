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

#include "allora/allora.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "allora/adapters.hpp"
#include "allora/data_io.hpp"
#include "allora/dropout_analysis.hpp"
#include "allora/error.hpp"
#include "allora/linalg.hpp"
#include "allora/lora.hpp"
#include "allora/montecarlo.hpp"
#include "allora/plot.hpp"
#include "allora/ripple.hpp"
#include "allora/study.hpp"
#include "allora/trainer.hpp"
#include "allora/verify.hpp"

#ifndef ALLORA_VERSION_STRING
#define ALLORA_VERSION_STRING "0.0.0"
#endif

struct allora_matrix {
  allora::Matrix m;
};
struct allora_layer {
  allora::LoraLayer layer;
};
struct allora_table {
  allora::StudyResult t;
};
struct allora_run {
  allora::FinetuneRun run;
};

namespace {

using allora::Matrix;

thread_local std::string g_last_error;

allora_status fail(allora_status s, const char* what) {
  g_last_error = what;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
allora_status guard(Fn&& fn) {
  try {
    fn();
    return ALLORA_OK;
  } catch (const allora::Error& e) {
    return fail(static_cast<allora_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ALLORA_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ALLORA_INTERNAL, e.what());
  } catch (...) {
    return fail(ALLORA_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw allora::InvalidArgument(std::string(name) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

allora_matrix* wrap(Matrix m) { return new allora_matrix{std::move(m)}; }
allora_table* wrap(allora::StudyResult t) { return new allora_table{std::move(t)}; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw allora::IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw allora::IoError("write to '" + path + "' failed");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string::npos ? s.size() : comma;
    if (end > start) out.push_back(s.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

allora::TrainConfig to_train_config(const allora_train_config& c) {
  require(c.adaptor, "adaptor");
  allora::TrainConfig t;
  t.adaptor = allora::parse_adaptor(c.adaptor);
  t.eta = c.eta;
  t.keep_prob = c.keep_prob;
  t.base_lr = c.base_lr;
  t.epochs = c.epochs;
  t.steps = c.steps;
  t.batch_size = c.batch_size;
  t.rank = c.rank;
  t.alpha = c.alpha;
  t.seed = c.seed;
  t.loss = allora::LossKind::kSoftmaxCrossEntropy;
  t.validate();
  return t;
}

struct TaskSpec {
  enum Kind { kBlobs, kIdx, kCsv } kind = kBlobs;
  std::string first, second;
};

TaskSpec parse_task(const char* text) {
  require(text, "task");
  const std::string s = text;
  TaskSpec spec;
  if (s == "blobs") return spec;
  if (s.rfind("idx:", 0) == 0) {
    const std::vector<std::string> parts = split_list(s.substr(4));
    if (parts.size() != 2) {
      throw allora::InvalidArgument("task '" + s + "': expected idx:<images>,<labels>");
    }
    return {TaskSpec::kIdx, parts[0], parts[1]};
  }
  if (s.rfind("csv:", 0) == 0 && s.size() > 4) return {TaskSpec::kCsv, s.substr(4), {}};
  throw allora::InvalidArgument("task '" + s + "': expected blobs, idx:<images>,<labels> or csv:<path>");
}

allora::Task build_task(const allora_train_config& c) {
  const TaskSpec spec = parse_task(c.task);
  const allora::SplitSizes sizes{c.pretrain_size, c.finetune_size, c.test_size};
  if (spec.kind == TaskSpec::kBlobs) {
    allora::BlobTaskOptions o;
    o.sizes = sizes;
    o.pretrain_epochs = c.pretrain_epochs;
    o.pretrain_lr = c.pretrain_lr;
    return allora::make_blob_task(c.seed, o);
  }
  const allora::Dataset data = spec.kind == TaskSpec::kIdx
                                   ? allora::load_idx(spec.first, spec.second)
                                   : allora::load_csv(spec.first, "label");
  allora::ModelSpec model;
  model.widths = {64, 64, data.y.cols()};
  allora::TrainConfig pre;
  pre.base_lr = c.pretrain_lr;
  pre.epochs = c.pretrain_epochs;
  pre.seed = allora::mix64(c.seed);
  return allora::make_task(data, sizes, model, pre);
}

}  // namespace

extern "C" {

const char* allora_version(void) { return ALLORA_VERSION_STRING; }

const char* allora_last_error(void) { return g_last_error.c_str(); }

const char* allora_status_name(allora_status status) {
  switch (status) {
    case ALLORA_OK: return "ok";
    case ALLORA_INVALID_ARGUMENT: return "invalid argument";
    case ALLORA_DIMENSION_MISMATCH: return "dimension mismatch";
    case ALLORA_SINGULAR: return "singular matrix";
    case ALLORA_NO_CONVERGENCE: return "no convergence";
    case ALLORA_PARSE_ERROR: return "parse error";
    case ALLORA_IO_ERROR: return "i/o error";
    case ALLORA_DIVERGENCE: return "divergence";
    case ALLORA_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void allora_string_free(char* s) { std::free(s); }

allora_status allora_matrix_create(size_t rows, size_t cols, const double* data,
                                   allora_matrix** out) {
  return guard([&] {
    require(out, "out");
    Matrix m(rows, cols);
    if (rows * cols > 0) {
      require(data, "data");
      std::memcpy(m.data().data(), data, rows * cols * sizeof(double));
    }
    *out = wrap(std::move(m));
  });
}

void allora_matrix_free(allora_matrix* m) { delete m; }
size_t allora_matrix_rows(const allora_matrix* m) { return m ? m->m.rows() : 0; }
size_t allora_matrix_cols(const allora_matrix* m) { return m ? m->m.cols() : 0; }
const double* allora_matrix_data(const allora_matrix* m) {
  return m ? m->m.data().data() : nullptr;
}

allora_status allora_matmul(const allora_matrix* a, const allora_matrix* b,
                            allora_matrix** out) {
  return guard([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = wrap(allora::matmul(a->m, b->m));
  });
}

allora_status allora_ridge_solve(const allora_matrix* x, const allora_matrix* y, double mu,
                                 allora_matrix** out) {
  return guard([&] {
    require(x, "x");
    require(y, "y");
    require(out, "out");
    *out = wrap(allora::ridge_solve(x->m, y->m, mu));
  });
}

allora_status allora_expected_lora_loss(const allora_matrix* x, const allora_matrix* w,
                                        const allora_matrix* y, const allora_matrix* a,
                                        const allora_matrix* b, double keep,
                                        allora_loss_decomposition* out) {
  return guard([&] {
    for (const void* p : {static_cast<const void*>(x), static_cast<const void*>(w),
                          static_cast<const void*>(y), static_cast<const void*>(a),
                          static_cast<const void*>(b), static_cast<const void*>(out)}) {
      require(p, "argument");
    }
    const allora::LossDecomposition d =
        allora::expected_lora_loss(x->m, w->m, y->m, a->m, b->m, keep);
    *out = {d.blue, d.orange, d.total};
  });
}

allora_status allora_grad_expected_lora(const allora_matrix* x, const allora_matrix* w,
                                        const allora_matrix* y, const allora_matrix* a,
                                        const allora_matrix* b, double keep,
                                        allora_matrix** grad_a, allora_matrix** grad_b) {
  return guard([&] {
    for (const void* p : {static_cast<const void*>(x), static_cast<const void*>(w),
                          static_cast<const void*>(y), static_cast<const void*>(a),
                          static_cast<const void*>(b), static_cast<const void*>(grad_a),
                          static_cast<const void*>(grad_b)}) {
      require(p, "argument");
    }
    allora::LoraGradients g = allora::grad_expected_lora(x->m, w->m, y->m, a->m, b->m, keep);
    auto ga = std::make_unique<allora_matrix>(allora_matrix{std::move(g.grad_a)});
    *grad_b = wrap(std::move(g.grad_b));
    *grad_a = ga.release();
  });
}

allora_status allora_adaptive_factor(double x, double eta, double* out) {
  return guard([&] {
    require(out, "out");
    *out = allora::adaptive_factor(x, eta);
  });
}

allora_status allora_layer_init(const allora_matrix* w, size_t rank, double alpha,
                                uint64_t seed, allora_layer** out) {
  return guard([&] {
    require(w, "w");
    require(out, "out");
    *out = new allora_layer{allora::LoraLayer::init(w->m, rank, alpha, 1.0, seed)};
  });
}

allora_status allora_layer_load(const char* path, allora_layer** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new allora_layer{allora::load_layer(path)};
  });
}

allora_status allora_layer_save(const allora_layer* layer, const char* path) {
  return guard([&] {
    require(layer, "layer");
    require(path, "path");
    allora::save_layer(layer->layer, path);
  });
}

void allora_layer_free(allora_layer* layer) { delete layer; }
size_t allora_layer_rank(const allora_layer* layer) { return layer ? layer->layer.rank() : 0; }
double allora_layer_alpha(const allora_layer* layer) {
  return layer ? layer->layer.alpha() : 0.0;
}

allora_status allora_layer_forward(const allora_layer* layer, const allora_matrix* x,
                                   allora_matrix** out) {
  return guard([&] {
    require(layer, "layer");
    require(x, "x");
    require(out, "out");
    *out = wrap(allora::forward(layer->layer, x->m));
  });
}

allora_status allora_layer_matrix(const allora_layer* layer, char which, allora_matrix** out) {
  return guard([&] {
    require(layer, "layer");
    require(out, "out");
    switch (which) {
      case 'w': *out = wrap(layer->layer.w()); break;
      case 'a': *out = wrap(layer->layer.a()); break;
      case 'b': *out = wrap(layer->layer.b()); break;
      default: throw allora::InvalidArgument("layer matrix must be 'w', 'a' or 'b'");
    }
  });
}

void allora_table_free(allora_table* t) { delete t; }
size_t allora_table_rows(const allora_table* t) { return t ? t->t.rows().size() : 0; }
size_t allora_table_cols(const allora_table* t) { return t ? t->t.columns().size() : 0; }
const char* allora_table_column(const allora_table* t, size_t col) {
  if (t == nullptr || col >= t->t.columns().size()) return nullptr;
  return t->t.columns()[col].c_str();
}

allora_status allora_table_value(const allora_table* t, size_t row, size_t col, double* out) {
  return guard([&] {
    require(t, "table");
    require(out, "out");
    if (row >= t->t.rows().size() || col >= t->t.columns().size()) {
      throw allora::InvalidArgument("table cell out of range");
    }
    const allora::Cell& c = t->t.rows()[row][col];
    if (const double* d = std::get_if<double>(&c)) {
      *out = *d;
    } else if (const std::int64_t* i = std::get_if<std::int64_t>(&c)) {
      *out = static_cast<double>(*i);
    } else {
      throw allora::InvalidArgument("table cell is text");
    }
  });
}

allora_status allora_table_cell_text(const allora_table* t, size_t row, size_t col,
                                     char** out) {
  return guard([&] {
    require(t, "table");
    require(out, "out");
    if (row >= t->t.rows().size() || col >= t->t.columns().size()) {
      throw allora::InvalidArgument("table cell out of range");
    }
    const allora::Cell& c = t->t.rows()[row][col];
    *out = dup_string(std::holds_alternative<std::string>(c) ? std::get<std::string>(c)
                                                              : allora::format_cell(c));
  });
}

allora_status allora_table_footer(const allora_table* t, const char* key, char** out) {
  return guard([&] {
    require(t, "table");
    require(key, "key");
    require(out, "out");
    for (const auto& [k, v] : t->t.footer()) {
      if (k == key) {
        *out = dup_string(v);
        return;
      }
    }
    throw allora::InvalidArgument(std::string("no footer entry '") + key + "'");
  });
}

allora_status allora_table_to_csv(const allora_table* t, char** out) {
  return guard([&] {
    require(t, "table");
    require(out, "out");
    *out = dup_string(t->t.to_csv());
  });
}

allora_status allora_table_write_csv(const allora_table* t, const char* path) {
  return guard([&] {
    require(t, "table");
    require(path, "path");
    write_text(path, t->t.to_csv());
  });
}

allora_status allora_table_write_svg(const allora_table* t, const char* path,
                                     const char* x_column, const char* y_columns,
                                     const char* title, int log_x, int log_y) {
  return guard([&] {
    require(t, "table");
    require(path, "path");
    require(x_column, "x_column");
    require(y_columns, "y_columns");
    const std::vector<double> xs = t->t.numeric_column(x_column);
    std::vector<allora::Series> series;
    for (const std::string& col : split_list(y_columns)) {
      series.push_back({col, xs, t->t.numeric_column(col)});
    }
    if (series.empty()) throw allora::InvalidArgument("no y columns given");
    allora::ChartOptions o;
    o.title = title ? title : t->t.name();
    o.x_label = x_column;
    o.y_label = series.size() == 1 ? series[0].label : std::string();
    o.log_x = log_x != 0;
    o.log_y = log_y != 0;
    write_text(path, allora::line_chart_svg(series, o));
  });
}

allora_status allora_deviation_study(double keep, const size_t* sample_counts, size_t n_counts,
                                     size_t trials, uint64_t seed, allora_table** out) {
  return guard([&] {
    require(out, "out");
    if (n_counts == 0) throw allora::InvalidArgument("deviation study: no sample counts");
    require(sample_counts, "sample_counts");
    const std::vector<std::size_t> counts(sample_counts, sample_counts + n_counts);
    const allora::LoraInstance in = allora::random_lora_instance(seed);
    allora::DeviationOptions o;
    o.trials = trials;
    *out = wrap(allora::to_study(
        allora::deviation_study(in.x, in.w, in.y, in.a, in.b, keep, counts, seed, o)));
  });
}

allora_status allora_ripple_study(size_t dim, size_t max_layers, double eta, uint64_t seed,
                                  allora_table** out) {
  return guard([&] {
    require(out, "out");
    *out = wrap(allora::ripple_growth_study(dim, max_layers, eta, seed));
  });
}

allora_status allora_escape_study(double base_lr, double eta, size_t steps, size_t rank,
                                  size_t batch_size, uint64_t seed, allora_table** out) {
  return guard([&] {
    require(out, "out");
    const allora::Task task = allora::make_blob_task(seed);
    *out = wrap(allora::escape_study(task, base_lr, eta, steps, seed, rank, batch_size));
  });
}

allora_status allora_norms_study(const double* keeps, size_t n_keeps, size_t steps, double lr,
                                 size_t rank, size_t batch_size, uint64_t seed,
                                 allora_table** out) {
  return guard([&] {
    require(out, "out");
    if (n_keeps == 0) throw allora::InvalidArgument("norms study: no keep values");
    require(keeps, "keeps");
    const allora::Task task = allora::make_blob_task(seed);
    *out = wrap(allora::norm_vs_keep_study(task, std::vector<double>(keeps, keeps + n_keeps),
                                           steps, seed, lr, rank, batch_size));
  });
}

allora_status allora_gap_study(double keep, size_t steps, double lr, double lr_decay,
                               size_t rank, uint64_t seed, allora_table** out) {
  return guard([&] {
    require(out, "out");
    const allora::LinearTask task = allora::make_linear_task(seed);
    const allora::GapTrace g =
        allora::expected_loss_finetune(task, rank, keep, steps, lr, seed, lr_decay);
    const std::vector<double> smooth = allora::ema_smooth(g.gap);
    allora::StudyResult t("gap", {"step", "expected_loss", "stochastic_loss", "expected_metric",
                                  "stochastic_metric", "gap", "gap_smoothed"});
    for (std::size_t k = 0; k < g.gap.size(); ++k) {
      t.add_row({static_cast<std::int64_t>(k), g.expected_loss[k], g.stochastic_loss[k],
                 g.expected_metric[k], g.stochastic_metric[k], g.gap[k], smooth[k]});
    }
    *out = wrap(std::move(t));
  });
}

allora_status allora_verify(const char* module, uint64_t seed, const char* fault,
                            allora_table** out, int* all_passed) {
  return guard([&] {
    require(module, "module");
    require(out, "out");
    require(all_passed, "all_passed");
    allora::VerifyOptions o;
    o.module = module;
    o.seed = seed;
    if (fault) o.fault = fault;
    const std::vector<allora::CheckResult> checks = allora::run_checks(o);
    allora::StudyResult t("verify", {"module", "check", "status", "observed", "expected",
                                     "tolerance", "detail"});
    bool ok = true;
    for (const auto& c : checks) {
      ok = ok && c.passed;
      t.add_row({c.module, c.name, std::string(c.passed ? "pass" : "FAIL"), c.observed,
                 c.expected, c.tolerance, c.detail});
    }
    *all_passed = ok ? 1 : 0;
    *out = wrap(std::move(t));
  });
}

void allora_train_config_default(allora_train_config* cfg) {
  if (cfg == nullptr) return;
  const allora::TrainConfig t;
  const allora::BlobTaskOptions b;
  *cfg = allora_train_config{};
  cfg->adaptor = "allora";
  cfg->eta = t.eta;
  cfg->keep_prob = t.keep_prob;
  cfg->base_lr = t.base_lr;
  cfg->epochs = t.epochs;
  cfg->steps = t.steps;
  cfg->batch_size = t.batch_size;
  cfg->rank = t.rank;
  cfg->alpha = t.alpha;
  cfg->seed = t.seed;
  cfg->task = "blobs";
  cfg->pretrain_size = b.sizes.pretrain;
  cfg->finetune_size = b.sizes.finetune;
  cfg->test_size = b.sizes.test;
  cfg->pretrain_epochs = b.pretrain_epochs;
  cfg->pretrain_lr = b.pretrain_lr;
}

allora_status allora_train_config_validate(const allora_train_config* cfg) {
  return guard([&] {
    require(cfg, "config");
    to_train_config(*cfg);
    parse_task(cfg->task);
    if (cfg->pretrain_size == 0 || cfg->finetune_size == 0 || cfg->test_size == 0) {
      throw allora::InvalidArgument("every data split must be non-empty");
    }
    if (cfg->pretrain_epochs == 0) throw allora::InvalidArgument("pretrain epochs must be positive");
    if (!(cfg->pretrain_lr > 0.0)) throw allora::InvalidArgument("pretrain lr must be positive");
  });
}

allora_status allora_train(const allora_train_config* cfg, allora_run** out) {
  const allora_status s = allora_train_config_validate(cfg);
  if (s != ALLORA_OK) return s;
  return guard([&] {
    require(out, "out");
    const allora::TrainConfig fine = to_train_config(*cfg);
    const allora::Task task = build_task(*cfg);
    *out = new allora_run{allora::run_finetune(task, fine)};
  });
}

void allora_run_free(allora_run* run) { delete run; }

allora_status allora_run_traces(const allora_run* run, allora_table** out) {
  return guard([&] {
    require(run, "run");
    require(out, "out");
    *out = wrap(allora::trace_table(run->run.traces));
  });
}

double allora_run_test_loss(const allora_run* run) { return run ? run->run.test.loss : NAN; }
double allora_run_test_accuracy(const allora_run* run) {
  return run ? run->run.test.accuracy : NAN;
}
size_t allora_run_layer_count(const allora_run* run) {
  return run ? run->run.network.layers().size() : 0;
}

allora_status allora_run_layer(const allora_run* run, size_t index, allora_layer** out) {
  return guard([&] {
    require(run, "run");
    require(out, "out");
    const auto& layers = run->run.network.layers();
    if (index >= layers.size()) throw allora::InvalidArgument("layer index out of range");
    *out = new allora_layer{layers[index]};
  });
}

}  // extern "C"
