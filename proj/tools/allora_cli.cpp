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

// Command-line front end. Talks to the library only through allora.h.

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "allora/allora.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

// Failure with the exit code it maps to.
struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& msg) { throw CliError{kExitUsage, msg}; }

void check(allora_status s, const std::string& what) {
  if (s == ALLORA_OK) return;
  const int code = s == ALLORA_INVALID_ARGUMENT ? kExitUsage : kExitCheckFailed;
  throw CliError{code, what + ": " + allora_last_error()};
}

struct TableDeleter {
  void operator()(allora_table* t) const { allora_table_free(t); }
};
using Table = std::unique_ptr<allora_table, TableDeleter>;

std::string show(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string show(const std::string& v) { return v; }
template <typename T>
std::string show(const T& v) requires std::is_integral_v<T> { return std::to_string(v); }
template <typename T>
std::string show(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + show(v[i]);
  return s;
}

bool use_colour() {
  return std::getenv("NO_COLOR") == nullptr && isatty(fileno(stdout)) != 0;
}

// Flat key=value config: blank lines and '#' comments ignored.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) usage_error("cannot read config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(f, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      usage_error(path + ":" + std::to_string(n) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Options of one subcommand, with enough bookkeeping to fill unset options
// from a config file and echo the resolved values into the manifest.
class Command {
 public:
  Command(CLI::App& root, const std::string& name, const std::string& help)
      : name_(name), app_(root.add_subcommand(name, help)) {
    app_->add_option("--config", config_path_, "flat key=value file; flags take precedence");
    out_ = "out/" + name;
    add("out", out_, "output directory");
  }

  template <typename T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + key, var, help)->capture_default_str();
    entries_.push_back({key, o, [&var] { return show(var); }});
    return o;
  }

  const std::string& name() const { return name_; }
  CLI::App* app() const { return app_; }
  const std::string& out() const { return out_; }

  void resolve() {
    if (config_path_.empty()) return;
    for (const auto& [key, value] : read_config(config_path_)) {
      auto it = std::find_if(entries_.begin(), entries_.end(),
                             [&](const Entry& e) { return e.key == key; });
      if (it == entries_.end()) usage_error("config: unknown key '" + key + "' for " + name_);
      if (it->opt->count() > 0) continue;
      try {
        it->opt->clear();
        it->opt->add_result(value);
        it->opt->run_callback();
      } catch (const CLI::Error& e) {
        usage_error("config: " + key + ": " + e.what());
      }
    }
  }

  json config() const {
    json c = json::object();
    for (const Entry& e : entries_) c[e.key] = e.value();
    return c;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<std::string()> value;
  };
  std::string name_;
  CLI::App* app_;
  std::string config_path_;
  std::string out_;
  std::vector<Entry> entries_;
};

class Run {
 public:
  Run(const Command& cmd, std::uint64_t seed, std::vector<std::string> files)
      : dir_(cmd.out()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw CliError{kExitCheckFailed, "cannot create output directory '" + dir_.string() + "'"};
    json m;
    m["command"] = cmd.name();
    m["config"] = cmd.config();
    m["seed"] = seed;
    m["version"] = allora_version();
    std::vector<std::string> outputs;
    for (const auto& f : files) outputs.push_back(path(f));
    m["outputs"] = outputs;
    write("manifest.json", m.dump(2) + "\n");
  }

  std::string path(const std::string& file) const { return (dir_ / file).string(); }

  void write(const std::string& file, const std::string& text) const {
    std::ofstream f(path(file), std::ios::binary);
    f << text;
    if (!f) throw CliError{kExitCheckFailed, "cannot write '" + path(file) + "'"};
  }

  void table(const allora_table* t, const std::string& stem, const std::string& x,
             const std::string& ys, const std::string& title, bool log_x = false,
             bool log_y = false) const {
    check(allora_table_write_csv(t, path(stem + ".csv").c_str()), "writing " + stem + ".csv");
    check(allora_table_write_svg(t, path(stem + ".svg").c_str(), x.c_str(), ys.c_str(),
                                 title.c_str(), log_x, log_y),
          "writing " + stem + ".svg");
  }

 private:
  fs::path dir_;
};

double table_value(const allora_table* t, std::size_t row, const std::string& column) {
  for (std::size_t c = 0; c < allora_table_cols(t); ++c) {
    if (column == allora_table_column(t, c)) {
      double v = 0.0;
      check(allora_table_value(t, row, c, &v), "reading " + column);
      return v;
    }
  }
  throw CliError{kExitCheckFailed, "missing column " + column};
}

std::string cell_text(const allora_table* t, std::size_t row, std::size_t col) {
  char* s = nullptr;
  check(allora_table_cell_text(t, row, col, &s), "reading table");
  std::string out = s;
  allora_string_free(s);
  return out;
}

double eta_from_sq(double eta_sq) {
  if (!(eta_sq > 0.0)) usage_error("--eta-sq must be positive");
  return std::sqrt(eta_sq);
}

const std::vector<std::string> kAdaptors{"plain", "dropout", "allora", "allora-d", "allora-od", "asf"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ALLoRA lab: LoRA adaptor experiments, dropout analysis and self-checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(allora_version()));
  app.allow_extras(false);

  // verify
  Command verify(app, "verify", "run enumeration, finite-difference and bound checks");
  std::string v_module = "all", v_fault;
  std::uint64_t v_seed = 0;
  verify.add("module", v_module, "check group")->check(CLI::IsMember({"all", "dropout", "gradients", "ripple"}));
  verify.add("seed", v_seed, "seed for the random instances");
  verify.add("inject-fault", v_fault, "perturb the named check's library result (harness self-test)");

  // convergence
  Command conv(app, "convergence", "Monte-Carlo deviation of the realised loss from its expectation");
  double c_keep = 0.5;
  std::vector<std::size_t> c_samples{10, 100, 1000, 10000};
  std::size_t c_trials = 200;
  std::uint64_t c_seed = 0;
  conv.add("keep", c_keep, "keep probability in (0, 1]");
  conv.add("samples", c_samples, "comma-separated realisation counts N")->delimiter(',');
  conv.add("trials", c_trials, "trials averaged per N");
  conv.add("seed", c_seed, "seed");

  // train
  Command train(app, "train", "pretrain a network, then fine-tune adapters with one adaptor");
  allora_train_config tc;
  allora_train_config_default(&tc);
  std::string t_adaptor = tc.adaptor, t_task = tc.task;
  double t_eta_sq = tc.eta * tc.eta, t_keep = tc.keep_prob, t_lr = tc.base_lr, t_alpha = tc.alpha,
         t_pre_lr = tc.pretrain_lr;
  std::size_t t_epochs = tc.epochs, t_steps = tc.steps, t_rank = tc.rank, t_batch = tc.batch_size,
              t_pre_epochs = tc.pretrain_epochs, t_pre_n = tc.pretrain_size,
              t_fine_n = tc.finetune_size, t_test_n = tc.test_size;
  std::uint64_t t_seed = tc.seed;
  train.add("adaptor", t_adaptor, "plain|dropout|allora|allora-d|allora-od|asf")->check(CLI::IsMember(kAdaptors));
  train.add("eta-sq", t_eta_sq, "eta squared (1, 2 or 4)")->check(CLI::IsMember({1.0, 2.0, 4.0}));
  train.add("keep", t_keep, "keep probability; below 1 only for dropout and allora-d");
  train.add("lr", t_lr, "base learning rate");
  train.add("epochs", t_epochs, "fine-tuning epochs");
  train.add("steps", t_steps, "stop after this many updates (0: run all epochs)");
  train.add("rank", t_rank, "adapter rank");
  train.add("alpha", t_alpha, "LoRA alpha for plain and dropout");
  train.add("batch-size", t_batch, "minibatch size");
  train.add("task", t_task, "blobs | idx:<images>,<labels> | csv:<path>");
  train.add("pretrain-epochs", t_pre_epochs, "pretraining epochs");
  train.add("pretrain-lr", t_pre_lr, "pretraining learning rate");
  train.add("pretrain-size", t_pre_n, "pretraining rows");
  train.add("finetune-size", t_fine_n, "fine-tuning rows");
  train.add("test-size", t_test_n, "test rows");
  train.add("seed", t_seed, "seed");

  // norms
  Command norms(app, "norms", "final adapter norms of dropout LoRA across keep probabilities");
  std::vector<double> n_keeps{1.0, 0.8, 0.6, 0.4};
  std::size_t n_steps = 200, n_rank = 4, n_batch = 32;
  double n_lr = 5e-2;
  std::uint64_t n_seed = 0;
  norms.add("keeps", n_keeps, "comma-separated keep probabilities")->delimiter(',');
  norms.add("steps", n_steps, "updates per run");
  norms.add("lr", n_lr, "learning rate");
  norms.add("rank", n_rank, "adapter rank");
  norms.add("batch-size", n_batch, "minibatch size");
  norms.add("seed", n_seed, "seed");

  // escape
  Command escape(app, "escape", "BA row norms of ALLoRA versus Plain LoRA at two learning rates");
  double e_eta_sq = 4.0, e_lr = 1e-2;
  std::size_t e_steps = 50, e_rank = 4, e_batch = 32;
  std::uint64_t e_seed = 0;
  escape.add("eta-sq", e_eta_sq, "eta squared (2 or 4; requires eta > 1)")->check(CLI::IsMember({2.0, 4.0}));
  escape.add("lr", e_lr, "base learning rate");
  escape.add("steps", e_steps, "updates per run");
  escape.add("rank", e_rank, "adapter rank");
  escape.add("batch-size", e_batch, "minibatch size");
  escape.add("seed", e_seed, "seed");

  // gap
  Command gap(app, "gap", "expected-loss training versus dropout training on a linear task");
  double g_keep = 0.4, g_lr = 1e-3, g_decay = 100.0;
  std::size_t g_steps = 2000, g_rank = 4;
  std::uint64_t g_seed = 0;
  gap.add("keep", g_keep, "keep probability in (0, 1]");
  gap.add("steps", g_steps, "updates");
  gap.add("lr", g_lr, "initial step size");
  gap.add("lr-decay", g_decay, "step size lr/(1 + k/lr-decay); 0 keeps it constant");
  gap.add("rank", g_rank, "adapter rank");
  gap.add("seed", g_seed, "seed");

  // ripple
  Command ripple(app, "ripple", "output growth of stacked LoRA layers in the aligned worst case");
  double r_eta = 1.0;
  std::size_t r_layers = 12, r_dim = 8;
  std::uint64_t r_seed = 0;
  ripple.add("eta", r_eta, "scaling factor");
  ripple.add("layers", r_layers, "maximum depth L");
  ripple.add("dim", r_dim, "layer width d");
  ripple.add("seed", r_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify.app()->parsed()) {
      verify.resolve();
      allora_table* raw = nullptr;
      int passed = 0;
      check(allora_verify(v_module.c_str(), v_seed, v_fault.empty() ? nullptr : v_fault.c_str(),
                          &raw, &passed),
            "verify");
      Table t(raw);
      if (verify.app()->get_option("--out")->count() > 0) {
        Run run(verify, v_seed, {"verify.csv"});
        check(allora_table_write_csv(t.get(), run.path("verify.csv").c_str()), "writing verify.csv");
      }
      const bool colour = use_colour();
      std::printf("%-10s %-28s %-6s %-12s %-12s %-12s\n", "module", "check", "status", "observed",
                  "expected", "tolerance");
      for (std::size_t r = 0; r < allora_table_rows(t.get()); ++r) {
        const std::string status = cell_text(t.get(), r, 2);
        const bool ok = status == "pass";
        const char* on = colour ? (ok ? "\033[32m" : "\033[31m") : "";
        const char* off = colour ? "\033[0m" : "";
        std::printf("%-10s %-28s %s%-6s%s %-12.4g %-12.4g %-12.4g %s\n",
                    cell_text(t.get(), r, 0).c_str(), cell_text(t.get(), r, 1).c_str(), on,
                    ok ? "pass" : "FAIL", off, table_value(t.get(), r, "observed"),
                    table_value(t.get(), r, "expected"), table_value(t.get(), r, "tolerance"),
                    cell_text(t.get(), r, 6).c_str());
        if (!ok) {
          std::fprintf(stderr, "check %s failed: observed %s, expected %s within %s\n",
                       cell_text(t.get(), r, 1).c_str(), cell_text(t.get(), r, 3).c_str(),
                       cell_text(t.get(), r, 4).c_str(), cell_text(t.get(), r, 5).c_str());
        }
      }
      return passed ? kExitOk : kExitCheckFailed;
    }

    if (conv.app()->parsed()) {
      conv.resolve();
      if (c_samples.empty()) usage_error("--samples must not be empty");
      Run run(conv, c_seed, {"deviation.csv", "deviation.svg"});
      allora_table* raw = nullptr;
      check(allora_deviation_study(c_keep, c_samples.data(), c_samples.size(), c_trials, c_seed, &raw),
            "convergence");
      Table t(raw);
      run.table(t.get(), "deviation", "N", "mean_abs_dev,bound", "mean |deviation| vs N",
                true, c_keep < 1.0);
      return kExitOk;
    }

    if (train.app()->parsed()) {
      train.resolve();
      tc.adaptor = t_adaptor.c_str();
      tc.task = t_task.c_str();
      tc.eta = eta_from_sq(t_eta_sq);
      tc.keep_prob = t_keep;
      tc.base_lr = t_lr;
      tc.epochs = t_epochs;
      tc.steps = t_steps;
      tc.rank = t_rank;
      tc.alpha = t_alpha;
      tc.batch_size = t_batch;
      tc.seed = t_seed;
      tc.pretrain_epochs = t_pre_epochs;
      tc.pretrain_lr = t_pre_lr;
      tc.pretrain_size = t_pre_n;
      tc.finetune_size = t_fine_n;
      tc.test_size = t_test_n;
      if (allora_train_config_validate(&tc) != ALLORA_OK) usage_error(allora_last_error());
      const std::vector<std::string> files{"traces.csv", "traces.svg", "metrics.json",
                                           "layer_0.csv", "layer_1.csv", "layer_2.csv"};
      Run run(train, t_seed, files);
      allora_run* raw_run = nullptr;
      check(allora_train(&tc, &raw_run), "train");
      std::unique_ptr<allora_run, decltype(&allora_run_free)> r(raw_run, allora_run_free);
      allora_table* raw = nullptr;
      check(allora_run_traces(r.get(), &raw), "traces");
      Table t(raw);
      run.table(t.get(), "traces", "step", "loss", "training loss");
      json metrics;
      metrics["adaptor"] = t_adaptor;
      metrics["eta"] = tc.eta;
      metrics["steps"] = allora_table_rows(t.get());
      metrics["final_train_loss"] =
          allora_table_rows(t.get()) ? table_value(t.get(), allora_table_rows(t.get()) - 1, "loss") : 0.0;
      metrics["test_loss"] = allora_run_test_loss(r.get());
      metrics["test_accuracy"] = allora_run_test_accuracy(r.get());
      run.write("metrics.json", metrics.dump(2) + "\n");
      for (std::size_t i = 0; i < allora_run_layer_count(r.get()); ++i) {
        allora_layer* layer = nullptr;
        check(allora_run_layer(r.get(), i, &layer), "layer");
        const std::string p = run.path("layer_" + std::to_string(i) + ".csv");
        const allora_status s = allora_layer_save(layer, p.c_str());
        allora_layer_free(layer);
        check(s, "writing " + p);
      }
      std::printf("test_loss %s test_accuracy %s\n", show(allora_run_test_loss(r.get())).c_str(),
                  show(allora_run_test_accuracy(r.get())).c_str());
      return kExitOk;
    }

    if (norms.app()->parsed()) {
      norms.resolve();
      if (n_keeps.empty()) usage_error("--keeps must not be empty");
      Run run(norms, n_seed, {"norms.csv", "norms.svg"});
      allora_table* raw = nullptr;
      check(allora_norms_study(n_keeps.data(), n_keeps.size(), n_steps, n_lr, n_rank, n_batch,
                               n_seed, &raw),
            "norms");
      Table t(raw);
      run.table(t.get(), "norms", "keep", "final_norm_a,final_norm_b", "final adapter norms");
      return kExitOk;
    }

    if (escape.app()->parsed()) {
      escape.resolve();
      Run run(escape, e_seed, {"escape.csv", "escape.svg"});
      allora_table* raw = nullptr;
      check(allora_escape_study(e_lr, eta_from_sq(e_eta_sq), e_steps, e_rank, e_batch, e_seed, &raw),
            "escape");
      Table t(raw);
      run.table(t.get(), "escape", "step", "allora_norm,plain_lb_norm,plain_eta_lb_norm",
                "mean BA row norm");
      return kExitOk;
    }

    if (gap.app()->parsed()) {
      gap.resolve();
      Run run(gap, g_seed, {"gap.csv", "gap.svg"});
      allora_table* raw = nullptr;
      check(allora_gap_study(g_keep, g_steps, g_lr, g_decay, g_rank, g_seed, &raw), "gap");
      Table t(raw);
      run.table(t.get(), "gap", "step", "gap,gap_smoothed", "expected vs stochastic training gap");
      return kExitOk;
    }

    if (ripple.app()->parsed()) {
      ripple.resolve();
      Run run(ripple, r_seed, {"ripple.csv", "ripple.svg"});
      allora_table* raw = nullptr;
      check(allora_ripple_study(r_dim, r_layers, r_eta, r_seed, &raw), "ripple");
      Table t(raw);
      run.table(t.get(), "ripple", "L", "growth_ratio", "per-layer growth ratio");
      return kExitOk;
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  }
  return kExitUsage;
}
