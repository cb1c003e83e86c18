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

#ifndef ALLORA_TRAINER_HPP_
#define ALLORA_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "allora/adapters.hpp"
#include "allora/data_io.hpp"
#include "allora/dropout_analysis.hpp"
#include "allora/network.hpp"
#include "allora/study.hpp"

namespace allora {

struct TrainConfig {
  double base_lr = 1e-2;  // l_b
  double eta = 2.0;       // η² = 4
  double keep_prob = 1.0;
  std::size_t epochs = 1;
  std::size_t steps = 0;  // when > 0, stop after this many updates
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdaptorVariant adaptor = AdaptorVariant::kPlain;
  std::size_t rank = 4;
  double alpha = 4.0;  // only Plain and Dropout read it; the ALLoRA family uses alpha = rank
  LossKind loss = LossKind::kSoftmaxCrossEntropy;

  void validate() const;
  AdaptorKind adaptor_kind() const;
};

struct TraceRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double norm_a = 0.0;  // ‖A‖_F over all layers
  double norm_b = 0.0;
  double ba_row_norm_mean = 0.0;  // mean ‖(BA)_{i,:}‖ over all rows of all layers
  double grad_a_norm = 0.0;       // norm of the applied (adapted) gradient
  double grad_b_norm = 0.0;
};

/// Columns step,loss,norm_a,norm_b,ba_row_norm_mean,grad_a_norm,grad_b_norm.
StudyResult trace_table(const std::vector<TraceRecord>& traces);

struct AdapterNorms {
  double norm_a = 0.0;
  double norm_b = 0.0;
  double ba_row_norm_mean = 0.0;
};
AdapterNorms adapter_norms(const Network& net);

struct TestMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

TestMetrics evaluate(const Network& net, const AdaptorKind& kind, const Dataset& data,
                     LossKind loss);

/// Full-weight SGD on the base weights (adapters stay at B = 0). Records
/// only step and loss.
std::vector<TraceRecord> pretrain(Network& net, const Dataset& data, const TrainConfig& cfg);

/// Attaches fresh adapters per cfg and trains only A and B; base weights are
/// never written. One trace record per update, taken before the update.
std::vector<TraceRecord> finetune(Network& net, const Dataset& data, const TrainConfig& cfg);

struct SplitSizes {
  std::size_t pretrain = 4096;
  std::size_t finetune = 512;
  std::size_t test = 1024;
};

/// A pretrained network and the disjoint data it is fine-tuned and scored on.
struct Task {
  std::string name;
  Network pretrained;
  Dataset finetune;
  Dataset test;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
};

Task make_task(const Dataset& data, const SplitSizes& sizes, const ModelSpec& spec,
               const TrainConfig& pre);

struct BlobTaskOptions {
  std::size_t dim = 64;
  std::size_t classes = 10;
  double spread = 2.0;
  SplitSizes sizes{};
  ModelSpec spec{};
  std::size_t pretrain_epochs = 1;
  double pretrain_lr = 2e-2;
};

/// Seeded Gaussian-blob classification: pretrain on the first split, keep
/// the next two for fine-tuning and testing.
Task make_blob_task(std::uint64_t seed, const BlobTaskOptions& options = {});

struct FinetuneRun {
  Network network;
  std::vector<TraceRecord> traces;
  TestMetrics test;
};

FinetuneRun run_finetune(const Task& task, const TrainConfig& cfg);

FinetuneRun pretrain_then_finetune(const Dataset& data, const SplitSizes& sizes,
                                   const ModelSpec& spec, const TrainConfig& pre,
                                   const TrainConfig& fine);

/// Single linear layer in the regression layout of dropout_analysis.
struct LinearTask {
  Matrix x, w, y;
  Matrix x_test, y_test;
};

/// y = x·(w + Δ) + noise, Δ of rank `shift_rank`.
LinearTask make_linear_task(std::uint64_t seed, std::size_t n = 64, std::size_t d = 16,
                            std::size_t c = 8, std::size_t shift_rank = 4,
                            double noise = 0.1);

struct GapTrace {
  std::vector<double> expected_loss;      // closed-form total along the expected-loss run
  std::vector<double> stochastic_loss;    // realised loss along the stochastic run
  std::vector<double> expected_metric;    // held-out dropout-free loss per sample
  std::vector<double> stochastic_metric;
  std::vector<double> gap;                // |expected_metric − stochastic_metric|
};

/// Observer for the expected-loss run: (step, a, b, gradient used).
using GapObserver =
    std::function<void(std::size_t, const Matrix&, const Matrix&, const LoraGradients&)>;

/// Gradient descent on the closed-form expected loss next to SGD on the
/// realised loss, from the same initialisation (A uniform ±1/√D, B = 0).
/// Step k of the stochastic run draws its mask from CounterRng(seed).split(k+1).
/// Both runs use the step size lr / (1 + k/lr_decay); lr_decay = 0 keeps it
/// constant, in which case the stochastic run settles at a noise floor
/// instead of converging.
/// Entry k of every series is measured before update k; entry `steps` is
/// the final state. Throws Divergence when a loss exceeds 1e12.
GapTrace expected_loss_finetune(const LinearTask& task, std::size_t rank, double keep,
                                std::size_t steps, double lr, std::uint64_t seed,
                                double lr_decay = 100.0, const GapObserver& observer = {});

/// Exponential moving average with the given half-life (in steps).
std::vector<double> ema_smooth(const std::vector<double>& values, double half_life = 20.0);

/// ALLoRA(l_b, η), Plain(l_b) and Plain(η·l_b) from identical initial
/// states; columns step, allora_norm, plain_lb_norm, plain_eta_lb_norm hold
/// the mean BA row norm after `step` updates.
StudyResult escape_study(const Task& task, double base_lr, double eta, std::size_t steps,
                         std::uint64_t seed, std::size_t rank = 4, std::size_t batch_size = 32);

/// Dropout LoRA per keep value; columns keep, final_norm_a, final_norm_b,
/// with footer rows spread_a and spread_b ((max − min)/mean).
StudyResult norm_vs_keep_study(const Task& task, const std::vector<double>& keep_values,
                               std::size_t steps, std::uint64_t seed, double lr = 5e-2,
                               std::size_t rank = 4, std::size_t batch_size = 32);

/// (max − min)/mean.
double relative_spread(const std::vector<double>& values);

}  // namespace allora

#endif  // ALLORA_TRAINER_HPP_
