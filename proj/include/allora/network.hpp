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

#ifndef ALLORA_NETWORK_HPP_
#define ALLORA_NETWORK_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "allora/adapters.hpp"
#include "allora/linalg.hpp"
#include "allora/lora.hpp"

namespace allora {

enum class Activation { kIdentity, kRelu };
enum class LossKind { kSquaredError, kSoftmaxCrossEntropy };

std::string_view to_string(Activation a);
std::string_view to_string(LossKind l);
Activation parse_activation(std::string_view name);
LossKind parse_loss(std::string_view name);

/// Output widths of each layer, e.g. {64, 64, 10}; the input width comes
/// from the data.
struct ModelSpec {
  std::vector<std::size_t> widths{64, 64, 10};
  Activation activation = Activation::kRelu;
};

/// Bias-free multilayer perceptron whose every linear map is a LoraLayer.
/// The activation is applied between layers, never after the last one.
class Network {
 public:
  /// Base weights uniform on ±√(6/n_in); adapters start at rank 1 with B = 0
  /// until attach_adapters() is called.
  static Network create(std::size_t n_in, const ModelSpec& spec, std::uint64_t seed);

  Network(std::vector<LoraLayer> layers, Activation activation);

  /// Replaces every adapter by a fresh zero-B pair of the given rank,
  /// capped at min(n_out, n_in) per layer.
  void attach_adapters(std::size_t rank, double alpha, OutputMode mode, std::uint64_t seed);

  std::vector<LoraLayer>& layers() noexcept { return layers_; }
  const std::vector<LoraLayer>& layers() const noexcept { return layers_; }
  Activation activation() const noexcept { return activation_; }
  std::size_t n_in() const { return layers_.front().n_in(); }
  std::size_t n_out() const { return layers_.back().n_out(); }

 private:
  std::vector<LoraLayer> layers_;
  Activation activation_;
};

struct ForwardCache {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // output of each layer before activation
};

/// `masks` (one batch × rank matrix per layer) selects training mode for
/// the dropout variants; pass nullptr for evaluation.
Matrix network_forward(const Network& net, const AdaptorKind& kind, const Matrix& x,
                       const std::vector<Matrix>* masks, ForwardCache* cache);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // dL/d(output)
};

/// Batch-mean loss. Squared error: (1/N)‖out − y‖²_F. Cross-entropy: rows
/// of y are target distributions (one-hot for classification).
LossAndGrad loss_and_grad(LossKind kind, const Matrix& output, const Matrix& y);

struct NetworkGradients {
  std::vector<Matrix> grad_a;
  std::vector<Matrix> grad_b;
  std::vector<Matrix> grad_w;  // filled only when requested
};

/// Backpropagates `upstream` through the cached forward pass using the
/// adaptor's backward rule at each layer.
NetworkGradients network_backward(const Network& net, const AdaptorKind& kind,
                                  const ForwardCache& cache, const Matrix& upstream,
                                  const std::vector<Matrix>* masks, bool base_weights);

/// Fraction of rows whose argmax matches the argmax of y.
double accuracy(const Matrix& output, const Matrix& y);

}  // namespace allora

#endif  // ALLORA_NETWORK_HPP_
