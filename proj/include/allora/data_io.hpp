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

#ifndef ALLORA_DATA_IO_HPP_
#define ALLORA_DATA_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "allora/linalg.hpp"
#include "allora/lora.hpp"

namespace allora {

struct Dataset {
  Matrix x;  // N × D features
  Matrix y;  // N × C targets (one-hot for classification)
  std::string name;
  std::optional<std::uint64_t> seed;

  std::size_t size() const noexcept { return x.rows(); }
  /// Throws unless x.rows() == y.rows().
  void validate() const;
  /// Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;
};

/// True when every row of y has a single 1 and zeros elsewhere.
bool is_one_hot(const Matrix& y);

/// `classes` Gaussian clusters in d dimensions: centres ~ N(0, I), points
/// centre + spread·N(0, I), labels cycling 0, 1, …, classes − 1.
Dataset gen_blobs(std::size_t n, std::size_t d, std::size_t classes, double spread,
                  std::uint64_t seed);

struct Whitening {
  Matrix x_white;    // x·transform, with x_whiteᵀ·x_white = I
  Matrix transform;  // (xᵀx)^{-1/2}, D × D
};

/// Gram-matrix inverse square root via Jacobi eigendecomposition. Throws
/// SingularMatrix if N < D or xᵀx is rank deficient.
Whitening whiten(const Matrix& x);

/// MNIST-style IDX pair: images magic 0x00000803 (n, rows, cols, u8 pixels),
/// labels magic 0x00000801 (n, u8 labels), big-endian. Pixels are divided by
/// 255; labels are one-hot over max(label) + 1 classes.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Header row mandatory, numeric cells; `label_column` (by header name) is
/// one-hot expanded over max(label) + 1 classes, the remaining columns form x.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Matrix as CSV with header c0,c1,…; values in shortest round-trip form.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Dataset as CSV: feature columns x0…, then a `label` column (argmax of y).
void write_dataset_csv(const Dataset& d, const std::filesystem::path& path);

/// Layer dump: "n_out,n_in,rank,alpha" header and values, then W, A and B
/// blocks each introduced by "# <name> <rows> <cols>".
std::string layer_dump(const LoraLayer& layer);
void save_layer(const LoraLayer& layer, const std::filesystem::path& path);
LoraLayer parse_layer_dump(const std::string& text);
LoraLayer load_layer(const std::filesystem::path& path);

}  // namespace allora

#endif  // ALLORA_DATA_IO_HPP_
