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

#include "allora/dropout_analysis.hpp"

#include <string>

#include "allora/error.hpp"

namespace allora {

namespace {

double coefficient(double keep) { return 1.0 / keep - 1.0; }

void check_lora_shapes(const Matrix& x, const Matrix& w, const Matrix& y, const Matrix& a,
                       const Matrix& b) {
  if (x.rows() != y.rows() || x.cols() != w.rows() || w.cols() != y.cols() ||
      a.rows() != x.cols() || b.rows() != a.cols() || b.cols() != y.cols()) {
    throw DimensionMismatch("expected_lora_loss: incompatible shapes X " + x.shape() +
                            ", W " + w.shape() + ", Y " + y.shape() + ", A " + a.shape() +
                            ", B " + b.shape());
  }
}

// ‖Σ_k (XA)_{:,k}·B_{k,:}‖²_F split per k: ‖(XA)_{:,k}‖²·‖B_{k,:}‖².
double orange_sum(const std::vector<double>& xa_col_sq, const Matrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < b.rows(); ++k) {
    s += xa_col_sq[k] * dot(b.row(k), b.row(k));
  }
  return s;
}

std::vector<double> row_norms_sq(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t k = 0; k < m.rows(); ++k) out[k] = dot(m.row(k), m.row(k));
  return out;
}

struct Transcribed {
  Matrix w;
  Matrix a;
  Matrix b;
};

Transcribed transcribe(const LoraLayer& layer) {
  return {transpose(layer.w()), transpose(layer.a()),
          layer.scaling() * transpose(layer.b())};
}

}  // namespace

void check_keep(double keep, const char* op) {
  if (!(keep > 0.0 && keep <= 1.0)) {
    throw InvalidArgument(std::string(op) + ": keep probability " + std::to_string(keep) +
                          " outside (0, 1]");
  }
}

LossDecomposition expected_ols_dropout_loss(const Matrix& x, const Matrix& w,
                                            const Matrix& y, double keep) {
  check_keep(keep, "expected_ols_dropout_loss");
  const Matrix xw = matmul(x, w);
  if (xw.rows() != y.rows() || xw.cols() != y.cols()) {
    throw DimensionMismatch("expected_ols_dropout_loss: XW is " + xw.shape() +
                            " but Y is " + y.shape());
  }
  LossDecomposition d;
  d.blue = frobenius_norm_sq(y - xw);
  d.orange = coefficient(keep) * frobenius_norm_sq(xw);
  d.total = d.blue + d.orange;
  return d;
}

Matrix ols_dropout_minimizer(const Matrix& x, const Matrix& y, double keep) {
  check_keep(keep, "ols_dropout_minimizer");
  if (x.rows() != y.rows()) {
    throw DimensionMismatch("ols_dropout_minimizer: X is " + x.shape() + " but Y is " +
                            y.shape());
  }
  return keep * solve(matmul_tn(x, x), matmul_tn(x, y));
}

Matrix grad_expected_ols_dropout(const Matrix& x, const Matrix& w, const Matrix& y,
                                 double keep) {
  check_keep(keep, "grad_expected_ols_dropout");
  // d/dW [‖Y‖² − 2Tr(YᵀXW) + (1/keep)‖XW‖²] = −2XᵀY + (2/keep)XᵀXW
  const Matrix xw = matmul(x, w);
  return (-2.0) * matmul_tn(x, y) + (2.0 / keep) * matmul_tn(x, xw);
}

LossDecomposition expected_lora_loss(const Matrix& x, const Matrix& w, const Matrix& y,
                                     const Matrix& a, const Matrix& b, double keep) {
  check_keep(keep, "expected_lora_loss");
  check_lora_shapes(x, w, y, a, b);
  const Matrix xa = matmul(x, a);
  const Matrix residual = y - matmul(x, w) - matmul(xa, b);
  LossDecomposition d;
  d.blue = frobenius_norm_sq(residual);
  d.orange = coefficient(keep) * orange_sum(col_norms_sq(xa), b);
  d.total = d.blue + d.orange;
  return d;
}

LoraGradients grad_expected_lora(const Matrix& x, const Matrix& w, const Matrix& y,
                                 const Matrix& a, const Matrix& b, double keep) {
  check_keep(keep, "grad_expected_lora");
  check_lora_shapes(x, w, y, a, b);
  const double c = coefficient(keep);
  const Matrix base_residual = y - matmul(x, w);
  const Matrix xa = matmul(x, a);
  const Matrix xtx = matmul_tn(x, x);

  // ∇_A = 2[−Xᵀ(Y−XW)Bᵀ + XᵀXA(c·diag(‖B_{k,:}‖²) + BBᵀ)]
  Matrix inner = matmul_nt(b, b);
  const std::vector<double> b_sq = row_norms_sq(b);
  for (std::size_t k = 0; k < inner.rows(); ++k) inner(k, k) += c * b_sq[k];
  Matrix grad_a = matmul(matmul(xtx, a), inner) - matmul_nt(matmul_tn(x, base_residual), b);

  // ∇_B = 2[−(XA)ᵀ(Y−XW) + ((XA)ᵀXA + c·diag(‖(XA)_{:,k}‖²))B]
  Matrix gram = matmul_tn(xa, xa);
  const std::vector<double> xa_sq = col_norms_sq(xa);
  for (std::size_t k = 0; k < gram.rows(); ++k) gram(k, k) += c * xa_sq[k];
  Matrix grad_b = matmul(gram, b) - matmul_tn(xa, base_residual);

  return {2.0 * grad_a, 2.0 * grad_b};
}

RegularizerGradients dropout_regularizer_grads(const Matrix& x, const Matrix& a,
                                               const Matrix& b, double keep) {
  check_keep(keep, "dropout_regularizer_grads");
  if (a.rows() != x.cols() || b.rows() != a.cols()) {
    throw DimensionMismatch("dropout_regularizer_grads: incompatible shapes X " + x.shape() +
                            ", A " + a.shape() + ", B " + b.shape());
  }
  const double c = coefficient(keep);
  const Matrix xa = matmul(x, a);
  RegularizerGradients g;
  g.a_strength = row_norms_sq(b);
  g.b_strength = col_norms_sq(xa);
  // 2c·XᵀXA·diag(‖B_{k,:}‖²) and 2c·diag(‖(XA)_{:,k}‖²)·B
  g.grad_a = (2.0 * c) * scale_columns(matmul(matmul_tn(x, x), a), g.a_strength);
  g.grad_b = (2.0 * c) * scale_rows(b, g.b_strength);
  return g;
}

LossDecomposition expected_lora_loss(const LoraLayer& layer, const Matrix& x,
                                     const Matrix& y, double keep) {
  const Transcribed t = transcribe(layer);
  return expected_lora_loss(x, t.w, y, t.a, t.b, keep);
}

LoraGradients grad_expected_lora(const LoraLayer& layer, const Matrix& x, const Matrix& y,
                                 double keep) {
  const Transcribed t = transcribe(layer);
  LoraGradients g = grad_expected_lora(x, t.w, y, t.a, t.b, keep);
  return {transpose(g.grad_a), layer.scaling() * transpose(g.grad_b)};
}

}  // namespace allora
