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

/* C interface to the ALLoRA lab. Every fallible call returns an
 * allora_status; on failure allora_last_error() holds a message for the
 * calling thread until its next failing call. Handles are opaque and owned
 * by the caller, who releases them with the matching *_free function.
 * Strings returned through char** are released with allora_string_free. */

#ifndef ALLORA_ALLORA_H_
#define ALLORA_ALLORA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ALLORA_BUILDING_LIBRARY)
#define ALLORA_API __declspec(dllexport)
#else
#define ALLORA_API __declspec(dllimport)
#endif
#else
#define ALLORA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum allora_status {
  ALLORA_OK = 0,
  ALLORA_INVALID_ARGUMENT = 1,
  ALLORA_DIMENSION_MISMATCH = 2,
  ALLORA_SINGULAR = 3,
  ALLORA_NO_CONVERGENCE = 4,
  ALLORA_PARSE_ERROR = 5,
  ALLORA_IO_ERROR = 6,
  ALLORA_DIVERGENCE = 7,
  ALLORA_INTERNAL = 99
} allora_status;

typedef struct allora_matrix allora_matrix;
typedef struct allora_layer allora_layer;
typedef struct allora_table allora_table;
typedef struct allora_run allora_run;

ALLORA_API const char* allora_version(void);
ALLORA_API const char* allora_last_error(void);
ALLORA_API const char* allora_status_name(allora_status status);
ALLORA_API void allora_string_free(char* s);

/* ---- matrices (row-major doubles) ---- */
ALLORA_API allora_status allora_matrix_create(size_t rows, size_t cols, const double* data,
                                              allora_matrix** out);
ALLORA_API void allora_matrix_free(allora_matrix* m);
ALLORA_API size_t allora_matrix_rows(const allora_matrix* m);
ALLORA_API size_t allora_matrix_cols(const allora_matrix* m);
ALLORA_API const double* allora_matrix_data(const allora_matrix* m);
ALLORA_API allora_status allora_matmul(const allora_matrix* a, const allora_matrix* b,
                                       allora_matrix** out);
ALLORA_API allora_status allora_ridge_solve(const allora_matrix* x, const allora_matrix* y,
                                            double mu, allora_matrix** out);

/* ---- dropout analysis (x N×D, w D×C, y N×C, a D×r, b r×C) ---- */
typedef struct allora_loss_decomposition {
  double blue;
  double orange;
  double total;
} allora_loss_decomposition;

ALLORA_API allora_status allora_expected_lora_loss(const allora_matrix* x,
                                                   const allora_matrix* w,
                                                   const allora_matrix* y,
                                                   const allora_matrix* a,
                                                   const allora_matrix* b, double keep,
                                                   allora_loss_decomposition* out);
ALLORA_API allora_status allora_grad_expected_lora(const allora_matrix* x,
                                                   const allora_matrix* w,
                                                   const allora_matrix* y,
                                                   const allora_matrix* a,
                                                   const allora_matrix* b, double keep,
                                                   allora_matrix** grad_a,
                                                   allora_matrix** grad_b);
ALLORA_API allora_status allora_adaptive_factor(double x, double eta, double* out);

/* ---- layers (w n_out×n_in, a r×n_in, b n_out×r) ---- */
ALLORA_API allora_status allora_layer_init(const allora_matrix* w, size_t rank, double alpha,
                                           uint64_t seed, allora_layer** out);
ALLORA_API allora_status allora_layer_load(const char* path, allora_layer** out);
ALLORA_API allora_status allora_layer_save(const allora_layer* layer, const char* path);
ALLORA_API void allora_layer_free(allora_layer* layer);
ALLORA_API size_t allora_layer_rank(const allora_layer* layer);
ALLORA_API double allora_layer_alpha(const allora_layer* layer);
ALLORA_API allora_status allora_layer_forward(const allora_layer* layer,
                                              const allora_matrix* x, allora_matrix** out);
/* which: 'w', 'a' or 'b'; the result is a fresh copy. */
ALLORA_API allora_status allora_layer_matrix(const allora_layer* layer, char which,
                                             allora_matrix** out);

/* ---- tables (study results) ---- */
ALLORA_API void allora_table_free(allora_table* t);
ALLORA_API size_t allora_table_rows(const allora_table* t);
ALLORA_API size_t allora_table_cols(const allora_table* t);
ALLORA_API const char* allora_table_column(const allora_table* t, size_t col);
/* Numeric cell; text cells are ALLORA_INVALID_ARGUMENT. */
ALLORA_API allora_status allora_table_value(const allora_table* t, size_t row, size_t col,
                                            double* out);
ALLORA_API allora_status allora_table_cell_text(const allora_table* t, size_t row, size_t col,
                                                char** out);
/* Footer value for key, or ALLORA_INVALID_ARGUMENT when absent. */
ALLORA_API allora_status allora_table_footer(const allora_table* t, const char* key,
                                             char** out);
ALLORA_API allora_status allora_table_to_csv(const allora_table* t, char** out);
ALLORA_API allora_status allora_table_write_csv(const allora_table* t, const char* path);
/* y_columns is a comma-separated list; each becomes one series against x_column. */
ALLORA_API allora_status allora_table_write_svg(const allora_table* t, const char* path,
                                                const char* x_column, const char* y_columns,
                                                const char* title, int log_x, int log_y);

/* ---- studies ---- */
ALLORA_API allora_status allora_deviation_study(double keep, const size_t* sample_counts,
                                                size_t n_counts, size_t trials,
                                                uint64_t seed, allora_table** out);
ALLORA_API allora_status allora_ripple_study(size_t dim, size_t max_layers, double eta,
                                             uint64_t seed, allora_table** out);
ALLORA_API allora_status allora_escape_study(double base_lr, double eta, size_t steps,
                                             size_t rank, size_t batch_size, uint64_t seed,
                                             allora_table** out);
ALLORA_API allora_status allora_norms_study(const double* keeps, size_t n_keeps, size_t steps,
                                            double lr, size_t rank, size_t batch_size,
                                            uint64_t seed, allora_table** out);
/* Columns step, expected_loss, stochastic_loss, expected_metric,
 * stochastic_metric, gap, gap_smoothed. */
ALLORA_API allora_status allora_gap_study(double keep, size_t steps, double lr,
                                          double lr_decay, size_t rank, uint64_t seed,
                                          allora_table** out);
/* Columns module, check, status, observed, expected, tolerance, detail.
 * fault may be NULL. *all_passed is 1 when every check passed. */
ALLORA_API allora_status allora_verify(const char* module, uint64_t seed, const char* fault,
                                       allora_table** out, int* all_passed);

/* ---- training ---- */
typedef struct allora_train_config {
  const char* adaptor; /* plain, dropout, allora, allora-d, allora-od, asf */
  double eta;
  double keep_prob;
  double base_lr;
  size_t epochs;
  size_t steps; /* 0: run `epochs` full epochs */
  size_t batch_size;
  size_t rank;
  double alpha;
  uint64_t seed;
  /* blobs | idx:<images>,<labels> | csv:<path> (label column "label") */
  const char* task;
  size_t pretrain_size;
  size_t finetune_size;
  size_t test_size;
  size_t pretrain_epochs;
  double pretrain_lr;
} allora_train_config;

ALLORA_API void allora_train_config_default(allora_train_config* cfg);
/* Checks coherence (e.g. keep < 1 only with dropout variants) without running. */
ALLORA_API allora_status allora_train_config_validate(const allora_train_config* cfg);
ALLORA_API allora_status allora_train(const allora_train_config* cfg, allora_run** out);
ALLORA_API void allora_run_free(allora_run* run);
ALLORA_API allora_status allora_run_traces(const allora_run* run, allora_table** out);
ALLORA_API double allora_run_test_loss(const allora_run* run);
ALLORA_API double allora_run_test_accuracy(const allora_run* run);
ALLORA_API size_t allora_run_layer_count(const allora_run* run);
ALLORA_API allora_status allora_run_layer(const allora_run* run, size_t index,
                                          allora_layer** out);

#ifdef __cplusplus
}
#endif

#endif /* ALLORA_ALLORA_H_ */
