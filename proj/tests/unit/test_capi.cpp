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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "allora/allora.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  allora_string_free(s);
  return out;
}

allora_matrix* make(size_t r, size_t c, std::initializer_list<double> v) {
  allora_matrix* m = nullptr;
  EXPECT_EQ(allora_matrix_create(r, c, std::data(v), &m), ALLORA_OK);
  return m;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(allora_version(), "0.1.0");
  EXPECT_STREQ(allora_status_name(ALLORA_OK), "ok");
  EXPECT_STREQ(allora_status_name(ALLORA_DIMENSION_MISMATCH), "dimension mismatch");
  EXPECT_STREQ(allora_status_name(static_cast<allora_status>(1234)), "unknown status");
}

TEST(CApi, MatmulAndShapeErrors) {
  allora_matrix* a = make(2, 2, {1, 2, 3, 4});
  allora_matrix* b = make(2, 1, {5, 6});
  allora_matrix* c = nullptr;
  ASSERT_EQ(allora_matmul(a, b, &c), ALLORA_OK);
  EXPECT_EQ(allora_matrix_rows(c), 2u);
  EXPECT_EQ(allora_matrix_data(c)[0], 17.0);
  EXPECT_EQ(allora_matrix_data(c)[1], 39.0);
  allora_matrix* bad = nullptr;
  EXPECT_EQ(allora_matmul(b, b, &bad), ALLORA_DIMENSION_MISMATCH);
  EXPECT_EQ(bad, nullptr);
  EXPECT_NE(std::string(allora_last_error()).find("matmul"), std::string::npos);
  EXPECT_EQ(allora_matmul(nullptr, b, &bad), ALLORA_INVALID_ARGUMENT);
  EXPECT_EQ(allora_matrix_create(2, 2, nullptr, &bad), ALLORA_INVALID_ARGUMENT);
  allora_matrix* s = make(2, 2, {1, 1, 1, 1});
  EXPECT_EQ(allora_ridge_solve(s, b, 0.0, &bad), ALLORA_SINGULAR);
  allora_matrix_free(a);
  allora_matrix_free(b);
  allora_matrix_free(c);
  allora_matrix_free(s);
  allora_matrix_free(nullptr);
}

TEST(CApi, ExpectedLossAndFactor) {
  allora_matrix* x = make(3, 3, {1, 0, 2, -1, 1, 0, 2, 1, -1});
  allora_matrix* w = make(3, 2, {1, 0, 0, -1, 1, 1});
  allora_matrix* y = make(3, 2, {3, -1, 0, 2, 1, 1});
  allora_matrix* a = make(3, 2, {1, -1, 0, 2, 1, 0});
  allora_matrix* b = make(2, 2, {1, 0, -1, 1});
  allora_loss_decomposition d{};
  ASSERT_EQ(allora_expected_lora_loss(x, w, y, a, b, 0.5, &d), ALLORA_OK);
  EXPECT_NEAR(d.total, 86.0, 1e-9);
  EXPECT_NEAR(d.blue + d.orange, d.total, 1e-12);
  allora_matrix *ga = nullptr, *gb = nullptr;
  ASSERT_EQ(allora_grad_expected_lora(x, w, y, a, b, 0.5, &ga, &gb), ALLORA_OK);
  EXPECT_NEAR(allora_matrix_data(ga)[0], 34.0, 1e-9);
  EXPECT_EQ(allora_expected_lora_loss(x, w, y, a, b, 0.0, &d), ALLORA_INVALID_ARGUMENT);
  double f = 0;
  EXPECT_EQ(allora_adaptive_factor(0.0, 2.0, &f), ALLORA_OK);
  EXPECT_EQ(f, 2.0);
  EXPECT_EQ(allora_adaptive_factor(-1.0, 2.0, &f), ALLORA_INVALID_ARGUMENT);
  for (auto* m : {x, w, y, a, b, ga, gb}) allora_matrix_free(m);
}

TEST(CApi, LayerRoundTrip) {
  allora_matrix* w = make(2, 3, {1, 2, 3, 4, 5, 6});
  allora_layer* l = nullptr;
  ASSERT_EQ(allora_layer_init(w, 1, 2.0, 7, &l), ALLORA_OK);
  EXPECT_EQ(allora_layer_rank(l), 1u);
  EXPECT_EQ(allora_layer_alpha(l), 2.0);
  allora_matrix* x = make(1, 3, {1, 1, 1});
  allora_matrix* out = nullptr;
  ASSERT_EQ(allora_layer_forward(l, x, &out), ALLORA_OK);
  EXPECT_EQ(allora_matrix_data(out)[0], 6.0);
  EXPECT_EQ(allora_matrix_data(out)[1], 15.0);
  const auto path = std::filesystem::path(::testing::TempDir()) / "allora_capi_layer.txt";
  ASSERT_EQ(allora_layer_save(l, path.c_str()), ALLORA_OK);
  allora_layer* back = nullptr;
  ASSERT_EQ(allora_layer_load(path.c_str(), &back), ALLORA_OK);
  allora_matrix *a1 = nullptr, *a2 = nullptr;
  ASSERT_EQ(allora_layer_matrix(l, 'a', &a1), ALLORA_OK);
  ASSERT_EQ(allora_layer_matrix(back, 'a', &a2), ALLORA_OK);
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(allora_matrix_data(a1)[i], allora_matrix_data(a2)[i]);
  allora_matrix* junk = nullptr;
  EXPECT_EQ(allora_layer_matrix(l, 'q', &junk), ALLORA_INVALID_ARGUMENT);
  EXPECT_EQ(allora_layer_init(w, 0, 1.0, 0, &back), ALLORA_INVALID_ARGUMENT);
  allora_layer* missing = nullptr;
  EXPECT_EQ(allora_layer_load("/nonexistent/dir/layer.txt", &missing), ALLORA_IO_ERROR);
  std::filesystem::remove(path);
  for (auto* m : {w, x, out, a1, a2}) allora_matrix_free(m);
  allora_layer_free(l);
  allora_layer_free(back);
}

TEST(CApi, RippleTableAccess) {
  allora_table* t = nullptr;
  ASSERT_EQ(allora_ripple_study(8, 4, 1.0, 0, &t), ALLORA_OK);
  EXPECT_EQ(allora_table_rows(t), 4u);
  EXPECT_STREQ(allora_table_column(t, 0), "L");
  double v = 0;
  ASSERT_EQ(allora_table_value(t, 3, 2, &v), ALLORA_OK);
  EXPECT_NEAR(v, 2.0, 1e-9);
  EXPECT_EQ(allora_table_value(t, 99, 0, &v), ALLORA_INVALID_ARGUMENT);
  char* s = nullptr;
  EXPECT_EQ(allora_table_footer(t, "no_such_key", &s), ALLORA_INVALID_ARGUMENT);
  ASSERT_EQ(allora_table_to_csv(t, &s), ALLORA_OK);
  EXPECT_EQ(take(s).rfind("L,log_growth,growth_ratio", 0), 0u);
  allora_table_free(t);
}

TEST(CApi, VerifyWithAndWithoutFault) {
  allora_table* t = nullptr;
  int passed = 0;
  ASSERT_EQ(allora_verify("gradients", 0, nullptr, &t, &passed), ALLORA_OK);
  EXPECT_EQ(passed, 1);
  allora_table_free(t);
  ASSERT_EQ(allora_verify("gradients", 0, "asf_backward", &t, &passed), ALLORA_OK);
  EXPECT_EQ(passed, 0);
  allora_table_free(t);
  EXPECT_EQ(allora_verify("bogus", 0, nullptr, &t, &passed), ALLORA_INVALID_ARGUMENT);
}

TEST(CApi, TrainSmallRun) {
  allora_train_config cfg;
  allora_train_config_default(&cfg);
  EXPECT_EQ(allora_train_config_validate(&cfg), ALLORA_OK);
  cfg.pretrain_size = 256;
  cfg.finetune_size = 64;
  cfg.test_size = 64;
  cfg.steps = 5;
  cfg.batch_size = 16;
  allora_run* run = nullptr;
  ASSERT_EQ(allora_train(&cfg, &run), ALLORA_OK) << allora_last_error();
  allora_table* t = nullptr;
  ASSERT_EQ(allora_run_traces(run, &t), ALLORA_OK);
  EXPECT_EQ(allora_table_rows(t), 5u);
  EXPECT_EQ(allora_run_layer_count(run), 3u);
  EXPECT_TRUE(std::isfinite(allora_run_test_loss(run)));
  const double acc = allora_run_test_accuracy(run);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  allora_layer* l = nullptr;
  EXPECT_EQ(allora_run_layer(run, 3, &l), ALLORA_INVALID_ARGUMENT);
  allora_table_free(t);
  allora_run_free(run);

  cfg.adaptor = "plain";
  cfg.keep_prob = 0.5;
  EXPECT_EQ(allora_train_config_validate(&cfg), ALLORA_INVALID_ARGUMENT);
  cfg.adaptor = "lora";
  EXPECT_EQ(allora_train_config_validate(&cfg), ALLORA_INVALID_ARGUMENT);
  cfg.adaptor = "dropout";
  cfg.task = "idx:/nonexistent/a,/nonexistent/b";
  EXPECT_EQ(allora_train(&cfg, &run), ALLORA_IO_ERROR);
}

}  // namespace
