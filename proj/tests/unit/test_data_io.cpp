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
#include <fstream>
#include <vector>

#include "allora/data_io.hpp"
#include "allora/error.hpp"
#include "oracles.hpp"

namespace allora {
namespace {

namespace fs = std::filesystem;

class DataIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::path(::testing::TempDir()) / (std::string("allora_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                             static_cast<std::streamsize>(bytes.size()));
    return p;
  }
  fs::path write_text(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

// Two 2×2 images, labels 2 and 0.
const std::vector<unsigned char> kImages{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2,
                                         0, 255, 51, 102, 255, 0, 0, 0};
const std::vector<unsigned char> kLabels{0, 0, 8, 1, 0, 0, 0, 2, 2, 0};

template <typename F>
std::size_t parse_offset(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no ParseError";
  return ~std::size_t{0};
}

TEST(Blobs, ShapesLabelsAndDeterminism) {
  const Dataset d = gen_blobs(30, 4, 3, 0.5, 9);
  EXPECT_EQ(d.x.rows(), 30u);
  EXPECT_EQ(d.x.cols(), 4u);
  EXPECT_EQ(d.y.cols(), 3u);
  EXPECT_TRUE(is_one_hot(d.y));
  for (std::size_t n = 0; n < 30; ++n) EXPECT_EQ(d.y(n, n % 3), 1.0);
  EXPECT_EQ(d.x, gen_blobs(30, 4, 3, 0.5, 9).x);
  EXPECT_NE(d.x, gen_blobs(30, 4, 3, 0.5, 10).x);
  EXPECT_THROW(gen_blobs(10, 2, 0, 1.0, 0), InvalidArgument);
}

TEST(Blobs, ZeroSpreadCollapsesClassesOntoDistinctCentres) {
  const Dataset d = gen_blobs(20, 3, 4, 0.0, 5);
  for (std::size_t n = 4; n < 20; ++n)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(d.x(n, j), d.x(n % 4, j));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 3; ++j) dist += (d.x(a, j) - d.x(b, j)) * (d.x(a, j) - d.x(b, j));
      EXPECT_GT(dist, 0.0) << a << "," << b;
    }
}

TEST(Blobs, SliceAndValidate) {
  const Dataset d = gen_blobs(10, 2, 2, 1.0, 1);
  const Dataset s = d.slice(3, 7);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(s.x(0, 1), d.x(3, 1));
  EXPECT_THROW(d.slice(5, 11), InvalidArgument);
  Dataset bad = d;
  bad.y = Matrix(9, 2);
  EXPECT_THROW(bad.validate(), DimensionMismatch);
}

TEST(Whiten, GramIsIdentityAndIdempotent) {
  oracle::Rand r(1);
  Matrix x = r.matrix(40, 5);
  for (std::size_t n = 0; n < 40; ++n) x(n, 2) = 3.0 * x(n, 0) + 0.1 * x(n, 2);
  const Whitening w = whiten(x);
  EXPECT_LT(max_abs(matmul_tn(w.x_white, w.x_white) - Matrix::identity(5)), 1e-10);
  EXPECT_LT(max_abs(matmul(x, w.transform) - w.x_white), 1e-12);
  const Whitening w2 = whiten(w.x_white);
  EXPECT_LT(max_abs(w2.x_white - w.x_white), 1e-10);
  EXPECT_LT(max_abs(w2.transform - Matrix::identity(5)), 1e-10);
}

TEST(Whiten, TooFewSamplesOrRankDeficient) {
  oracle::Rand r(2);
  EXPECT_THROW(whiten(r.matrix(3, 5)), SingularMatrix);
  Matrix x = r.matrix(10, 3);
  for (std::size_t n = 0; n < 10; ++n) x(n, 2) = x(n, 0) - x(n, 1);
  EXPECT_THROW(whiten(x), SingularMatrix);
}

TEST_F(DataIoTest, IdxFixtureByteByByte) {
  const Dataset d = load_idx(write_bytes("img", kImages), write_bytes("lbl", kLabels));
  ASSERT_EQ(d.x.rows(), 2u);
  ASSERT_EQ(d.x.cols(), 4u);
  EXPECT_EQ(d.x(0, 0), 0.0);
  EXPECT_EQ(d.x(0, 1), 1.0);
  EXPECT_EQ(d.x(0, 2), 51.0 / 255.0);
  EXPECT_EQ(d.x(0, 3), 102.0 / 255.0);
  EXPECT_EQ(d.x(1, 0), 1.0);
  EXPECT_EQ(d.y, (Matrix{{0, 0, 1}, {1, 0, 0}}));
}

TEST_F(DataIoTest, IdxErrorsCarryByteOffsets) {
  const fs::path lbl = write_bytes("lbl", kLabels);
  auto bad_magic = kImages;
  bad_magic[3] = 1;
  EXPECT_EQ(parse_offset([&] { load_idx(write_bytes("m", bad_magic), lbl); }), 0u);
  auto truncated = kImages;
  truncated.resize(21);
  EXPECT_EQ(parse_offset([&] { load_idx(write_bytes("t", truncated), lbl); }), 21u);
  auto header_only = kImages;
  header_only.resize(10);
  EXPECT_EQ(parse_offset([&] { load_idx(write_bytes("h", header_only), lbl); }), 10u);
  auto trailing = kImages;
  trailing.push_back(7);
  EXPECT_EQ(parse_offset([&] { load_idx(write_bytes("x", trailing), lbl); }), 24u);
  auto lbl_short = kLabels;
  lbl_short.pop_back();
  EXPECT_EQ(parse_offset([&] { load_idx(write_bytes("img", kImages), write_bytes("s", lbl_short)); }), 9u);
  EXPECT_THROW(load_idx(dir_ / "missing", lbl), IoError);
}

TEST_F(DataIoTest, CsvLoadAndErrors) {
  const Dataset d = load_csv(write_text("ok.csv", "a,label,b\n1,1,2\n3,0,4.5\n"), "label");
  EXPECT_EQ(d.x, (Matrix{{1, 2}, {3, 4.5}}));
  EXPECT_EQ(d.y, (Matrix{{0, 1}, {1, 0}}));
  EXPECT_EQ(parse_offset([&] { load_csv(write_text("empty.csv", ""), "label"); }), 1u);
  EXPECT_EQ(parse_offset([&] { load_csv(write_text("nan.csv", "a,label\n1,0\n2,0\nx,1\n"), "label"); }), 4u);
  EXPECT_EQ(parse_offset([&] { load_csv(write_text("ragged.csv", "a,label\n1,0\n2\n"), "label"); }), 3u);
  EXPECT_EQ(parse_offset([&] { load_csv(write_text("nolabel.csv", "a,b\n1,0\n"), "label"); }), 1u);
  EXPECT_EQ(parse_offset([&] { load_csv(write_text("neg.csv", "a,label\n1,-1\n"), "label"); }), 2u);
  EXPECT_THROW(load_csv(dir_ / "none.csv", "label"), IoError);
}

TEST_F(DataIoTest, MatrixAndDatasetCsvRoundTrip) {
  oracle::Rand r(3);
  Matrix m = r.matrix(4, 3);
  m(0, 0) = 1e-300;
  m(1, 2) = -0.1;
  write_matrix_csv(m, dir_ / "m.csv");
  EXPECT_EQ(read_matrix_csv(dir_ / "m.csv"), m);
  const Dataset d = gen_blobs(12, 3, 4, 0.3, 2);
  write_dataset_csv(d, dir_ / "d.csv");
  const Dataset back = load_csv(dir_ / "d.csv", "label");
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.y, d.y);
}

TEST_F(DataIoTest, LayerDumpRoundTrip) {
  oracle::Rand r(4);
  const LoraLayer l(r.matrix(3, 4), r.matrix(2, 4), r.matrix(3, 2), 5.5);
  save_layer(l, dir_ / "layer.txt");
  const LoraLayer back = load_layer(dir_ / "layer.txt");
  EXPECT_EQ(back.w(), l.w());
  EXPECT_EQ(back.a(), l.a());
  EXPECT_EQ(back.b(), l.b());
  EXPECT_EQ(back.alpha(), l.alpha());
  EXPECT_EQ(layer_dump(back), layer_dump(l));
  std::string text = layer_dump(l);
  text.resize(text.size() / 2);
  EXPECT_THROW(parse_layer_dump(text), ParseError);
  EXPECT_THROW(parse_layer_dump(""), ParseError);
}

}  // namespace
}  // namespace allora
