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

#include "allora/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>
#include <vector>

#include "allora/error.hpp"
#include "allora/rng.hpp"
#include "allora/study.hpp"

namespace allora {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Splits one CSV record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(std::move(cur));
  }
  return lines;
}

double parse_number(const std::string& field, std::size_t line_no) {
  std::size_t b = 0, e = field.size();
  while (b < e && (field[b] == ' ' || field[b] == '\t')) ++b;
  while (e > b && (field[e - 1] == ' ' || field[e - 1] == '\t')) --e;
  const char* first = field.data() + b;
  const char* last = field.data() + e;
  if (first != last && *first == '+') ++first;
  double v = 0.0;
  auto res = std::from_chars(first, last, v);
  if (first == last || res.ec != std::errc() || res.ptr != last) {
    throw ParseError("non-numeric cell '" + field + "'", line_no);
  }
  return v;
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw ParseError("truncated IDX header", bytes.size());
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  }
  return v;
}

Matrix one_hot(const std::vector<std::size_t>& labels) {
  const std::size_t classes =
      labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  Matrix y(labels.size(), classes);
  for (std::size_t n = 0; n < labels.size(); ++n) y(n, labels[n]) = 1.0;
  return y;
}

std::string matrix_rows_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() != y.rows()) {
    throw DimensionMismatch("Dataset '" + name + "': " + std::to_string(x.rows()) +
                            " feature rows but " + std::to_string(y.rows()) + " target rows");
  }
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) {
    throw InvalidArgument("Dataset::slice: range [" + std::to_string(begin) + ", " +
                          std::to_string(end) + ") outside " + std::to_string(size()) +
                          " rows");
  }
  const std::size_t n = end - begin;
  Dataset d{Matrix(n, x.cols()), Matrix(n, y.cols()), name, seed};
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(x.row(begin + i).begin(), x.row(begin + i).end(), d.x.row(i).begin());
    std::copy(y.row(begin + i).begin(), y.row(begin + i).end(), d.y.row(i).begin());
  }
  return d;
}

bool is_one_hot(const Matrix& y) {
  for (std::size_t n = 0; n < y.rows(); ++n) {
    std::size_t ones = 0;
    for (double v : y.row(n)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

Dataset gen_blobs(std::size_t n, std::size_t d, std::size_t classes, double spread,
                  std::uint64_t seed) {
  if (n == 0 || d == 0 || classes == 0) {
    throw InvalidArgument("gen_blobs: n, d and classes must be positive");
  }
  if (!(spread >= 0.0)) throw InvalidArgument("gen_blobs: spread must be nonnegative");
  CounterRng root(seed);
  CounterRng centre_rng = root.split(0);
  Matrix centres(classes, d);
  for (double& v : centres.data()) v = centre_rng.normal();
  CounterRng point_rng = root.split(1);
  Dataset ds{Matrix(n, d), Matrix(n, classes), "blobs", seed};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    for (std::size_t j = 0; j < d; ++j) {
      const double noise = point_rng.normal();
      ds.x(i, j) = centres(label, j) + spread * noise;
    }
    ds.y(i, label) = 1.0;
  }
  return ds;
}

Whitening whiten(const Matrix& x) {
  if (x.rows() < x.cols()) {
    throw SingularMatrix("whiten: " + x.shape() + " has fewer rows than columns");
  }
  const SymmetricEigen eig = symmetric_eigen(matmul_tn(x, x));
  const double largest = eig.values.back();
  if (!(eig.values.front() > 1e-12 * largest)) {
    throw SingularMatrix("whiten: Gram matrix of " + x.shape() + " is rank deficient");
  }
  const std::size_t d = x.cols();
  Matrix scaled = eig.vectors;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) scaled(i, k) /= std::sqrt(eig.values[k]);
  Matrix transform = matmul_nt(scaled, eig.vectors);
  Matrix white = matmul(x, transform);
  return {std::move(white), std::move(transform)};
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const std::string img = read_file(images);
  const std::string lab = read_file(labels);

  if (read_be32(img, 0) != 0x00000803u) throw ParseError("bad IDX image magic", 0);
  const std::uint32_t n = read_be32(img, 4);
  const std::uint32_t rows = read_be32(img, 8);
  const std::uint32_t cols = read_be32(img, 12);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::size_t need = 16 + static_cast<std::size_t>(n) * pixels;
  if (img.size() < need) throw ParseError("truncated IDX image payload", img.size());
  if (img.size() > need) throw ParseError("trailing bytes after IDX image payload", need);

  if (read_be32(lab, 0) != 0x00000801u) throw ParseError("bad IDX label magic", 0);
  const std::uint32_t n_labels = read_be32(lab, 4);
  if (n_labels != n) {
    throw ParseError("label count " + std::to_string(n_labels) + " != image count " +
                         std::to_string(n),
                     4);
  }
  if (lab.size() < 8 + static_cast<std::size_t>(n)) {
    throw ParseError("truncated IDX label payload", lab.size());
  }
  if (lab.size() > 8 + static_cast<std::size_t>(n)) {
    throw ParseError("trailing bytes after IDX label payload", 8 + static_cast<std::size_t>(n));
  }

  Matrix x(n, pixels);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n) * pixels; ++i) {
    x.data()[i] = static_cast<unsigned char>(img[16 + i]) / 255.0;
  }
  std::vector<std::size_t> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = static_cast<unsigned char>(lab[8 + i]);
  return Dataset{std::move(x), one_hot(ys), "idx:" + images.filename().string(), std::nullopt};
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw ParseError("empty CSV file '" + path.string() + "'", 1);
  const std::vector<std::string> header = split_record(lines[0], 1);
  const auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end()) {
    throw ParseError("no column named '" + label_column + "' in header", 1);
  }
  const std::size_t label_idx = static_cast<std::size_t>(it - header.begin());
  std::vector<double> features;
  std::vector<std::size_t> labels;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::vector<std::string> cells = split_record(lines[li], li + 1);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       li + 1);
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_number(cells[j], li + 1);
      if (j == label_idx) {
        if (v < 0.0 || v != std::floor(v) || v > 1e9) {
          throw ParseError("label '" + cells[j] + "' is not a nonnegative integer", li + 1);
        }
        labels.push_back(static_cast<std::size_t>(v));
      } else {
        features.push_back(v);
      }
    }
  }
  if (labels.empty()) throw ParseError("CSV file '" + path.string() + "' has no data rows", 2);
  const std::size_t n = labels.size();
  return Dataset{Matrix(n, header.size() - 1, std::move(features)), one_hot(labels),
                 "csv:" + path.filename().string(), std::nullopt};
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (j) out += ',';
    out += "c" + std::to_string(j);
  }
  out += '\n';
  out += matrix_rows_csv(m);
  write_file(path, out);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw ParseError("empty CSV file '" + path.string() + "'", 1);
  const std::size_t cols = split_record(lines[0], 1).size();
  std::vector<double> values;
  std::size_t rows = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto cells = split_record(lines[li], li + 1);
    if (cells.size() != cols) {
      throw ParseError("expected " + std::to_string(cols) + " cells, found " +
                           std::to_string(cells.size()),
                       li + 1);
    }
    for (const auto& c : cells) values.push_back(parse_number(c, li + 1));
    ++rows;
  }
  return Matrix(rows, cols, std::move(values));
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
  d.validate();
  std::string out;
  for (std::size_t j = 0; j < d.x.cols(); ++j) out += "x" + std::to_string(j) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.x.row(i)) out += format_double(v) + ",";
    auto y = d.y.row(i);
    out += std::to_string(std::max_element(y.begin(), y.end()) - y.begin()) + "\n";
  }
  write_file(path, out);
}

std::string layer_dump(const LoraLayer& layer) {
  std::string out = "n_out,n_in,rank,alpha\n";
  out += std::to_string(layer.n_out()) + "," + std::to_string(layer.n_in()) + "," +
         std::to_string(layer.rank()) + "," + format_double(layer.alpha()) + "\n";
  const std::pair<const char*, const Matrix*> blocks[] = {
      {"W", &layer.w()}, {"A", &layer.a()}, {"B", &layer.b()}};
  for (const auto& [name, m] : blocks) {
    out += std::string("# ") + name + " " + std::to_string(m->rows()) + " " +
           std::to_string(m->cols()) + "\n";
    out += matrix_rows_csv(*m);
  }
  return out;
}

void save_layer(const LoraLayer& layer, const std::filesystem::path& path) {
  write_file(path, layer_dump(layer));
}

LoraLayer parse_layer_dump(const std::string& text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.size() < 2 || lines[0] != "n_out,n_in,rank,alpha") {
    throw ParseError("missing layer dump preamble", 1);
  }
  const auto pre = split_record(lines[1], 2);
  if (pre.size() != 4) throw ParseError("layer dump preamble needs 4 values", 2);
  const auto n_out = static_cast<std::size_t>(parse_number(pre[0], 2));
  const auto n_in = static_cast<std::size_t>(parse_number(pre[1], 2));
  const auto rank = static_cast<std::size_t>(parse_number(pre[2], 2));
  const double alpha = parse_number(pre[3], 2);

  std::size_t li = 2;
  auto read_block = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    if (li >= lines.size()) throw ParseError("missing block " + name, li + 1);
    std::istringstream hs(lines[li]);
    std::string hash, got;
    std::size_t r = 0, c = 0;
    if (!(hs >> hash >> got >> r >> c) || hash != "#" || got != name || r != rows ||
        c != cols) {
      throw ParseError("expected block header '# " + name + " " + std::to_string(rows) + " " +
                           std::to_string(cols) + "'",
                       li + 1);
    }
    ++li;
    std::vector<double> values;
    values.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i, ++li) {
      if (li >= lines.size()) throw ParseError("block " + name + " is truncated", li + 1);
      const auto cells = split_record(lines[li], li + 1);
      if (cells.size() != cols) {
        throw ParseError("block " + name + " row has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(cols),
                         li + 1);
      }
      for (const auto& cell : cells) values.push_back(parse_number(cell, li + 1));
    }
    return Matrix(rows, cols, std::move(values));
  };
  Matrix w = read_block("W", n_out, n_in);
  Matrix a = read_block("A", rank, n_in);
  Matrix b = read_block("B", n_out, rank);
  return LoraLayer(std::move(w), std::move(a), std::move(b), alpha);
}

LoraLayer load_layer(const std::filesystem::path& path) {
  return parse_layer_dump(read_file(path));
}

}  // namespace allora
