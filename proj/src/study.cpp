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

#include "allora/study.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "allora/error.hpp"

namespace allora {

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return csv_escape(std::get<std::string>(c));
}

StudyResult::StudyResult(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void StudyResult::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw DimensionMismatch("StudyResult '" + name_ + "': row has " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(row));
}

void StudyResult::add_footer(std::string key, std::string value) {
  footer_.emplace_back(std::move(key), std::move(value));
}

std::size_t StudyResult::column_index(const std::string& column) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j] == column) return j;
  throw InvalidArgument("StudyResult '" + name_ + "': no column '" + column + "'");
}

std::vector<double> StudyResult::numeric_column(const std::string& column) const {
  const std::size_t j = column_index(column);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) {
    if (const auto* d = std::get_if<double>(&r[j])) {
      out.push_back(*d);
    } else if (const auto* i = std::get_if<std::int64_t>(&r[j])) {
      out.push_back(static_cast<double>(*i));
    } else {
      throw InvalidArgument("StudyResult '" + name_ + "': column '" + column +
                            "' is not numeric");
    }
  }
  return out;
}

std::string StudyResult::to_csv() const {
  std::ostringstream os;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (j) os << ',';
    os << csv_escape(columns_[j]);
  }
  os << '\n';
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) os << ',';
      os << format_cell(r[j]);
    }
    os << '\n';
  }
  for (const auto& [k, v] : footer_) os << csv_escape(k) << ',' << csv_escape(v) << '\n';
  return os.str();
}

std::string StudyResult::to_long_csv() const {
  std::ostringstream os;
  os << "study,param,value\n";
  const std::string study = csv_escape(name_);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      os << study << ',' << csv_escape(columns_[j] + "[" + std::to_string(i) + "]") << ','
         << format_cell(rows_[i][j]) << '\n';
    }
  }
  for (const auto& [k, v] : footer_) os << study << ',' << csv_escape(k) << ',' << csv_escape(v) << '\n';
  return os.str();
}

}  // namespace allora
