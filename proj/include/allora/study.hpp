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

#ifndef ALLORA_STUDY_HPP_
#define ALLORA_STUDY_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace allora {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Shortest decimal that round-trips to the same double; "nan", "inf" and
/// "-inf" for non-finite values.
std::string format_double(double v);
std::string format_cell(const Cell& c);

/// Rows of named columns produced by a study, plus optional footer rows
/// (key, value) appended after the table in CSV form.
class StudyResult {
 public:
  StudyResult() = default;
  StudyResult(std::string name, std::vector<std::string> columns);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& footer() const noexcept {
    return footer_;
  }

  void add_row(std::vector<Cell> row);
  void add_footer(std::string key, std::string value);

  std::size_t column_index(const std::string& column) const;
  /// Numeric view of a column; integer cells are widened, text cells throw.
  std::vector<double> numeric_column(const std::string& column) const;

  /// Header line, one line per row, then footer lines as "key,value".
  std::string to_csv() const;
  /// Long format with header "study,param,value"; param is
  /// "<column>[<row index>]", footer entries keep their key.
  std::string to_long_csv() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::string>> footer_;
};

}  // namespace allora

#endif  // ALLORA_STUDY_HPP_
