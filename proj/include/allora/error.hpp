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

#ifndef ALLORA_ERROR_HPP_
#define ALLORA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace allora {

// Numeric values are mirrored by allora_status in allora.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kSingular = 3,
  kNoConvergence = 4,
  kParse = 5,
  kIo = 6,
  kDivergence = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorCode::kDimensionMismatch, what) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& what)
      : Error(ErrorCode::kSingular, what) {}
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what)
      : Error(ErrorCode::kNoConvergence, what) {}
};

/// Raised by the loaders; `offset()` is a byte offset for binary formats and
/// a 1-based line number for text formats.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorCode::kParse, what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class Divergence : public Error {
 public:
  explicit Divergence(const std::string& what)
      : Error(ErrorCode::kDivergence, what) {}
};

}  // namespace allora

#endif  // ALLORA_ERROR_HPP_
