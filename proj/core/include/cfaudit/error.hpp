// Copyright 2026 The cfaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfaudit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Manifest parse or validation failure. `line()` is 1-based, 0 when the
/// failure is not tied to a single line (e.g. a cross-record check).
class ManifestError : public Error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Embedding codec or matrix invariant failure. `row()` is set when the
/// problem is attributable to one row.
class EmbeddingError : public Error {
 public:
  static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

  explicit EmbeddingError(const std::string& what, std::size_t row = kNoRow)
      : Error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace cfaudit
