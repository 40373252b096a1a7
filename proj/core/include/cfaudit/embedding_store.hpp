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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cfaudit {

/// Dense n x d float32 matrix whose rows are addressed by unique string ids.
///
/// The constructor enforces the shape invariants (payload size, id count, id
/// uniqueness). Finiteness is checked by the codec on both read and write,
/// and can be queried with `first_non_finite_row()`.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                  std::vector<std::string> ids);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const float> values() const noexcept { return values_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  std::optional<std::size_t> first_non_finite_row() const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim_ == b.dim_ && a.values_ == b.values_ && a.ids_ == b.ids_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmbeddingHeaderBytes = 12;

struct EmbeddingHeader {
  std::uint32_t rows = 0;
  std::uint32_t dim = 0;
};

/// Path of the JSON id sidecar that accompanies an embedding file.
std::filesystem::path ids_sidecar_path(const std::filesystem::path& path);

/// Reads only the 12-byte header (magic, n, d).
EmbeddingHeader read_embedding_header(const std::filesystem::path& path);

/// Decodes an `EMB1` file and its `.ids.json` sidecar. Throws EmbeddingError
/// on bad magic, truncated or oversized payload, non-finite values (with the
/// offending row) and id count mismatch.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

/// Writes `matrix` as little-endian `EMB1` plus the id sidecar. Output bytes
/// are a pure function of the matrix. Refuses non-finite rows.
void write_embeddings(const EmbeddingMatrix& matrix,
                      const std::filesystem::path& path);

/// Divides each row by its Euclidean norm (computed in double).
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix);

/// Selects rows by id, in the requested order.
EmbeddingMatrix slice_by_ids(const EmbeddingMatrix& matrix,
                             std::span<const std::string> ids);

}  // namespace cfaudit
