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

#include "cfaudit/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <nlohmann/json.hpp>

#include "cfaudit/error.hpp"

namespace cfaudit {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

EmbeddingHeader parse_header(const unsigned char* bytes, std::size_t size,
                             const std::filesystem::path& path) {
  if (size < kEmbeddingHeaderBytes) {
    throw EmbeddingError(path.string() + ": file shorter than the 12-byte header");
  }
  if (std::memcmp(bytes, kEmbeddingMagic, 4) != 0) {
    throw EmbeddingError(path.string() + ": bad magic (expected EMB1)");
  }
  EmbeddingHeader h;
  h.rows = load_u32_le(bytes + 4);
  h.dim = load_u32_le(bytes + 8);
  if (h.dim == 0) {
    throw EmbeddingError(path.string() + ": header declares d = 0");
  }
  return h;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                                 std::vector<std::string> ids)
    : dim_(dim), values_(std::move(values)), ids_(std::move(ids)) {
  if (dim_ == 0) throw EmbeddingError("embedding dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw EmbeddingError("payload holds " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(ids_.size()) +
                         " x " + std::to_string(dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw EmbeddingError("duplicate id " + ids_[i], i);
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> EmbeddingMatrix::first_non_finite_row() const {
  for (std::size_t i = 0; i < rows(); ++i) {
    for (float v : row(i)) {
      if (!std::isfinite(v)) return i;
    }
  }
  return std::nullopt;
}

std::filesystem::path ids_sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".ids.json");
}

EmbeddingHeader read_embedding_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingError("cannot open " + path.string());
  unsigned char buf[kEmbeddingHeaderBytes] = {};
  in.read(reinterpret_cast<char*>(buf), kEmbeddingHeaderBytes);
  return parse_header(buf, static_cast<std::size_t>(in.gcount()), path);
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = slurp(path);
  const EmbeddingHeader h = parse_header(bytes.data(), bytes.size(), path);

  const std::size_t payload = bytes.size() - kEmbeddingHeaderBytes;
  const std::size_t expected_floats =
      static_cast<std::size_t>(h.rows) * static_cast<std::size_t>(h.dim);
  if (payload % sizeof(float) != 0 || payload / sizeof(float) != expected_floats) {
    const std::size_t have = payload / sizeof(float);
    if (have < expected_floats) {
      const std::size_t bad_row = have / h.dim;
      throw EmbeddingError(
          path.string() + ": truncated payload: header declares " +
              std::to_string(h.rows) + "x" + std::to_string(h.dim) + " (" +
              std::to_string(expected_floats) + " floats) but file holds " +
              std::to_string(have) + " complete floats; row " +
              std::to_string(bad_row) + " is incomplete",
          bad_row);
    }
    throw EmbeddingError(path.string() + ": payload of " + std::to_string(payload) +
                         " bytes does not match header " + std::to_string(h.rows) +
                         "x" + std::to_string(h.dim));
  }

  std::vector<float> values(expected_floats);
  const unsigned char* p = bytes.data() + kEmbeddingHeaderBytes;
  for (std::size_t i = 0; i < expected_floats; ++i, p += 4) {
    values[i] = std::bit_cast<float>(load_u32_le(p));
    if (!std::isfinite(values[i])) {
      throw EmbeddingError(path.string() + ": non-finite value in row " +
                               std::to_string(i / h.dim),
                           i / h.dim);
    }
  }

  const auto sidecar = ids_sidecar_path(path);
  std::ifstream ids_in(sidecar);
  if (!ids_in) throw EmbeddingError("missing id sidecar " + sidecar.string());
  nlohmann::json ids_json;
  try {
    ids_in >> ids_json;
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingError(sidecar.string() + ": " + e.what());
  }
  if (!ids_json.is_array()) {
    throw EmbeddingError(sidecar.string() + ": expected a JSON array of strings");
  }
  std::vector<std::string> ids;
  ids.reserve(ids_json.size());
  for (const auto& v : ids_json) {
    if (!v.is_string()) {
      throw EmbeddingError(sidecar.string() + ": id entries must be strings");
    }
    ids.push_back(v.get<std::string>());
  }
  if (ids.size() != h.rows) {
    throw EmbeddingError(sidecar.string() + ": " + std::to_string(ids.size()) +
                         " ids for " + std::to_string(h.rows) + " rows");
  }
  return EmbeddingMatrix(h.dim, std::move(values), std::move(ids));
}

void write_embeddings(const EmbeddingMatrix& matrix,
                      const std::filesystem::path& path) {
  if (auto bad = matrix.first_non_finite_row()) {
    throw EmbeddingError("refusing to write non-finite value in row " +
                             std::to_string(*bad),
                         *bad);
  }
  if (matrix.rows() > UINT32_MAX || matrix.dim() > UINT32_MAX) {
    throw EmbeddingError("matrix too large for EMB1 header");
  }
  std::vector<unsigned char> bytes(kEmbeddingHeaderBytes +
                                   matrix.values().size() * sizeof(float));
  std::memcpy(bytes.data(), kEmbeddingMagic, 4);
  store_u32_le(static_cast<std::uint32_t>(matrix.rows()), bytes.data() + 4);
  store_u32_le(static_cast<std::uint32_t>(matrix.dim()), bytes.data() + 8);
  unsigned char* p = bytes.data() + kEmbeddingHeaderBytes;
  for (float v : matrix.values()) {
    store_u32_le(std::bit_cast<std::uint32_t>(v), p);
    p += 4;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EmbeddingError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw EmbeddingError("write failed: " + path.string());

  const auto sidecar = ids_sidecar_path(path);
  std::ofstream ids_out(sidecar, std::ios::trunc);
  if (!ids_out) throw EmbeddingError("cannot open " + sidecar.string() + " for writing");
  ids_out << nlohmann::json(matrix.ids()).dump() << '\n';
  if (!ids_out) throw EmbeddingError("write failed: " + sidecar.string());
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix) {
  std::vector<float> out(matrix.values().begin(), matrix.values().end());
  const std::size_t d = matrix.dim();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    double sq = 0.0;
    for (float v : matrix.row(i)) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) {
      throw EmbeddingError("cannot normalize zero-norm row " + std::to_string(i), i);
    }
    for (std::size_t k = 0; k < d; ++k) {
      out[i * d + k] = static_cast<float>(out[i * d + k] / norm);
    }
  }
  return EmbeddingMatrix(d, std::move(out), matrix.ids());
}

EmbeddingMatrix slice_by_ids(const EmbeddingMatrix& matrix,
                             std::span<const std::string> ids) {
  std::vector<float> out;
  out.reserve(ids.size() * matrix.dim());
  for (const auto& id : ids) {
    auto idx = matrix.index_of(id);
    if (!idx) throw EmbeddingError(id + " not found");
    auto r = matrix.row(*idx);
    out.insert(out.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(matrix.dim(), std::move(out),
                         std::vector<std::string>(ids.begin(), ids.end()));
}

}  // namespace cfaudit
