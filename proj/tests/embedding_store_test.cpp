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

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cfaudit/embedding_store.hpp"
#include "cfaudit/error.hpp"
#include "test_support.hpp"

namespace cfaudit {
namespace {

using testing::matrix_from_rows;
using testing::random_matrix;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

TEST(EmbeddingCodec, RoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const auto m = random_matrix(7, 5, rng);
  write_embeddings(m, dir / "e.bin");
  EXPECT_EQ(read_embeddings(dir / "e.bin"), m);
}

TEST(EmbeddingCodec, EmptyMatrix) {
  TempDir dir;
  const EmbeddingMatrix m(3, {}, {});
  write_embeddings(m, dir / "e.bin");
  const auto back = read_embeddings(dir / "e.bin");
  EXPECT_EQ(back.rows(), 0u);
  EXPECT_EQ(back.dim(), 3u);
}

TEST(EmbeddingCodec, SizeAndByteLayout) {
  TempDir dir;
  const auto m = matrix_from_rows({{1.0f, 2.0f, 3.0f}});
  write_embeddings(m, dir / "a.bin");
  write_embeddings(m, dir / "b.bin");
  const auto bytes = read_file(dir / "a.bin");
  ASSERT_EQ(bytes.size(), 24u);
  EXPECT_EQ(bytes.substr(0, 4), "EMB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  // 1.0f little-endian is 00 00 80 3f.
  EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x3f);
  EXPECT_EQ(bytes, read_file(dir / "b.bin"));
  EXPECT_EQ(read_file(dir / "a.bin.ids.json"), read_file(dir / "b.bin.ids.json"));
}

std::string header(std::uint32_t n, std::uint32_t d) {
  std::string h = "EMB1";
  for (std::uint32_t v : {n, d}) {
    for (int i = 0; i < 4; ++i) h.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  return h;
}

TEST(EmbeddingCodec, TruncatedPayload) {
  TempDir dir;
  write_file(dir / "t.bin", header(2, 4) + std::string(7 * 4, '\0'));
  write_file(dir / "t.bin.ids.json", R"(["a","b"])");
  try {
    read_embeddings(dir / "t.bin");
    FAIL() << "expected truncation error";
  } catch (const EmbeddingError& e) {
    EXPECT_EQ(e.row(), 1u);
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(EmbeddingCodec, MalformedFiles) {
  TempDir dir;
  write_file(dir / "m.bin", "EMB2" + header(0, 1).substr(4));
  EXPECT_THROW(read_embeddings(dir / "m.bin"), EmbeddingError);
  write_file(dir / "s.bin", "EMB");
  EXPECT_THROW(read_embeddings(dir / "s.bin"), EmbeddingError);
  write_file(dir / "x.bin", header(1, 1) + std::string(8, '\0'));
  write_file(dir / "x.bin.ids.json", R"(["a"])");
  EXPECT_THROW(read_embeddings(dir / "x.bin"), EmbeddingError);
  write_file(dir / "c.bin", header(1, 1) + std::string(4, '\0'));
  write_file(dir / "c.bin.ids.json", R"(["a","b"])");
  EXPECT_THROW(read_embeddings(dir / "c.bin"), EmbeddingError);
}

TEST(EmbeddingCodec, NonFiniteRejected) {
  TempDir dir;
  const auto m = matrix_from_rows({{1.0f, 2.0f},
                                   {3.0f, std::numeric_limits<float>::quiet_NaN()}});
  try {
    write_embeddings(m, dir / "n.bin");
    FAIL();
  } catch (const EmbeddingError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
  // Non-finite values already on disk are reported on read.
  const float inf = std::numeric_limits<float>::infinity();
  std::string payload(8, '\0');
  std::memcpy(payload.data() + 4, &inf, 4);
  write_file(dir / "i.bin", header(2, 1) + payload);
  write_file(dir / "i.bin.ids.json", R"(["a","b"])");
  try {
    read_embeddings(dir / "i.bin");
    FAIL();
  } catch (const EmbeddingError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(EmbeddingMatrix, ShapeInvariants) {
  EXPECT_THROW(EmbeddingMatrix(2, {1.0f, 2.0f, 3.0f}, {"a", "b"}), EmbeddingError);
  EXPECT_THROW(EmbeddingMatrix(1, {1.0f, 2.0f}, {"a", "a"}), EmbeddingError);
  EXPECT_THROW(EmbeddingMatrix(0, {}, {}), EmbeddingError);
}

TEST(L2Normalize, Examples) {
  const auto m = l2_normalize(matrix_from_rows({{3.0f, 4.0f}}));
  EXPECT_FLOAT_EQ(m.row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(m.row(0)[1], 0.8f);
  const auto q = l2_normalize(matrix_from_rows({{1.0f, 1.0f, 1.0f, 1.0f}}));
  for (float v : q.row(0)) EXPECT_EQ(v, 0.5f);
  EXPECT_THROW(l2_normalize(matrix_from_rows({{1.0f, 0.0f}, {0.0f, 0.0f}})), EmbeddingError);
}

TEST(L2Normalize, Idempotent) {
  std::mt19937_64 rng(3);
  const auto once = l2_normalize(random_matrix(20, 6, rng));
  const auto twice = l2_normalize(once);
  for (std::size_t i = 0; i < once.values().size(); ++i) {
    EXPECT_NEAR(once.values()[i], twice.values()[i], 1e-6);
  }
}

TEST(SliceByIds, OrderAndMissing) {
  const auto m = matrix_from_rows({{1.0f}, {2.0f}, {3.0f}});
  const std::vector<std::string> same = {"r0", "r1", "r2"};
  EXPECT_EQ(slice_by_ids(m, same), m);
  const std::vector<std::string> reversed = {"r2", "r1", "r0"};
  const auto r = slice_by_ids(m, reversed);
  EXPECT_EQ(r.row(0)[0], 3.0f);
  EXPECT_EQ(r.row(2)[0], 1.0f);
  const std::vector<std::string> missing = {"zzz"};
  try {
    slice_by_ids(m, missing);
    FAIL();
  } catch (const EmbeddingError& e) {
    EXPECT_STREQ(e.what(), "zzz not found");
  }
}

}  // namespace
}  // namespace cfaudit
