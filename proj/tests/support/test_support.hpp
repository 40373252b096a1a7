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

// Shared fixtures for the unit and acceptance suites: temp directories,
// seeded random data and manifest builders.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cfaudit/embedding_store.hpp"
#include "cfaudit/manifest.hpp"
#include "cfaudit/mask_ops.hpp"

namespace cfaudit::testing {

/// Directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cfaudit_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "r") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

inline EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng,
                                     double mean = 0.0, double stddev = 1.0,
                                     const std::string& prefix = "r") {
  std::normal_distribution<double> dist(mean, stddev);
  std::vector<float> v(n * d);
  for (auto& x : v) x = static_cast<float>(dist(rng));
  return EmbeddingMatrix(d, std::move(v), make_ids(n, prefix));
}

inline EmbeddingMatrix matrix_from_rows(const std::vector<std::vector<float>>& rows,
                                        const std::string& prefix = "r") {
  const std::size_t d = rows.empty() ? 1 : rows.front().size();
  std::vector<float> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return EmbeddingMatrix(d, std::move(v), make_ids(rows.size(), prefix));
}

inline BinaryMask random_mask(std::size_t w, std::size_t h, std::mt19937_64& rng,
                              double density = 0.2) {
  std::bernoulli_distribution coin(density);
  std::vector<std::uint8_t> bits(w * h);
  for (auto& b : bits) b = coin(rng) ? 1 : 0;
  return BinaryMask(w, h, std::move(bits));
}

inline ManifestRecord real_record(const std::string& id, Gender g, bool has_person = true) {
  ManifestRecord r;
  r.id = id;
  r.image_path = "images/" + id + ".jpg";
  r.caption = "a photo";
  r.has_person = has_person;
  r.gender = g;
  r.provenance = Provenance::kReal;
  r.source_gender = SourceGender::kNotApplicable;
  return r;
}

inline ManifestRecord synthetic_record(const std::string& id, Gender g, SourceGender source,
                                       const std::string& source_id = "") {
  ManifestRecord r;
  r.id = id;
  r.image_path = "images/" + id + ".jpg";
  r.caption = "a photo";
  r.has_person = true;
  r.gender = g;
  r.provenance = Provenance::kSynthetic;
  r.source_gender = source;
  if (!source_id.empty()) r.source_id = source_id;
  return r;
}

/// Real person records p0..p{persons-1} alternating gender, their man/woman
/// counterparts, and non-person records n0..n{non_person-1}.
inline std::vector<ManifestRecord> version_fixture(std::size_t non_person,
                                                   std::size_t persons) {
  std::vector<ManifestRecord> out;
  for (std::size_t i = 0; i < non_person; ++i) {
    out.push_back(real_record("n" + std::to_string(i), Gender::kUnknown, false));
  }
  for (std::size_t i = 0; i < persons; ++i) {
    const auto id = "p" + std::to_string(i);
    const Gender g = i % 2 == 0 ? Gender::kWoman : Gender::kMan;
    out.push_back(real_record(id, g));
    const SourceGender src = g == Gender::kWoman ? SourceGender::kWoman : SourceGender::kMan;
    out.push_back(synthetic_record(id + "_m", Gender::kMan, src, id));
    out.push_back(synthetic_record(id + "_w", Gender::kWoman, src, id));
  }
  return out;
}

struct ProfileFixture {
  std::filesystem::path manifest;
  std::filesystem::path prompts;
  std::filesystem::path embeddings;
  std::filesystem::path occupations;
};

/// `per_gender` men and women with embeddings, occupation labels cycling
/// through `occupations`, and prompts for person/man/woman plus each
/// occupation. With `shared` both genders use the same embedding rows.
inline ProfileFixture write_profile_fixture(const std::filesystem::path& dir,
                                            std::size_t per_gender, std::size_t dim,
                                            std::mt19937_64& rng, bool shared = false,
                                            const std::vector<std::string>& occupations = {
                                                "dancer", "nurse"}) {
  ProfileFixture f{dir / "people.jsonl", dir / "prompts.bin", dir / "people.bin",
                   dir / "occupations.csv"};
  const EmbeddingMatrix base = random_matrix(per_gender, dim, rng, 0.0, 1.0, "b");
  std::vector<float> values;
  std::vector<std::string> ids;
  std::vector<ManifestRecord> records;
  for (std::size_t g = 0; g < 2; ++g) {
    const EmbeddingMatrix own = shared ? base : random_matrix(per_gender, dim, rng, 0.2 * g);
    for (std::size_t i = 0; i < per_gender; ++i) {
      const std::string id = (g == 0 ? "m" : "w") + std::to_string(i);
      auto r = real_record(id, g == 0 ? Gender::kMan : Gender::kWoman);
      r.embedding_ref = EmbeddingRef{f.embeddings.filename().string(), ids.size()};
      r.occupation = occupations[i % occupations.size()];
      records.push_back(r);
      const auto row = own.row(i);
      values.insert(values.end(), row.begin(), row.end());
      ids.push_back(id);
    }
  }
  write_embeddings(EmbeddingMatrix(dim, std::move(values), std::move(ids)), f.embeddings);
  write_manifest(records, f.manifest);

  std::vector<std::string> prompt_ids = {"person", "man", "woman"};
  prompt_ids.insert(prompt_ids.end(), occupations.begin(), occupations.end());
  auto prompts = random_matrix(prompt_ids.size(), dim, rng, 0.0, 1.0, "p");
  write_embeddings(EmbeddingMatrix(dim, std::vector<float>(prompts.values().begin(),
                                                           prompts.values().end()),
                                   prompt_ids),
                   f.prompts);

  std::string csv = "name,count_men,count_women,caption_appearances,single_person_only\n";
  for (const auto& o : occupations) csv += o + ",100,100,10,true\n";
  write_file(f.occupations, csv);
  return f;
}

}  // namespace cfaudit::testing
