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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cfaudit {

enum class Gender { kMan, kWoman, kUnknown };
enum class Provenance { kReal, kSynthetic };
/// Gender of the real image a synthetic record was inpainted from.
enum class SourceGender { kMan, kWoman, kNotApplicable };

std::string_view to_string(Gender g);
std::string_view to_string(Provenance p);
std::string_view to_string(SourceGender g);

struct EmbeddingRef {
  std::string file;
  std::size_t row = 0;

  friend bool operator==(const EmbeddingRef&, const EmbeddingRef&) = default;
};

/// One image-caption sample.
///
/// JSONL keys are the snake_case field names; enums are lowercase strings.
/// `source_id` links a synthetic record to its real source, `occupation` is
/// the ground-truth occupation label used by equality-of-opportunity audits.
/// Keys the toolkit does not know are kept verbatim in `extra`.
struct ManifestRecord {
  std::string id;
  std::string image_path;
  std::string caption;
  bool has_person = false;
  Gender gender = Gender::kUnknown;
  Provenance provenance = Provenance::kReal;
  SourceGender source_gender = SourceGender::kNotApplicable;
  std::optional<std::string> mask_path;
  std::optional<EmbeddingRef> embedding_ref;
  std::optional<std::string> source_id;
  std::optional<std::string> occupation;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Parses a JSONL manifest. Blank lines are skipped. Throws ManifestError
/// carrying the 1-based line number on malformed JSON, missing or mistyped
/// fields, invariant violations and duplicate ids.
std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path);
std::vector<ManifestRecord> parse_manifest(std::istream& in);

/// Checks the per-record invariants; throws ManifestError (line 0).
void validate_record(const ManifestRecord& record);

/// Known fields in declaration order (optional ones only when set), then
/// `extra` keys.
nlohmann::ordered_json record_to_json(const ManifestRecord& record);
ManifestRecord record_from_json(const nlohmann::json& obj);

void write_manifest(std::span<const ManifestRecord> records, std::ostream& out);
void write_manifest(std::span<const ManifestRecord> records,
                    const std::filesystem::path& path);

/// Verifies every embedding_ref row is inside its file (header read only).
/// Relative files resolve against `base_dir`.
void check_embedding_refs(std::span<const ManifestRecord> records,
                          const std::filesystem::path& base_dir);

// ---------------------------------------------------------------------------
// Fine-tuning partitions.

enum class GenderRelation { kChanged, kSame, kAny, kNotApplicable };

struct PartitionSelector {
  Provenance provenance;
  Gender gender;
  GenderRelation relation;

  friend bool operator==(const PartitionSelector&, const PartitionSelector&) = default;
};

enum class PartitionCode { c1 = 1, c2, c3, c4, c5, c6, c7, c8, c9, c10 };

inline constexpr std::array<PartitionCode, 10> kAllPartitionCodes = {
    PartitionCode::c1, PartitionCode::c2, PartitionCode::c3, PartitionCode::c4,
    PartitionCode::c5, PartitionCode::c6, PartitionCode::c7, PartitionCode::c8,
    PartitionCode::c9, PartitionCode::c10};

struct PartitionSpec {
  PartitionCode code;
  std::vector<PartitionSelector> selectors;
};

std::string to_string(PartitionCode code);
PartitionCode parse_partition_code(std::string_view text);

/// Selector rows for each code:
///   c1 RW            c2 RM            c3 RW+RM
///   c4 RW+SM(C)      c5 RW+SM(S)      c6 RM+SW(C)      c7 RM+SW(S)
///   c8 RW+RM+SW(C,S)+SM(C,S)          c9 SW(C)+SM(C)   c10 SW(S)+SM(S)
/// C = gender changed w.r.t. the source image, S = kept the same.
PartitionSpec partition_spec(PartitionCode code);

bool matches(const PartitionSelector& selector, const ManifestRecord& record);

/// Records matching any selector of `code`, in input order.
std::vector<ManifestRecord> build_partition(std::span<const ManifestRecord> records,
                                            PartitionCode code);

// ---------------------------------------------------------------------------
// Dataset versions.

/// Replaces `fraction` (0, 0.5 or 1) of the real person records by their two
/// synthetic counterparts (the synthetic records whose `source_id` is the
/// real record's id, one man and one woman).
///
/// Selection: person ids are sorted lexicographically, shuffled with
/// Fisher-Yates driven by std::mt19937_64(seed) (j = rng() % (i + 1) for i
/// from n-1 down to 1), and the first floor(fraction * n) are replaced.
/// Output keeps input order; a replaced record expands in place to its man
/// then woman counterpart. Synthetic inputs are emitted only as counterparts.
std::vector<ManifestRecord> dataset_version(std::span<const ManifestRecord> records,
                                            double fraction, std::uint64_t seed);

/// Ids of the real person records that dataset_version replaces.
std::vector<std::string> replaced_person_ids(std::span<const ManifestRecord> records,
                                             double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Occupation selection for equality-of-opportunity audits.

struct OccupationRecord {
  std::string name;
  std::uint64_t count_men = 0;
  std::uint64_t count_women = 0;
  std::uint64_t caption_appearances = 0;
  bool single_person_only = false;

  friend bool operator==(const OccupationRecord&, const OccupationRecord&) = default;
};

inline constexpr std::uint64_t kDefaultMinPerGender = 50;

/// Keeps occupations with strictly more than `min_per_gender` examples of
/// each gender, at least one caption appearance and single-person images.
std::vector<OccupationRecord> select_occupations(
    std::span<const OccupationRecord> occupations,
    std::uint64_t min_per_gender = kDefaultMinPerGender);

/// CSV with header `name,count_men,count_women,caption_appearances,single_person_only`.
std::vector<OccupationRecord> load_occupations(const std::filesystem::path& path);
std::vector<OccupationRecord> parse_occupations(std::istream& in);

/// Number of captions containing `name` as a case-insensitive whole-word
/// (word-sequence for multi-word names) match.
std::uint64_t count_caption_appearances(std::span<const ManifestRecord> records,
                                        std::string_view name);

}  // namespace cfaudit
