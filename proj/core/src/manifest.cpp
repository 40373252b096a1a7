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

#include "cfaudit/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cfaudit/caption_editor.hpp"
#include "cfaudit/embedding_store.hpp"
#include "cfaudit/error.hpp"

namespace cfaudit {
namespace {

constexpr std::array<std::string_view, 7> kRequired = {
    "id", "image_path", "caption", "has_person", "gender", "provenance", "source_gender"};
constexpr std::array<std::string_view, 4> kOptional = {
    "mask_path", "embedding_ref", "source_id", "occupation"};

bool is_known_key(std::string_view key) {
  return std::find(kRequired.begin(), kRequired.end(), key) != kRequired.end() ||
         std::find(kOptional.begin(), kOptional.end(), key) != kOptional.end();
}

const std::string& get_string(const nlohmann::json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw Error(std::string("field ") + key + " must be a string");
  return v.get_ref<const std::string&>();
}

Gender parse_gender(const std::string& s) {
  if (s == "man") return Gender::kMan;
  if (s == "woman") return Gender::kWoman;
  if (s == "unknown") return Gender::kUnknown;
  throw Error("gender must be one of man, woman, unknown (got '" + s + "')");
}

Provenance parse_provenance(const std::string& s) {
  if (s == "real") return Provenance::kReal;
  if (s == "synthetic") return Provenance::kSynthetic;
  throw Error("provenance must be real or synthetic (got '" + s + "')");
}

SourceGender parse_source_gender(const std::string& s) {
  if (s == "man") return SourceGender::kMan;
  if (s == "woman") return SourceGender::kWoman;
  if (s == "not_applicable") return SourceGender::kNotApplicable;
  throw Error("source_gender must be one of man, woman, not_applicable (got '" + s +
              "')");
}

std::optional<Gender> as_gender(SourceGender g) {
  switch (g) {
    case SourceGender::kMan: return Gender::kMan;
    case SourceGender::kWoman: return Gender::kWoman;
    case SourceGender::kNotApplicable: return std::nullopt;
  }
  return std::nullopt;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
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
  fields.push_back(std::move(cur));
  return fields;
}

std::uint64_t parse_count(const std::string& text, std::size_t line, const char* what) {
  if (text.empty() || !std::all_of(text.begin(), text.end(),
                                   [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error("occupations line " + std::to_string(line) + ": " + what +
                " must be a non-negative integer (got '" + text + "')");
  }
  return std::stoull(text);
}

std::string trim(std::string s) {
  const auto ws = " \t\r";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

}  // namespace

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::kMan: return "man";
    case Gender::kWoman: return "woman";
    case Gender::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::kReal ? "real" : "synthetic";
}

std::string_view to_string(SourceGender g) {
  switch (g) {
    case SourceGender::kMan: return "man";
    case SourceGender::kWoman: return "woman";
    case SourceGender::kNotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

ManifestRecord record_from_json(const nlohmann::json& obj) {
  if (!obj.is_object()) throw Error("record must be a JSON object");
  for (auto key : kRequired) {
    if (!obj.contains(key)) throw Error("missing " + std::string(key));
  }
  ManifestRecord r;
  r.id = get_string(obj, "id");
  if (r.id.empty()) throw Error("field id must be non-empty");
  r.image_path = get_string(obj, "image_path");
  r.caption = get_string(obj, "caption");
  if (!obj.at("has_person").is_boolean()) {
    throw Error("field has_person must be a boolean");
  }
  r.has_person = obj.at("has_person").get<bool>();
  r.gender = parse_gender(get_string(obj, "gender"));
  r.provenance = parse_provenance(get_string(obj, "provenance"));
  r.source_gender = parse_source_gender(get_string(obj, "source_gender"));

  auto optional_string = [&](const char* key) -> std::optional<std::string> {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_string(obj, key);
  };
  r.mask_path = optional_string("mask_path");
  r.source_id = optional_string("source_id");
  r.occupation = optional_string("occupation");
  if (obj.contains("embedding_ref") && !obj.at("embedding_ref").is_null()) {
    const auto& ref = obj.at("embedding_ref");
    if (!ref.is_object() || !ref.contains("file") || !ref.contains("row") ||
        !ref.at("file").is_string() || !ref.at("row").is_number_unsigned()) {
      throw Error("field embedding_ref must be {\"file\": string, \"row\": non-negative integer}");
    }
    r.embedding_ref = EmbeddingRef{ref.at("file").get<std::string>(),
                                   ref.at("row").get<std::size_t>()};
  }
  for (const auto& [key, value] : obj.items()) {
    if (!is_known_key(key)) r.extra[key] = value;
  }
  return r;
}

void validate_record(const ManifestRecord& r) {
  auto fail = [&](const std::string& rule) {
    throw ManifestError(0, "record '" + r.id + "': " + rule);
  };
  if (r.provenance == Provenance::kReal &&
      r.source_gender != SourceGender::kNotApplicable) {
    fail("real records must have source_gender not_applicable");
  }
  if (r.provenance == Provenance::kSynthetic) {
    if (r.gender == Gender::kUnknown) fail("synthetic records need gender man or woman");
    if (r.source_gender == SourceGender::kNotApplicable) {
      fail("synthetic records need source_gender man or woman");
    }
  }
}

std::vector<ManifestRecord> parse_manifest(std::istream& in) {
  std::vector<ManifestRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(line_no, std::string("malformed JSON: ") + e.what());
    }
    ManifestRecord r;
    try {
      r = record_from_json(obj);
      validate_record(r);
    } catch (const ManifestError& e) {
      throw ManifestError(line_no, e.what());
    } catch (const Error& e) {
      throw ManifestError(line_no, e.what());
    }
    if (!seen.insert(r.id).second) {
      throw ManifestError(line_no, "duplicate id '" + r.id + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(0, "cannot open manifest " + path.string());
  return parse_manifest(in);
}

nlohmann::ordered_json record_to_json(const ManifestRecord& r) {
  nlohmann::ordered_json obj;
  obj["id"] = r.id;
  obj["image_path"] = r.image_path;
  obj["caption"] = r.caption;
  obj["has_person"] = r.has_person;
  obj["gender"] = to_string(r.gender);
  obj["provenance"] = to_string(r.provenance);
  obj["source_gender"] = to_string(r.source_gender);
  if (r.mask_path) obj["mask_path"] = *r.mask_path;
  if (r.embedding_ref) {
    obj["embedding_ref"] = {{"file", r.embedding_ref->file}, {"row", r.embedding_ref->row}};
  }
  if (r.source_id) obj["source_id"] = *r.source_id;
  if (r.occupation) obj["occupation"] = *r.occupation;
  for (const auto& [key, value] : r.extra.items()) {
    obj[key] = nlohmann::ordered_json::parse(value.dump());
  }
  return obj;
}

void write_manifest(std::span<const ManifestRecord> records, std::ostream& out) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void write_manifest(std::span<const ManifestRecord> records,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_manifest(records, out);
  if (!out) throw Error("write failed: " + path.string());
}

void check_embedding_refs(std::span<const ManifestRecord> records,
                          const std::filesystem::path& base_dir) {
  std::map<std::filesystem::path, EmbeddingHeader> headers;
  for (const auto& r : records) {
    if (!r.embedding_ref) continue;
    const auto file = resolve(base_dir, r.embedding_ref->file);
    auto it = headers.find(file);
    if (it == headers.end()) {
      try {
        it = headers.emplace(file, read_embedding_header(file)).first;
      } catch (const Error& e) {
        throw ManifestError(0, "record '" + r.id + "': " + e.what());
      }
    }
    if (r.embedding_ref->row >= it->second.rows) {
      throw ManifestError(0, "record '" + r.id + "': embedding row " +
                                 std::to_string(r.embedding_ref->row) +
                                 " out of range for " + file.string() + " (" +
                                 std::to_string(it->second.rows) + " rows)");
    }
  }
}

// ---------------------------------------------------------------------------

std::string to_string(PartitionCode code) {
  return "c" + std::to_string(static_cast<int>(code));
}

PartitionCode parse_partition_code(std::string_view text) {
  for (auto code : kAllPartitionCodes) {
    if (text == to_string(code)) return code;
  }
  throw Error("unknown partition code '" + std::string(text) + "'");
}

PartitionSpec partition_spec(PartitionCode code) {
  using P = Provenance;
  using G = Gender;
  using R = GenderRelation;
  const PartitionSelector rw{P::kReal, G::kWoman, R::kNotApplicable};
  const PartitionSelector rm{P::kReal, G::kMan, R::kNotApplicable};
  auto sw = [](R rel) { return PartitionSelector{P::kSynthetic, G::kWoman, rel}; };
  auto sm = [](R rel) { return PartitionSelector{P::kSynthetic, G::kMan, rel}; };

  switch (code) {
    case PartitionCode::c1: return {code, {rw}};
    case PartitionCode::c2: return {code, {rm}};
    case PartitionCode::c3: return {code, {rw, rm}};
    case PartitionCode::c4: return {code, {rw, sm(R::kChanged)}};
    case PartitionCode::c5: return {code, {rw, sm(R::kSame)}};
    case PartitionCode::c6: return {code, {rm, sw(R::kChanged)}};
    case PartitionCode::c7: return {code, {rm, sw(R::kSame)}};
    case PartitionCode::c8: return {code, {rw, rm, sw(R::kAny), sm(R::kAny)}};
    case PartitionCode::c9: return {code, {sw(R::kChanged), sm(R::kChanged)}};
    case PartitionCode::c10: return {code, {sw(R::kSame), sm(R::kSame)}};
  }
  throw Error("unknown partition code");
}

bool matches(const PartitionSelector& sel, const ManifestRecord& r) {
  if (r.provenance != sel.provenance || r.gender != sel.gender) return false;
  const auto source = as_gender(r.source_gender);
  switch (sel.relation) {
    case GenderRelation::kNotApplicable: return !source.has_value();
    case GenderRelation::kAny: return source.has_value();
    case GenderRelation::kChanged: return source.has_value() && *source != r.gender;
    case GenderRelation::kSame: return source.has_value() && *source == r.gender;
  }
  return false;
}

std::vector<ManifestRecord> build_partition(std::span<const ManifestRecord> records,
                                            PartitionCode code) {
  const auto spec = partition_spec(code);
  std::vector<ManifestRecord> out;
  for (const auto& r : records) {
    const bool hit = std::any_of(spec.selectors.begin(), spec.selectors.end(),
                                 [&](const auto& s) { return matches(s, r); });
    if (hit) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> replaced_person_ids(std::span<const ManifestRecord> records,
                                             double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("fraction must lie in [0, 1]");
  }
  std::vector<std::string> ids;
  for (const auto& r : records) {
    if (r.provenance == Provenance::kReal && r.has_person) ids.push_back(r.id);
  }
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ids.size())));
  ids.resize(k);
  return ids;
}

std::vector<ManifestRecord> dataset_version(std::span<const ManifestRecord> records,
                                            double fraction, std::uint64_t seed) {
  const auto chosen = replaced_person_ids(records, fraction, seed);
  const std::unordered_set<std::string> replaced(chosen.begin(), chosen.end());

  struct Counterparts {
    const ManifestRecord* man = nullptr;
    const ManifestRecord* woman = nullptr;
  };
  std::unordered_map<std::string, Counterparts> by_source;
  for (const auto& r : records) {
    if (r.provenance != Provenance::kSynthetic || !r.source_id ||
        !replaced.count(*r.source_id)) {
      continue;
    }
    auto& slot = by_source[*r.source_id];
    auto& target = r.gender == Gender::kMan ? slot.man : slot.woman;
    if (target) {
      throw Error("source '" + *r.source_id + "' has more than one synthetic " +
                  std::string(to_string(r.gender)) + " counterpart");
    }
    target = &r;
  }
  for (const auto& id : chosen) {
    auto it = by_source.find(id);
    if (it == by_source.end() || !it->second.man || !it->second.woman) {
      throw Error("missing synthetic counterpart for source '" + id + "'");
    }
  }

  std::vector<ManifestRecord> out;
  out.reserve(records.size() + chosen.size());
  for (const auto& r : records) {
    if (r.provenance == Provenance::kSynthetic) continue;
    if (r.has_person && replaced.count(r.id)) {
      const auto& cp = by_source.at(r.id);
      out.push_back(*cp.man);
      out.push_back(*cp.woman);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<OccupationRecord> select_occupations(
    std::span<const OccupationRecord> occupations, std::uint64_t min_per_gender) {
  std::vector<OccupationRecord> out;
  for (const auto& o : occupations) {
    if (o.count_men > min_per_gender && o.count_women > min_per_gender &&
        o.caption_appearances > 0 && o.single_person_only) {
      out.push_back(o);
    }
  }
  return out;
}

std::vector<OccupationRecord> parse_occupations(std::istream& in) {
  static const std::vector<std::string> kHeader = {
      "name", "count_men", "count_women", "caption_appearances", "single_person_only"};
  std::vector<OccupationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      if (fields != kHeader) {
        throw Error("occupations: expected header "
                    "name,count_men,count_women,caption_appearances,single_person_only");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw Error("occupations line " + std::to_string(line_no) + ": expected 5 fields");
    }
    OccupationRecord o;
    o.name = fields[0];
    o.count_men = parse_count(fields[1], line_no, "count_men");
    o.count_women = parse_count(fields[2], line_no, "count_women");
    o.caption_appearances = parse_count(fields[3], line_no, "caption_appearances");
    const auto flag = ascii_lower(fields[4]);
    if (flag == "true" || flag == "1") {
      o.single_person_only = true;
    } else if (flag == "false" || flag == "0") {
      o.single_person_only = false;
    } else {
      throw Error("occupations line " + std::to_string(line_no) +
                  ": single_person_only must be true/false");
    }
    out.push_back(std::move(o));
  }
  if (!header_seen) throw Error("occupations: missing header");
  return out;
}

std::vector<OccupationRecord> load_occupations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open occupations table " + path.string());
  return parse_occupations(in);
}

std::uint64_t count_caption_appearances(std::span<const ManifestRecord> records,
                                        std::string_view name) {
  std::vector<std::string> needle;
  for (const auto& t : tokenize_words(name)) {
    needle.push_back(ascii_lower(name.substr(t.begin, t.length)));
  }
  if (needle.empty()) return 0;
  std::uint64_t hits = 0;
  for (const auto& r : records) {
    std::vector<std::string> words;
    for (const auto& t : tokenize_words(r.caption)) {
      words.push_back(ascii_lower(std::string_view(r.caption).substr(t.begin, t.length)));
    }
    if (words.size() < needle.size()) continue;
    for (std::size_t i = 0; i + needle.size() <= words.size(); ++i) {
      if (std::equal(needle.begin(), needle.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

}  // namespace cfaudit
