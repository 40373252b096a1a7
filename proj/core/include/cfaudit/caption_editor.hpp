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

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cfaudit {

/// Gender keyword sets and the substitution maps between them.
///
/// `to_feminine` maps every masculine term to a feminine one and
/// `to_masculine` the reverse. The two maps need not be inverses: entries
/// such as mister -> madam -> sir are allowed and reported as asymmetric by
/// validate_lexicon(). All terms are stored lowercase.
struct GenderLexicon {
  std::set<std::string> masculine_terms;
  std::set<std::string> feminine_terms;
  std::map<std::string, std::string> to_feminine;
  std::map<std::string, std::string> to_masculine;

  /// Adds a two-way correspondence.
  void add_pair(std::string_view masculine, std::string_view feminine);
  /// Adds masculine -> feminine only.
  void add_masculine_only(std::string_view masculine, std::string_view feminine);
  /// Adds feminine -> masculine only.
  void add_feminine_only(std::string_view feminine, std::string_view masculine);
};

enum class CaptionGender { kMasculine, kFeminine, kNeutral, kMixed };
enum class TargetGender { kMasculine, kFeminine };

std::string_view to_string(CaptionGender g);

struct CaptionPair {
  std::string original;
  std::string masculine;
  std::string feminine;
  CaptionGender detected_gender = CaptionGender::kNeutral;
};

struct LexiconReport {
  std::vector<std::string> bijective_pairs;   // masculine terms w with f2(f1(w)) = w
  std::vector<std::string> asymmetric_pairs;  // the remaining masculine terms
  std::vector<std::string> asymmetric_feminine;  // feminine w with f1(f2(w)) != w
};

/// Parses `{"pairs": [[m, w], ...], "masculine_only": [[m, w], ...],
/// "feminine_only": [[w, m], ...]}` and validates the result.
GenderLexicon load_lexicon(const std::filesystem::path& path);
GenderLexicon parse_lexicon(std::string_view json_text);

/// Throws Error on overlapping sets, maps whose domain differs from their
/// keyword set, or images outside the opposite set.
LexiconReport validate_lexicon(const GenderLexicon& lexicon);

/// Word span inside a caption. A word is a maximal run of ASCII letters or
/// non-ASCII bytes; everything else separates words.
struct Token {
  std::size_t begin;
  std::size_t length;
};

std::vector<Token> tokenize_words(std::string_view text);
std::string ascii_lower(std::string_view text);

CaptionGender detect_gender(std::string_view caption, const GenderLexicon& lexicon);

/// Replaces every opposite-gender keyword via the matching map. All other
/// bytes are copied unchanged; a leading capital on a keyword is kept.
std::string edit_caption(std::string_view caption, TargetGender target,
                         const GenderLexicon& lexicon);

CaptionPair make_counterfactual_pair(std::string_view caption,
                                     const GenderLexicon& lexicon);

}  // namespace cfaudit
