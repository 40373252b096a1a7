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

#include "cfaudit/caption_editor.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cfaudit/error.hpp"

namespace cfaudit {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

void insert_mapping(std::map<std::string, std::string>& map, std::string from,
                    std::string to) {
  auto [it, inserted] = map.emplace(from, to);
  if (!inserted && it->second != to) {
    throw Error("lexicon maps '" + from + "' to both '" + it->second + "' and '" +
                to + "'");
  }
}

std::vector<std::pair<std::string, std::string>> read_pairs(
    const nlohmann::json& doc, const char* key) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!doc.contains(key)) return out;
  const auto& arr = doc.at(key);
  if (!arr.is_array()) throw Error(std::string("lexicon: '") + key + "' must be an array");
  for (const auto& entry : arr) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
        !entry[1].is_string()) {
      throw Error(std::string("lexicon: every '") + key +
                  "' entry must be a two-string array, got " + entry.dump());
    }
    for (const auto& term : entry) {
      const auto& s = term.get_ref<const std::string&>();
      if (s != ascii_lower(s)) {
        throw Error("lexicon term '" + s + "' is not a single lowercase word");
      }
    }
    out.emplace_back(entry[0].get<std::string>(), entry[1].get<std::string>());
  }
  return out;
}

}  // namespace

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

void GenderLexicon::add_pair(std::string_view masculine, std::string_view feminine) {
  add_masculine_only(masculine, feminine);
  add_feminine_only(feminine, masculine);
}

void GenderLexicon::add_masculine_only(std::string_view masculine,
                                       std::string_view feminine) {
  auto m = ascii_lower(masculine);
  auto w = ascii_lower(feminine);
  masculine_terms.insert(m);
  feminine_terms.insert(w);
  insert_mapping(to_feminine, m, w);
}

void GenderLexicon::add_feminine_only(std::string_view feminine,
                                      std::string_view masculine) {
  auto w = ascii_lower(feminine);
  auto m = ascii_lower(masculine);
  feminine_terms.insert(w);
  masculine_terms.insert(m);
  insert_mapping(to_masculine, w, m);
}

std::string_view to_string(CaptionGender g) {
  switch (g) {
    case CaptionGender::kMasculine: return "masculine";
    case CaptionGender::kFeminine: return "feminine";
    case CaptionGender::kNeutral: return "neutral";
    case CaptionGender::kMixed: return "mixed";
  }
  return "neutral";
}

GenderLexicon parse_lexicon(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("lexicon: ") + e.what());
  }
  if (!doc.is_object()) throw Error("lexicon: top level must be an object");
  GenderLexicon lex;
  for (auto& [m, w] : read_pairs(doc, "pairs")) lex.add_pair(m, w);
  for (auto& [m, w] : read_pairs(doc, "masculine_only")) lex.add_masculine_only(m, w);
  for (auto& [w, m] : read_pairs(doc, "feminine_only")) lex.add_feminine_only(w, m);
  validate_lexicon(lex);
  return lex;
}

GenderLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("lexicon not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_lexicon(ss.str());
}

LexiconReport validate_lexicon(const GenderLexicon& lex) {
  auto check_word = [](const std::string& term) {
    const auto tokens = tokenize_words(term);
    if (tokens.size() != 1 || tokens[0].length != term.size() ||
        term != ascii_lower(term)) {
      throw Error("lexicon term '" + term + "' is not a single lowercase word");
    }
  };
  for (const auto& m : lex.masculine_terms) {
    check_word(m);
    if (lex.feminine_terms.count(m)) {
      throw Error("lexicon term '" + m + "' is both masculine and feminine");
    }
    if (!lex.to_feminine.count(m)) {
      throw Error("masculine term '" + m + "' has no feminine mapping");
    }
  }
  for (const auto& w : lex.feminine_terms) {
    check_word(w);
    if (!lex.to_masculine.count(w)) {
      throw Error("feminine term '" + w + "' has no masculine mapping");
    }
  }
  for (const auto& [m, w] : lex.to_feminine) {
    if (!lex.masculine_terms.count(m)) {
      throw Error("mapping source '" + m + "' is not a masculine term");
    }
    if (!lex.feminine_terms.count(w)) {
      throw Error("mapping '" + m + "' -> '" + w + "' leaves the feminine set");
    }
  }
  for (const auto& [w, m] : lex.to_masculine) {
    if (!lex.feminine_terms.count(w)) {
      throw Error("mapping source '" + w + "' is not a feminine term");
    }
    if (!lex.masculine_terms.count(m)) {
      throw Error("mapping '" + w + "' -> '" + m + "' leaves the masculine set");
    }
  }

  LexiconReport report;
  for (const auto& [m, w] : lex.to_feminine) {
    if (lex.to_masculine.at(w) == m) {
      report.bijective_pairs.push_back(m);
    } else {
      report.asymmetric_pairs.push_back(m);
    }
  }
  for (const auto& [w, m] : lex.to_masculine) {
    if (lex.to_feminine.at(m) != w) report.asymmetric_feminine.push_back(w);
  }
  return report;
}

std::vector<Token> tokenize_words(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    tokens.push_back({begin, i - begin});
  }
  return tokens;
}

CaptionGender detect_gender(std::string_view caption, const GenderLexicon& lex) {
  bool masc = false;
  bool fem = false;
  for (const auto& t : tokenize_words(caption)) {
    const auto word = ascii_lower(caption.substr(t.begin, t.length));
    masc = masc || lex.masculine_terms.count(word) > 0;
    fem = fem || lex.feminine_terms.count(word) > 0;
  }
  if (masc && fem) return CaptionGender::kMixed;
  if (masc) return CaptionGender::kMasculine;
  if (fem) return CaptionGender::kFeminine;
  return CaptionGender::kNeutral;
}

std::string edit_caption(std::string_view caption, TargetGender target,
                         const GenderLexicon& lex) {
  const auto& mapping =
      target == TargetGender::kFeminine ? lex.to_feminine : lex.to_masculine;
  std::string out;
  out.reserve(caption.size() + 16);
  std::size_t cursor = 0;
  for (const auto& t : tokenize_words(caption)) {
    const auto original = caption.substr(t.begin, t.length);
    auto it = mapping.find(ascii_lower(original));
    if (it == mapping.end()) continue;
    out.append(caption.substr(cursor, t.begin - cursor));
    std::string replacement = it->second;
    if (original[0] >= 'A' && original[0] <= 'Z' && !replacement.empty() &&
        replacement[0] >= 'a' && replacement[0] <= 'z') {
      replacement[0] = static_cast<char>(replacement[0] - 'a' + 'A');
    }
    out += replacement;
    cursor = t.begin + t.length;
  }
  out.append(caption.substr(cursor));
  return out;
}

CaptionPair make_counterfactual_pair(std::string_view caption,
                                     const GenderLexicon& lex) {
  CaptionPair pair;
  pair.original = std::string(caption);
  pair.detected_gender = detect_gender(caption, lex);
  switch (pair.detected_gender) {
    case CaptionGender::kNeutral:
      pair.masculine = pair.original;
      pair.feminine = pair.original;
      break;
    case CaptionGender::kMasculine:
      pair.masculine = pair.original;
      pair.feminine = edit_caption(caption, TargetGender::kFeminine, lex);
      break;
    case CaptionGender::kFeminine:
      pair.masculine = edit_caption(caption, TargetGender::kMasculine, lex);
      pair.feminine = pair.original;
      break;
    case CaptionGender::kMixed:
      pair.masculine = edit_caption(caption, TargetGender::kMasculine, lex);
      pair.feminine = edit_caption(caption, TargetGender::kFeminine, lex);
      break;
  }
  return pair;
}

}  // namespace cfaudit
