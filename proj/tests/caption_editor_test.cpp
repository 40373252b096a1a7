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

#include <random>

#include <gtest/gtest.h>

#include "cfaudit/caption_editor.hpp"
#include "cfaudit/error.hpp"

namespace cfaudit {
namespace {

const GenderLexicon& lexicon() {
  static const GenderLexicon lex = load_lexicon(CFAUDIT_LEXICON_PATH);
  return lex;
}

struct Row {
  const char* original;
  const char* masculine;
  const char* feminine;
  CaptionGender gender;
};

const Row kTable[] = {
    {"man buying some fruit on the market , selective focus",
     "man buying some fruit on the market , selective focus",
     "woman buying some fruit on the market , selective focus", CaptionGender::kMasculine},
    {"actor in garment with artist", "actor in garment with artist",
     "actress in garment with artist", CaptionGender::kMasculine},
    {"painting of a young woman dressed as video game series",
     "painting of a young man dressed as video game series",
     "painting of a young woman dressed as video game series", CaptionGender::kFeminine},
    {"actress with a beautiful smile", "actor with a beautiful smile",
     "actress with a beautiful smile", CaptionGender::kFeminine},
    {"person , was surprised by the staff", "person , was surprised by the staff",
     "person , was surprised by the staff", CaptionGender::kNeutral},
};

TEST(CaptionEditor, SupplementaryTable) {
  for (const auto& row : kTable) {
    const auto pair = make_counterfactual_pair(row.original, lexicon());
    EXPECT_EQ(pair.original, row.original);
    EXPECT_EQ(pair.masculine, row.masculine);
    EXPECT_EQ(pair.feminine, row.feminine);
    EXPECT_EQ(pair.detected_gender, row.gender) << row.original;
  }
}

TEST(CaptionEditor, DetectGender) {
  EXPECT_EQ(detect_gender("the king greeted the queen", lexicon()), CaptionGender::kMixed);
  EXPECT_EQ(detect_gender("", lexicon()), CaptionGender::kNeutral);
  EXPECT_EQ(detect_gender("He smiles", lexicon()), CaptionGender::kMasculine);
  // Substrings inside longer words are not keywords.
  EXPECT_EQ(detect_gender("a manual for the mantle", lexicon()), CaptionGender::kNeutral);
}

TEST(CaptionEditor, EmptyCaption) {
  const auto pair = make_counterfactual_pair("", lexicon());
  EXPECT_EQ(pair.masculine, "");
  EXPECT_EQ(pair.feminine, "");
  EXPECT_EQ(pair.detected_gender, CaptionGender::kNeutral);
}

TEST(CaptionEditor, KeepsCaseAndPunctuation) {
  EXPECT_EQ(edit_caption("Man, with his dog.", TargetGender::kFeminine, lexicon()),
            "Woman, with her dog.");
  EXPECT_EQ(edit_caption("a waitress-like pose", TargetGender::kMasculine, lexicon()),
            "a waiter-like pose");
}

TEST(CaptionEditor, IdempotentAndRoundTrip) {
  const std::vector<std::string> neutral = {"a", "photo", "of", "the", "street", "smiling",
                                            "with", ",", "in", "red"};
  const std::vector<std::string> masc = {"man", "boy", "actor", "king", "father", "waiter"};
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::string caption;
    std::uniform_int_distribution<int> len(1, 8);
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      if (!caption.empty()) caption += ' ';
      caption += rng() % 3 == 0 ? masc[rng() % masc.size()] : neutral[rng() % neutral.size()];
    }
    const auto fem = edit_caption(caption, TargetGender::kFeminine, lexicon());
    EXPECT_EQ(edit_caption(fem, TargetGender::kFeminine, lexicon()), fem);
    EXPECT_EQ(edit_caption(fem, TargetGender::kMasculine, lexicon()), caption);
    EXPECT_EQ(edit_caption(caption, TargetGender::kMasculine, lexicon()), caption);
    EXPECT_NE(detect_gender(fem, lexicon()), CaptionGender::kMasculine);
  }
}

TEST(Lexicon, DefaultFileValidates) {
  const auto report = validate_lexicon(lexicon());
  EXPECT_GT(report.bijective_pairs.size(), 20u);
  for (const char* w : {"man", "policeman", "businessman", "paperboy", "actor", "waiter"}) {
    EXPECT_TRUE(lexicon().masculine_terms.count(w)) << w;
  }
  EXPECT_EQ(lexicon().to_masculine.at("queen"), "king");
  EXPECT_EQ(lexicon().to_masculine.at("female"), "male");
}

TEST(Lexicon, SingleBijectivePair) {
  GenderLexicon lex;
  lex.add_pair("man", "woman");
  const auto report = validate_lexicon(lex);
  EXPECT_EQ(report.bijective_pairs, std::vector<std::string>{"man"});
  EXPECT_TRUE(report.asymmetric_pairs.empty());
}

TEST(Lexicon, MissingImageIsDomainError) {
  GenderLexicon lex;
  lex.add_pair("man", "woman");
  lex.masculine_terms.insert("girl");
  EXPECT_THROW(validate_lexicon(lex), Error);
}

TEST(Lexicon, AsymmetricPairReported) {
  GenderLexicon lex;
  lex.add_pair("man", "woman");
  lex.add_masculine_only("boy", "woman");
  const auto report = validate_lexicon(lex);
  EXPECT_EQ(report.asymmetric_pairs, std::vector<std::string>{"boy"});
  EXPECT_EQ(report.bijective_pairs, std::vector<std::string>{"man"});
}

TEST(Lexicon, RejectsBadInput) {
  EXPECT_THROW(parse_lexicon(R"({"pairs": [["man", "man"]]})"), Error);
  EXPECT_THROW(parse_lexicon(R"({"pairs": [["Man", "woman"]]})"), Error);
  EXPECT_THROW(parse_lexicon(R"({"pairs": [["two words", "woman"]]})"), Error);
  EXPECT_THROW(parse_lexicon("not json"), Error);
  EXPECT_THROW(load_lexicon("/nonexistent/lexicon.json"), Error);
}

TEST(Tokenizer, WordsAndSeparators) {
  const std::string text = "a man's  café, ok";
  std::vector<std::string> words;
  for (const auto& t : tokenize_words(text)) words.push_back(text.substr(t.begin, t.length));
  EXPECT_EQ(words, (std::vector<std::string>{"a", "man", "s", "café", "ok"}));
  EXPECT_EQ(ascii_lower("MiXeD"), "mixed");
}

}  // namespace
}  // namespace cfaudit
