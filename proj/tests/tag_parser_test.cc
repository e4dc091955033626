// Copyright 2026 The mythtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <string>

#include "mythtag/io.h"
#include "mythtag/tag_parser.h"
#include "test_support.h"

namespace mythtag {
namespace {

constexpr int kPropertyCases = 2000;

TEST(TagParser, RoundTripFromPassage) {
  std::mt19937_64 rng(20260101);
  for (int i = 0; i < kPropertyCases; ++i) {
    ParsedPassage p = testing::RandomPassage(rng);
    std::string tagged = RenderInline(p);
    ASSERT_EQ(ParseInline(tagged, ParseMode::kStrict), p) << tagged;
  }
}

TEST(TagParser, RoundTripFromCanonicalText) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < kPropertyCases; ++i) {
    std::string t = RenderInline(testing::RandomPassage(rng));
    ASSERT_EQ(RenderInline(ParseInline(t, ParseMode::kStrict)), t);
  }
}

TEST(TagParser, StrippingTagsYieldsPlainText) {
  std::mt19937_64 rng(99);
  const std::regex tag(R"(</?mythEntity[^>]*>)");
  for (int i = 0; i < kPropertyCases; ++i) {
    std::string t = RenderInline(testing::RandomPassage(rng));
    ASSERT_EQ(std::regex_replace(t, tag, ""),
              ParseInline(t, ParseMode::kStrict).plain_text);
  }
}

TEST(TagParser, ModelOutputWithStraySpace) {
  std::string tagged = ReadFile(testing::DataDir() / "p1" / "p1_tagged.txt");
  ParsedPassage p = ParseInline(tagged, ParseMode::kLenient);
  EXPECT_EQ(p.plain_text, ReadFile(testing::DataDir() / "p1" / "p1.txt"));
  ASSERT_EQ(p.annotations.size(), 5u);
  const std::vector<std::pair<std::string, EntityType>> expected = {
      {"Calypso", EntityType::kLocation}, {"Minos", EntityType::kDeity},
      {"Calypso", EntityType::kLocation}, {"Minos", EntityType::kDeity},
      {"mythologie océanique", EntityType::kConcept}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(p.annotations[i].surface, expected[i].first);
    EXPECT_EQ(p.annotations[i].type, expected[i].second);
  }
  EXPECT_TRUE(p.warnings.empty());
  // The stray space after '=' is outside the canonical grammar.
  try {
    ParseInline(tagged, ParseMode::kStrict);
    FAIL();
  } catch (const TagParseError& e) {
    EXPECT_EQ(e.kind(), TagErrorKind::kMalformedAttribute);
  }
}

TEST(TagParser, LenientAttributeSpellings) {
  for (const char* t :
       {"<mythEntity  type = \"hero\" >Ajax</mythEntity>",
        "<MYTHENTITY type=\"hero\">Ajax</ mythentity >",
        "<mythEntity\ntype=\"hero\">Ajax</mythEntity>"}) {
    ParsedPassage p = ParseInline(t, ParseMode::kLenient);
    // Strict mode either rejects the tag or does not see a tag at all.
    try {
      EXPECT_TRUE(ParseInline(t, ParseMode::kStrict).annotations.empty()) << t;
    } catch (const TagParseError&) {
    }
    ASSERT_EQ(p.annotations.size(), 1u) << t;
    EXPECT_EQ(p.annotations[0].surface, "Ajax");
    EXPECT_EQ(p.plain_text, "Ajax");
  }
}

TEST(TagParser, CurlyQuotesOnlyInLenientMode) {
  const std::string t = "<mythEntity type=“hero”>Ajax</mythEntity>";
  EXPECT_EQ(ParseInline(t, ParseMode::kLenient).annotations.size(), 1u);
  EXPECT_THROW(ParseInline(t, ParseMode::kStrict), TagParseError);
}

TEST(TagParser, UnknownTypeStrippedInLenientMode) {
  const std::string t = "Les <mythEntity type=\"nymph\">Néréides</mythEntity> dansent.";
  ParsedPassage p = ParseInline(t, ParseMode::kLenient);
  EXPECT_EQ(p.plain_text, "Les Néréides dansent.");
  EXPECT_TRUE(p.annotations.empty());
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_NE(p.warnings[0].find("nymph"), std::string::npos);
  try {
    ParseInline(t, ParseMode::kStrict);
    FAIL();
  } catch (const TagParseError& e) {
    EXPECT_EQ(e.kind(), TagErrorKind::kUnknownType);
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(TagParser, LenientLabelNormalization) {
  ParsedPassage p =
      ParseInline("<mythEntity type=\"DEITY\">Vénus</mythEntity>", ParseMode::kLenient);
  ASSERT_EQ(p.annotations.size(), 1u);
  EXPECT_EQ(p.annotations[0].type, EntityType::kDeity);
  EXPECT_THROW(
      ParseInline("<mythEntity type=\"DEITY\">Vénus</mythEntity>", ParseMode::kStrict),
      TagParseError);
}

TagErrorKind KindOf(const std::string& t, ParseMode mode = ParseMode::kStrict) {
  try {
    ParseInline(t, mode);
  } catch (const TagParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << t;
  return TagErrorKind::kUnclosedTag;
}

TEST(TagParser, ErrorKinds) {
  EXPECT_EQ(KindOf("<mythEntity type=\"hero\">Ajax"), TagErrorKind::kUnclosedTag);
  EXPECT_EQ(KindOf("<mythEntity type=\"hero\">A <mythEntity type=\"deity\">B"
                   "</mythEntity></mythEntity>"),
            TagErrorKind::kNestedTag);
  EXPECT_EQ(KindOf("Ajax</mythEntity>"), TagErrorKind::kUnbalancedClose);
  EXPECT_EQ(KindOf("<mythEntity type=\"hero\"></mythEntity>"),
            TagErrorKind::kEmptyElement);
  EXPECT_EQ(KindOf("<mythEntity kind=\"hero\">Ajax</mythEntity>"),
            TagErrorKind::kMalformedAttribute);
  EXPECT_EQ(KindOf("<mythEntity type=hero>Ajax</mythEntity>"),
            TagErrorKind::kMalformedAttribute);
  EXPECT_EQ(KindOf("<mythEntity type='hero'>Ajax</mythEntity>", ParseMode::kLenient),
            TagErrorKind::kMalformedAttribute);
  EXPECT_EQ(KindOf("<mythEntity>Ajax</mythEntity>", ParseMode::kLenient),
            TagErrorKind::kMalformedAttribute);
}

TEST(TagParser, EmptyElementDroppedInLenientMode) {
  ParsedPassage p =
      ParseInline("a<mythEntity type=\"hero\"></mythEntity>b", ParseMode::kLenient);
  EXPECT_EQ(p.plain_text, "ab");
  EXPECT_TRUE(p.annotations.empty());
  EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(TagParser, OtherAngleBracketsAreText) {
  ParsedPassage p = ParseInline("1 < 2 et <b>Ajax</b>", ParseMode::kStrict);
  EXPECT_EQ(p.plain_text, "1 < 2 et <b>Ajax</b>");
  EXPECT_TRUE(p.annotations.empty());
}

TEST(TagParser, RenderRejectsInvalidPassages) {
  ParsedPassage lt{"a < b", {}, {}};
  EXPECT_THROW(RenderInline(lt), InvalidPassageError);
  ParsedPassage bad{"Ajax", {{0, 2, EntityType::kHero, "Aj"}, {1, 3, EntityType::kHero, "ja"}}, {}};
  EXPECT_THROW(RenderInline(bad), InvalidPassageError);
}

TEST(TagParser, OffsetsAreCodePoints) {
  ParsedPassage p = ParseInline(
      "Héra et <mythEntity type=\"deity\">Zéphyr</mythEntity>", ParseMode::kStrict);
  ASSERT_EQ(p.annotations.size(), 1u);
  EXPECT_EQ(p.annotations[0].start, 8u);
  EXPECT_EQ(p.annotations[0].end, 14u);
}

}  // namespace
}  // namespace mythtag
