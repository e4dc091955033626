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
#include <string>

#include "mythtag/io.h"
#include "mythtag/preservation.h"
#include "mythtag/tag_parser.h"
#include "test_support.h"

namespace mythtag {
namespace {

TEST(Preservation, SubstitutionExample) {
  PreservationVerdict v = CheckPreservation("abc", "axc");
  EXPECT_EQ(v.status, PreservationStatus::kAltered);
  ASSERT_EQ(v.alterations.size(), 1u);
  EXPECT_EQ(v.alterations[0].kind, AlterationKind::kSubstitution);
  // Hunks widen to whole words, so the token is reported, not the letter.
  EXPECT_EQ(v.alterations[0].orig_text, "abc");
  EXPECT_EQ(v.alterations[0].new_text, "axc");
  EXPECT_DOUBLE_EQ(v.edit_ratio, 1.0 / 3.0);
}

TEST(Preservation, IdenticalText) {
  PreservationVerdict v = CheckPreservation("Minos", "Minos");
  EXPECT_TRUE(v.identical());
  EXPECT_TRUE(v.alterations.empty());
  EXPECT_EQ(v.edit_ratio, 0.0);
  EXPECT_TRUE(CheckPreservation("", "").identical());
}

TEST(Preservation, CalypsoInsertion) {
  const std::string original = ReadFile(testing::DataDir() / "p1" / "p1.txt");
  const std::string altered = ReadFile(testing::DataDir() / "p1" / "p1_altered.txt");
  PreservationVerdict v = CheckPreservation(original, altered);
  ASSERT_EQ(v.alterations.size(), 1u);
  const Alteration& a = v.alterations[0];
  EXPECT_EQ(a.kind, AlterationKind::kInsertion);
  EXPECT_EQ(a.new_text, "île de ");
  EXPECT_EQ(a.orig_start, a.orig_end);
  const std::size_t model_len = CodePointLength(altered);
  EXPECT_EQ(v.edit_ratio, 7.0 / static_cast<double>(model_len));
  // The hunk sits right before the second "Calypso".
  std::u32string orig = DecodeUtf8(original);
  EXPECT_EQ(orig.substr(a.orig_start, 7), U"Calypso");
}

TEST(Preservation, PatchReplayProperty) {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 1500; ++i) {
    std::u32string a = testing::RandomText(rng, rng() % 120);
    std::u32string b = testing::Mutate(rng, a, (rng() % 30) / 100.0);
    if (rng() % 5 == 0) b = a;
    PreservationVerdict v = CheckPreservation(EncodeUtf8(a), EncodeUtf8(b));
    ASSERT_EQ(ApplyAlterations(a, v.alterations), b)
        << EncodeUtf8(a) << " -> " << EncodeUtf8(b);
    // Hunks are ordered, disjoint, and consistent with both texts.
    std::size_t prev_end = 0;
    for (const Alteration& alt : v.alterations) {
      ASSERT_GE(alt.orig_start, prev_end);
      ASSERT_LE(alt.orig_start, alt.orig_end);
      ASSERT_EQ(EncodeUtf8(a.substr(alt.orig_start, alt.orig_end - alt.orig_start)),
                alt.orig_text);
      ASSERT_EQ(EncodeUtf8(b.substr(alt.new_start, alt.new_end - alt.new_start)),
                alt.new_text);
      ASSERT_FALSE(alt.orig_text.empty() && alt.new_text.empty());
      prev_end = alt.orig_end;
    }
  }
}

TEST(Preservation, RatioSymmetryAndIdentity) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1500; ++i) {
    std::u32string a = testing::RandomText(rng, rng() % 80);
    std::u32string b = rng() % 4 == 0 ? a : testing::Mutate(rng, a, (rng() % 25) / 100.0);
    PreservationVerdict ab = CheckPreservation(EncodeUtf8(a), EncodeUtf8(b));
    PreservationVerdict ba = CheckPreservation(EncodeUtf8(b), EncodeUtf8(a));
    ASSERT_EQ(ab.edit_ratio, ba.edit_ratio);
    ASSERT_EQ(ab.identical(), a == b);
    ASSERT_EQ(ab.alterations.empty(), a == b);
    ASSERT_EQ(ab.edit_ratio == 0.0, a == b);
    ASSERT_EQ(LevenshteinDistance(a, b), testing::Levenshtein(a, b));
  }
}

TEST(Preservation, HunksSnapToWords) {
  // A one-letter change inside a word reports the whole word.
  PreservationVerdict v = CheckPreservation("le palais de Minos", "le palais de Minas");
  ASSERT_EQ(v.alterations.size(), 1u);
  EXPECT_EQ(v.alterations[0].orig_text, "Minos");
  EXPECT_EQ(v.alterations[0].new_text, "Minas");
}

TEST(Remap, ShiftsAnnotationsPastAnEdit) {
  const std::string original = "son chant ; les nymphes";
  ParsedPassage model = ParseInline(
      "son chant; les <mythEntity type=\"creature_group\">nymphes</mythEntity>");
  PreservationVerdict v = CheckPreservation(original, model.plain_text);
  ASSERT_FALSE(v.identical());
  RemapResult r = RemapAnnotations(model.annotations, v, original, 0.1);
  ASSERT_EQ(r.remapped.size(), 1u);
  EXPECT_TRUE(r.unmappable.empty());
  EXPECT_EQ(r.remapped[0].start, 16u);
  EXPECT_EQ(r.remapped[0].surface, "nymphes");
}

TEST(Remap, TouchedAnnotationIsUnmappable) {
  const std::string original = "Minos règne";
  ParsedPassage model = ParseInline("<mythEntity type=\"hero\">Minas</mythEntity> règne");
  PreservationVerdict v = CheckPreservation(original, model.plain_text);
  RemapResult r = RemapAnnotations(model.annotations, v, original, 0.5);
  EXPECT_TRUE(r.remapped.empty());
  EXPECT_EQ(r.unmappable.size(), 1u);
}

TEST(Remap, RatioAboveBudgetMapsNothing) {
  const std::string original = "abc Minos";
  ParsedPassage model = ParseInline("xyz <mythEntity type=\"hero\">Minos</mythEntity>");
  PreservationVerdict v = CheckPreservation(original, model.plain_text);
  RemapResult r = RemapAnnotations(model.annotations, v, original, 0.05);
  EXPECT_TRUE(r.remapped.empty());
  EXPECT_EQ(r.unmappable.size(), 1u);
}

TEST(Remap, RejectsAnnotationsOutsideModelText) {
  PreservationVerdict v = CheckPreservation("abc", "abc");
  EXPECT_THROW(RemapAnnotations({{0, 9, EntityType::kHero, "x"}}, v, "abc"),
               InconsistentInputError);
}

TEST(Remap, RemappedSurfacesMatchOriginal) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 800; ++i) {
    ParsedPassage p = testing::RandomPassage(rng);
    std::u32string model = DecodeUtf8(p.plain_text);
    std::u32string original = testing::Mutate(rng, model, 0.02);
    PreservationVerdict v = CheckPreservation(EncodeUtf8(original), p.plain_text);
    RemapResult r = RemapAnnotations(p.annotations, v, EncodeUtf8(original), 1.0);
    ASSERT_EQ(r.remapped.size() + r.unmappable.size(), p.annotations.size());
    ASSERT_TRUE(ValidateAnnotations(original, r.remapped).ok());
  }
}

}  // namespace
}  // namespace mythtag
