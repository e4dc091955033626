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

#ifndef MYTHTAG_SCHEMA_H_
#define MYTHTAG_SCHEMA_H_

// The mythological entity tagset and the stand-off annotation model shared
// by every other module. Offsets are code points into the document text,
// [start, end).

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mythtag/utf8.h"

namespace mythtag {

enum class EntityType {
  kDeity,
  kHero,
  kCreature,
  kHalfCreature,
  kCreatureGroup,
  kMonsters,
  kLocation,
  kEvent,
  kObject,
  kConcept,
};

inline constexpr std::array<EntityType, 10> kAllEntityTypes = {
    EntityType::kDeity,         EntityType::kHero,
    EntityType::kCreature,      EntityType::kHalfCreature,
    EntityType::kCreatureGroup, EntityType::kMonsters,
    EntityType::kLocation,      EntityType::kEvent,
    EntityType::kObject,        EntityType::kConcept,
};

inline constexpr std::string_view ToString(EntityType type) {
  switch (type) {
    case EntityType::kDeity: return "deity";
    case EntityType::kHero: return "hero";
    case EntityType::kCreature: return "creature";
    case EntityType::kHalfCreature: return "half_creature";
    case EntityType::kCreatureGroup: return "creature_group";
    case EntityType::kMonsters: return "monsters";
    case EntityType::kLocation: return "location";
    case EntityType::kEvent: return "event";
    case EntityType::kObject: return "object";
    case EntityType::kConcept: return "concept";
  }
  return "";
}

inline constexpr std::size_t Index(EntityType type) {
  return static_cast<std::size_t>(type);
}

class UnknownTypeError : public std::invalid_argument {
 public:
  explicit UnknownTypeError(std::string label)
      : std::invalid_argument("unknown entity type: \"" + label + "\""),
        label_(std::move(label)) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

// Exact match against the canonical lowercase labels, no normalization.
inline std::optional<EntityType> CanonicalEntityType(std::string_view label) {
  for (EntityType type : kAllEntityTypes) {
    if (ToString(type) == label) return type;
  }
  return std::nullopt;
}

// Trims ASCII whitespace, lowercases, and accepts the LaTeX-escaped
// "half\_creature" / "creature\_group" spellings.
inline EntityType ParseEntityType(std::string_view label) {
  std::size_t b = 0;
  std::size_t e = label.size();
  while (b < e && std::isspace(static_cast<unsigned char>(label[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(label[e - 1]))) --e;
  std::string normalized;
  normalized.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    char c = label[i];
    if (c == '\\' && i + 1 < e && label[i + 1] == '_') continue;
    normalized.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (auto type = CanonicalEntityType(normalized)) return *type;
  throw UnknownTypeError(std::string(label));
}

struct Annotation {
  std::size_t start = 0;
  std::size_t end = 0;
  EntityType type = EntityType::kDeity;
  std::string surface;

  std::size_t length() const { return end > start ? end - start : 0; }
  bool operator==(const Annotation&) const = default;
};

struct Provenance {
  std::string model;
  std::string prompt_digest;
  std::string timestamp;

  bool operator==(const Provenance&) const = default;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::string text;  // UTF-8, never modified after construction
  std::vector<Annotation> annotations;
  std::optional<Provenance> provenance;

  bool operator==(const AnnotatedDocument&) const = default;
};

enum class ViolationKind {
  kOffsetOutOfBounds,
  kSurfaceMismatch,
  kOverlap,
  kUnsorted,
};

inline constexpr std::string_view ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kOffsetOutOfBounds: return "offset_out_of_bounds";
    case ViolationKind::kSurfaceMismatch: return "surface_mismatch";
    case ViolationKind::kOverlap: return "overlap";
    case ViolationKind::kUnsorted: return "unsorted";
  }
  return "";
}

struct Violation {
  ViolationKind kind;
  std::size_t index;  // into AnnotatedDocument::annotations
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(),
                      [kind](const Violation& v) { return v.kind == kind; }));
  }
};

// Checks annotations against an already decoded text. Violations are
// reported in index order per check: bounds/surface, ordering, overlap.
inline ValidationReport ValidateAnnotations(
    std::u32string_view text, const std::vector<Annotation>& annotations) {
  ValidationReport report;
  const std::size_t n = annotations.size();

  for (std::size_t i = 0; i < n; ++i) {
    const Annotation& a = annotations[i];
    if (a.start >= a.end || a.end > text.size()) {
      report.violations.push_back(
          {ViolationKind::kOffsetOutOfBounds, i,
           "span [" + std::to_string(a.start) + "," + std::to_string(a.end) +
               ") invalid for text of length " + std::to_string(text.size())});
      continue;
    }
    std::string slice = EncodeUtf8(text.substr(a.start, a.end - a.start));
    if (slice != a.surface) {
      report.violations.push_back({ViolationKind::kSurfaceMismatch, i,
                                   "surface \"" + a.surface +
                                       "\" but text has \"" + slice + "\""});
    }
  }

  for (std::size_t i = 1; i < n; ++i) {
    if (annotations[i].start <= annotations[i - 1].start) {
      report.violations.push_back(
          {ViolationKind::kUnsorted, i,
           "start " + std::to_string(annotations[i].start) +
               " not after previous start " +
               std::to_string(annotations[i - 1].start)});
    }
  }

  // Sweep in start order; anything starting before the furthest end seen so
  // far intersects an earlier span.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    return annotations[x].start < annotations[y].start;
  });
  std::optional<std::size_t> reach;
  for (std::size_t idx : order) {
    const Annotation& a = annotations[idx];
    if (a.start >= a.end) continue;
    if (reach && a.start < annotations[*reach].end) {
      report.violations.push_back(
          {ViolationKind::kOverlap, idx,
           "span [" + std::to_string(a.start) + "," + std::to_string(a.end) +
               ") overlaps annotation " + std::to_string(*reach)});
    }
    if (!reach || a.end > annotations[*reach].end) reach = idx;
  }
  return report;
}

inline ValidationReport ValidateDocument(const AnnotatedDocument& doc) {
  return ValidateAnnotations(DecodeUtf8(doc.text), doc.annotations);
}

// Builds an annotation whose surface is cut from `text`.
inline Annotation MakeAnnotation(std::u32string_view text, std::size_t start,
                                 std::size_t end, EntityType type) {
  return Annotation{start, end, type,
                    EncodeUtf8(text.substr(start, end - start))};
}

}  // namespace mythtag

#endif  // MYTHTAG_SCHEMA_H_
