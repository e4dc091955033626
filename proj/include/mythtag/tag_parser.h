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

#ifndef MYTHTAG_TAG_PARSER_H_
#define MYTHTAG_TAG_PARSER_H_

// Conversion between inline markup and stand-off annotations.
//
// Canonical grammar (what RenderInline emits and strict mode accepts):
//
//   open  := '<mythEntity type="' label '">'
//   close := '</mythEntity>'
//
// Tags are flat; nesting is an error. A '<' that does not start a
// mythEntity tag is ordinary text. Lenient mode additionally accepts
// whitespace anywhere inside a tag, any letter case for the element name,
// typographic double quotes around the label, non-canonical label spellings
// (case, surrounding blanks, "half\_creature"), and drops tags with unknown
// labels or empty content with a warning instead of failing.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mythtag/schema.h"
#include "mythtag/utf8.h"

namespace mythtag {

enum class ParseMode { kStrict, kLenient };

enum class TagErrorKind {
  kUnclosedTag,
  kNestedTag,
  kMalformedAttribute,
  kUnknownType,
  kUnbalancedClose,
  kEmptyElement,
};

inline constexpr std::string_view ToString(TagErrorKind kind) {
  switch (kind) {
    case TagErrorKind::kUnclosedTag: return "unclosed_tag";
    case TagErrorKind::kNestedTag: return "nested_tag";
    case TagErrorKind::kMalformedAttribute: return "malformed_attribute";
    case TagErrorKind::kUnknownType: return "unknown_type";
    case TagErrorKind::kUnbalancedClose: return "unbalanced_close";
    case TagErrorKind::kEmptyElement: return "empty_element";
  }
  return "";
}

class TagParseError : public std::runtime_error {
 public:
  TagParseError(TagErrorKind kind, std::size_t offset, const std::string& what)
      : std::runtime_error(std::string(ToString(kind)) + " at offset " +
                           std::to_string(offset) + ": " + what),
        kind_(kind),
        offset_(offset) {}
  TagErrorKind kind() const { return kind_; }
  // Code-point offset into the tagged input.
  std::size_t offset() const { return offset_; }

 private:
  TagErrorKind kind_;
  std::size_t offset_;
};

class InvalidPassageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ParsedPassage {
  std::string plain_text;
  std::vector<Annotation> annotations;  // offsets into plain_text
  std::vector<std::string> warnings;    // lenient mode only

  bool operator==(const ParsedPassage&) const = default;
};

namespace tag_internal {

inline constexpr std::u32string_view kElement = U"mythEntity";

inline char32_t AsciiLower(char32_t c) {
  return (c >= U'A' && c <= U'Z') ? c - U'A' + U'a' : c;
}

inline bool IsQuote(char32_t c, ParseMode mode) {
  if (c == U'"') return true;
  return mode == ParseMode::kLenient &&
         (c == U'“' || c == U'”' || c == U'„' || c == U'″');
}

class Scanner {
 public:
  Scanner(std::u32string_view input, ParseMode mode)
      : in_(input), mode_(mode) {}

  struct Tag {
    bool closing = false;
    std::string label;  // opening tags only, as written
    std::size_t end = 0;
  };

  // Recognizes a tag starting at `pos` (which holds '<'). Returns nullopt
  // when the text there is not a mythEntity tag at all; throws when it is
  // one but malformed.
  std::optional<Tag> TagAt(std::size_t pos) const {
    std::size_t i = pos + 1;
    SkipSpace(i);
    bool closing = false;
    if (i < in_.size() && in_[i] == U'/') {
      closing = true;
      ++i;
      SkipSpace(i);
    }
    if (!MatchElement(i)) return std::nullopt;
    i += kElement.size();

    Tag tag;
    tag.closing = closing;
    if (closing) {
      SkipSpace(i);
      if (i >= in_.size() || in_[i] != U'>') {
        throw TagParseError(TagErrorKind::kMalformedAttribute, pos,
                            "closing tag not terminated by '>'");
      }
      tag.end = i + 1;
      return tag;
    }

    // Element name must be followed by a separator, otherwise this is
    // something like <mythEntityX>.
    if (i >= in_.size() || !IsSpaceChar(in_[i])) {
      if (i < in_.size() && in_[i] == U'>') {
        throw TagParseError(TagErrorKind::kMalformedAttribute, pos,
                            "missing type attribute");
      }
      throw TagParseError(TagErrorKind::kMalformedAttribute, pos,
                          "expected whitespace after element name");
    }
    if (mode_ == ParseMode::kStrict) {
      if (in_[i] != U' ') Malformed(pos, "expected a single space");
      ++i;
    } else {
      SkipSpace(i);
    }
    if (!MatchLiteral(i, U"type")) Malformed(pos, "missing type attribute");
    i += 4;
    SkipSpace(i);
    if (i >= in_.size() || in_[i] != U'=') Malformed(pos, "expected '='");
    ++i;
    SkipSpace(i);
    if (i >= in_.size() || !IsQuote(in_[i], mode_)) {
      Malformed(pos, "attribute value must be quoted");
    }
    ++i;
    std::size_t label_start = i;
    while (i < in_.size() && !IsQuote(in_[i], mode_) && in_[i] != U'>' &&
           in_[i] != U'<') {
      ++i;
    }
    if (i >= in_.size() || !IsQuote(in_[i], mode_)) {
      Malformed(pos, "unterminated attribute value");
    }
    tag.label = EncodeUtf8(in_.substr(label_start, i - label_start));
    ++i;
    SkipSpace(i);
    if (i >= in_.size() || in_[i] != U'>') {
      Malformed(pos, "opening tag not terminated by '>'");
    }
    tag.end = i + 1;
    return tag;
  }

 private:
  [[noreturn]] static void Malformed(std::size_t pos, const char* what) {
    throw TagParseError(TagErrorKind::kMalformedAttribute, pos, what);
  }

  void SkipSpace(std::size_t& i) const {
    if (mode_ == ParseMode::kStrict) return;
    while (i < in_.size() && IsSpaceChar(in_[i])) ++i;
  }

  bool MatchElement(std::size_t i) const {
    if (in_.size() - std::min(i, in_.size()) < kElement.size()) return false;
    for (std::size_t k = 0; k < kElement.size(); ++k) {
      char32_t c = in_[i + k];
      if (mode_ == ParseMode::kLenient) {
        if (AsciiLower(c) != AsciiLower(kElement[k])) return false;
      } else if (c != kElement[k]) {
        return false;
      }
    }
    return true;
  }

  bool MatchLiteral(std::size_t i, std::u32string_view lit) const {
    if (in_.size() - std::min(i, in_.size()) < lit.size()) return false;
    return in_.substr(i, lit.size()) == lit;
  }

  std::u32string_view in_;
  ParseMode mode_;
};

}  // namespace tag_internal

inline ParsedPassage ParseInline(std::string_view tagged_text,
                                 ParseMode mode = ParseMode::kLenient) {
  const std::u32string input = DecodeUtf8(tagged_text);
  tag_internal::Scanner scanner(input, mode);

  std::u32string plain;
  plain.reserve(input.size());
  ParsedPassage out;

  struct Open {
    std::size_t tag_offset;
    std::size_t plain_start;
    std::optional<EntityType> type;
    std::string label;
  };
  std::optional<Open> open;

  std::size_t i = 0;
  while (i < input.size()) {
    if (input[i] != U'<') {
      plain.push_back(input[i++]);
      continue;
    }
    auto tag = scanner.TagAt(i);
    if (!tag) {
      plain.push_back(input[i++]);
      continue;
    }
    if (!tag->closing) {
      if (open) {
        throw TagParseError(TagErrorKind::kNestedTag, i,
                            "mythEntity opened inside another mythEntity");
      }
      Open o{i, plain.size(), std::nullopt, tag->label};
      if (mode == ParseMode::kStrict) {
        o.type = CanonicalEntityType(tag->label);
        if (!o.type) {
          throw TagParseError(TagErrorKind::kUnknownType, i,
                              "label \"" + tag->label + "\"");
        }
      } else {
        try {
          o.type = ParseEntityType(tag->label);
        } catch (const UnknownTypeError&) {
          o.type = std::nullopt;
        }
      }
      open = std::move(o);
    } else {
      if (!open) {
        throw TagParseError(TagErrorKind::kUnbalancedClose, i,
                            "closing tag without an opening tag");
      }
      if (!open->type) {
        out.warnings.push_back("unknown type \"" + open->label +
                               "\" stripped at offset " +
                               std::to_string(open->tag_offset));
      } else if (plain.size() == open->plain_start) {
        if (mode == ParseMode::kStrict) {
          throw TagParseError(TagErrorKind::kEmptyElement, open->tag_offset,
                              "element has no content");
        }
        out.warnings.push_back("empty element dropped at offset " +
                               std::to_string(open->tag_offset));
      } else {
        out.annotations.push_back(
            MakeAnnotation(plain, open->plain_start, plain.size(), *open->type));
      }
      open.reset();
    }
    i = tag->end;
  }
  if (open) {
    throw TagParseError(TagErrorKind::kUnclosedTag, open->tag_offset,
                        "mythEntity never closed");
  }
  out.plain_text = EncodeUtf8(plain);
  return out;
}

inline std::string OpeningTag(EntityType type) {
  return "<mythEntity type=\"" + std::string(ToString(type)) + "\">";
}

inline constexpr std::string_view kClosingTag = "</mythEntity>";

// Emits the canonical grammar. The passage must be valid: annotations sorted,
// disjoint, in bounds, surfaces matching, and no '<' in the plain text.
inline std::string RenderInline(const ParsedPassage& passage) {
  if (passage.plain_text.find('<') != std::string::npos) {
    throw InvalidPassageError("plain text contains '<'");
  }
  std::u32string text;
  try {
    text = DecodeUtf8(passage.plain_text);
  } catch (const Utf8Error& e) {
    throw InvalidPassageError(e.what());
  }
  ValidationReport report = ValidateAnnotations(text, passage.annotations);
  if (!report.ok()) {
    throw InvalidPassageError("invalid annotations: " +
                              report.violations.front().detail);
  }
  std::string out;
  out.reserve(passage.plain_text.size() + passage.annotations.size() * 40);
  std::size_t pos = 0;
  for (const Annotation& a : passage.annotations) {
    out += EncodeUtf8(std::u32string_view(text).substr(pos, a.start - pos));
    out += OpeningTag(a.type);
    out += a.surface;
    out += kClosingTag;
    pos = a.end;
  }
  out += EncodeUtf8(std::u32string_view(text).substr(pos));
  return out;
}

}  // namespace mythtag

#endif  // MYTHTAG_TAG_PARSER_H_
