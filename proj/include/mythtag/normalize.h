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

#ifndef MYTHTAG_NORMALIZE_H_
#define MYTHTAG_NORMALIZE_H_

// Text normalization for matching French literary text: NFC, simple case
// folding (accents kept), typographic quote unification and whitespace
// collapsing. Every normalized code point remembers the original code-point
// range it came from.

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mythtag/utf8.h"

namespace mythtag {

struct NormalizationConfig {
  bool unicode_nfc = true;
  bool casefold = true;
  bool collapse_whitespace = true;  // any whitespace run -> one ' '
  bool unify_quotes = true;         // ’ ‘ -> '   « » “ ” „ -> "

  bool operator==(const NormalizationConfig&) const = default;
};

struct NormalizedText {
  std::u32string text;
  // text[i] came from original code points [origin_start[i], origin_end[i]).
  // Both arrays are non-decreasing.
  std::vector<uint32_t> origin_start;
  std::vector<uint32_t> origin_end;
  std::size_t original_length = 0;

  // Original span covering normalized [begin, end).
  std::pair<std::size_t, std::size_t> ToOriginal(std::size_t begin,
                                                 std::size_t end) const {
    if (begin >= end) {
      std::size_t at =
          begin < origin_start.size() ? origin_start[begin] : original_length;
      return {at, at};
    }
    return {origin_start[begin], origin_end[end - 1]};
  }
};

namespace normalize_internal {

inline const icu::Normalizer2& Nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || nfc == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *nfc;
}

inline std::u32string NfcChunk(const icu::Normalizer2& nfc,
                               std::u32string_view chunk) {
  icu::UnicodeString in;
  for (char32_t c : chunk) in.append(static_cast<UChar32>(c));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc.normalize(in, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::u32string result;
  for (int32_t i = 0; i < out.length();) {
    UChar32 c = out.char32At(i);
    result.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return result;
}

inline char32_t UnifyQuote(char32_t c) {
  switch (c) {
    case U'‘':
    case U'’':
      return U'\'';
    case U'«':
    case U'»':
    case U'“':
    case U'”':
    case U'„':
      return U'"';
    default:
      return c;
  }
}

}  // namespace normalize_internal

inline NormalizedText Normalize(std::u32string_view text,
                                const NormalizationConfig& config = {}) {
  using namespace normalize_internal;
  NormalizedText out;
  out.original_length = text.size();
  out.text.reserve(text.size());
  out.origin_start.reserve(text.size());
  out.origin_end.reserve(text.size());
  const icu::Normalizer2* nfc = config.unicode_nfc ? &Nfc() : nullptr;

  bool in_space_run = false;
  auto emit = [&](char32_t c, std::size_t from, std::size_t to) {
    if (config.casefold) {
      c = static_cast<char32_t>(u_foldCase(static_cast<UChar32>(c),
                                           U_FOLD_CASE_DEFAULT));
    }
    if (config.unify_quotes) c = UnifyQuote(c);
    if (config.collapse_whitespace && IsSpaceChar(c)) {
      if (in_space_run) {
        out.origin_end.back() = static_cast<uint32_t>(to);
        return;
      }
      in_space_run = true;
      c = U' ';
    } else {
      in_space_run = false;
    }
    out.text.push_back(c);
    out.origin_start.push_back(static_cast<uint32_t>(from));
    out.origin_end.push_back(static_cast<uint32_t>(to));
  };

  std::size_t i = 0;
  while (i < text.size()) {
    // A chunk runs until the next normalization boundary, so composition
    // never crosses chunks and each output char maps to its chunk.
    std::size_t j = i + 1;
    if (nfc != nullptr) {
      while (j < text.size() &&
             !nfc->hasBoundaryBefore(static_cast<UChar32>(text[j]))) {
        ++j;
      }
    }
    if (nfc == nullptr || (j == i + 1 && text[i] < 0x300)) {
      emit(text[i], i, i + 1);
    } else {
      std::u32string chunk = NfcChunk(*nfc, text.substr(i, j - i));
      for (char32_t c : chunk) emit(c, i, j);
    }
    i = j;
  }
  return out;
}

inline NormalizedText Normalize(std::string_view utf8,
                                const NormalizationConfig& config = {}) {
  return Normalize(std::u32string_view(DecodeUtf8(utf8)), config);
}

inline std::string NormalizeToUtf8(std::string_view utf8,
                                   const NormalizationConfig& config = {}) {
  return EncodeUtf8(Normalize(utf8, config).text);
}

}  // namespace mythtag

#endif  // MYTHTAG_NORMALIZE_H_
