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

#ifndef MYTHTAG_PRESERVATION_H_
#define MYTHTAG_PRESERVATION_H_

// Checks that a model echoed the source passage unchanged once its tags are
// stripped, and localizes any alteration.
//
// Hunks come from a code-point LCS alignment. Pure insertions and deletions
// are slid to the equivalent position that sits best on word boundaries,
// and every hunk that cuts into a word is widened to whole words (merging
// with neighbours it reaches). The edit ratio is still the code-point
// Levenshtein distance over the longer length.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mythtag/schema.h"
#include "mythtag/utf8.h"

namespace mythtag {

enum class AlterationKind { kInsertion, kDeletion, kSubstitution };

inline constexpr std::string_view ToString(AlterationKind kind) {
  switch (kind) {
    case AlterationKind::kInsertion: return "insertion";
    case AlterationKind::kDeletion: return "deletion";
    case AlterationKind::kSubstitution: return "substitution";
  }
  return "";
}

struct Alteration {
  AlterationKind kind;
  std::size_t orig_start = 0;
  std::size_t orig_end = 0;
  std::size_t new_start = 0;
  std::size_t new_end = 0;
  std::string orig_text;
  std::string new_text;

  bool operator==(const Alteration&) const = default;
};

enum class PreservationStatus { kIdentical, kAltered };

inline constexpr std::string_view ToString(PreservationStatus status) {
  return status == PreservationStatus::kIdentical ? "identical" : "altered";
}

struct PreservationVerdict {
  PreservationStatus status = PreservationStatus::kIdentical;
  std::vector<Alteration> alterations;
  double edit_ratio = 0.0;

  bool identical() const { return status == PreservationStatus::kIdentical; }
};

class InconsistentInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::size_t LevenshteinDistance(std::u32string_view a,
                                       std::u32string_view b) {
  while (!a.empty() && !b.empty() && a.front() == b.front()) {
    a.remove_prefix(1);
    b.remove_prefix(1);
  }
  while (!a.empty() && !b.empty() && a.back() == b.back()) {
    a.remove_suffix(1);
    b.remove_suffix(1);
  }
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace preservation_internal {

struct Hunk {
  std::size_t os, oe, ns, ne;
};

// Alignments larger than this many DP cells collapse the differing middle
// into a single hunk instead of allocating the table.
inline constexpr std::size_t kMaxAlignmentCells = std::size_t{1} << 26;

// Hunks of the LCS alignment between a and b, in order. The backtrack takes
// diagonal moves first from the end, so gaps land as far left as possible;
// SlideHunk moves them afterwards.
inline std::vector<Hunk> LcsHunks(std::u32string_view a,
                                  std::u32string_view b) {
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
    ++prefix;
  }
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  const std::size_t n = a.size() - prefix - suffix;
  const std::size_t m = b.size() - prefix - suffix;
  if (n == 0 && m == 0) return {};
  if (n == 0 || m == 0 || (n + 1) * (m + 1) > kMaxAlignmentCells) {
    return {Hunk{prefix, prefix + n, prefix, prefix + m}};
  }
  std::u32string_view x = a.substr(prefix, n);
  std::u32string_view y = b.substr(prefix, m);

  const std::size_t w = m + 1;
  std::vector<uint32_t> dp((n + 1) * w, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      dp[i * w + j] = x[i - 1] == y[j - 1]
                          ? dp[(i - 1) * w + j - 1] + 1
                          : std::max(dp[(i - 1) * w + j], dp[i * w + j - 1]);
    }
  }

  // Matched pairs, collected back to front.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (x[i - 1] == y[j - 1] && dp[i * w + j] == dp[(i - 1) * w + j - 1] + 1) {
      matches.emplace_back(i - 1, j - 1);
      --i;
      --j;
    } else if (dp[i * w + j - 1] >= dp[(i - 1) * w + j]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(matches.begin(), matches.end());

  std::vector<Hunk> hunks;
  std::size_t pi = 0, pj = 0;
  auto emit = [&](std::size_t ui, std::size_t uj) {
    if (ui > pi || uj > pj) {
      hunks.push_back(Hunk{prefix + pi, prefix + ui, prefix + pj, prefix + uj});
    }
  };
  for (auto [mi, mj] : matches) {
    emit(mi, mj);
    pi = mi + 1;
    pj = mj + 1;
  }
  emit(n, m);
  return hunks;
}

inline bool CleanBoundary(std::u32string_view s, std::size_t pos) {
  return pos == 0 || pos >= s.size() || !IsWordChar(s[pos - 1]) ||
         !IsWordChar(s[pos]);
}

// Moves a pure insertion or deletion along the run of equivalent positions
// (bounded by its neighbours at lo_o/hi_o in original coordinates) to the
// one whose edges fall on word boundaries; ties prefer a gap starting with
// a word character, then the rightmost position.
inline void SlideHunk(Hunk& h, std::u32string_view a, std::u32string_view b,
                      std::size_t lo_o, std::size_t hi_o) {
  const bool insertion = h.os == h.oe && h.ns < h.ne;
  const bool deletion = h.ns == h.ne && h.os < h.oe;
  if (!insertion && !deletion) return;
  std::u32string_view s = insertion ? b : a;
  const std::size_t start = insertion ? h.ns : h.os;
  const std::size_t end = insertion ? h.ne : h.oe;
  const std::size_t len = end - start;

  std::size_t left = 0;
  while (h.os - left > lo_o && s[start - left - 1] == s[end - left - 1]) {
    ++left;
  }
  std::size_t right = 0;
  while (h.oe + right < hi_o && s[start + right] == s[end + right]) ++right;
  if (left == 0 && right == 0) return;

  auto score = [&](std::size_t st) {
    int clean = (CleanBoundary(s, st) ? 1 : 0) +
                (CleanBoundary(s, st + len) ? 1 : 0);
    return clean * 2 + (IsWordChar(s[st]) ? 1 : 0);
  };
  std::size_t best = start - left;
  int best_score = score(best);
  for (std::size_t st = best + 1; st <= start + right; ++st) {
    int sc = score(st);
    if (sc >= best_score) {
      best = st;
      best_score = sc;
    }
  }
  // Both texts move together: the aligned context on either side is equal.
  h.os = h.os + best - start;
  h.oe = h.oe + best - start;
  h.ns = h.ns + best - start;
  h.ne = h.ne + best - start;
}

inline bool EdgeIsWord(std::u32string_view s, std::size_t b, std::size_t e,
                       bool first) {
  if (b >= e) return false;
  return IsWordChar(first ? s[b] : s[e - 1]);
}

// Widens hunks that split a word and merges hunks that end up touching.
inline std::vector<Hunk> AlignToWords(const std::vector<Hunk>& hunks,
                                      std::u32string_view a,
                                      std::u32string_view b) {
  std::vector<Hunk> out;
  std::size_t k = 0;
  while (k < hunks.size()) {
    Hunk h = hunks[k++];
    for (;;) {
      bool mid_word = h.os > 0 && IsWordChar(a[h.os - 1]) &&
                      (EdgeIsWord(a, h.os, h.oe, true) ||
                       EdgeIsWord(b, h.ns, h.ne, true));
      if (!mid_word) break;
      if (!out.empty() && out.back().oe == h.os) {
        h.os = out.back().os;
        h.ns = out.back().ns;
        out.pop_back();
        continue;
      }
      --h.os;
      --h.ns;
    }
    for (;;) {
      if (k < hunks.size() && h.oe == hunks[k].os) {
        h.oe = hunks[k].oe;
        h.ne = hunks[k].ne;
        ++k;
        continue;
      }
      bool mid_word = h.oe < a.size() && IsWordChar(a[h.oe]) &&
                      (EdgeIsWord(a, h.os, h.oe, false) ||
                       EdgeIsWord(b, h.ns, h.ne, false));
      if (!mid_word) break;
      ++h.oe;
      ++h.ne;
    }
    if (!out.empty() && out.back().oe == h.os) {
      out.back().oe = h.oe;
      out.back().ne = h.ne;
    } else {
      out.push_back(h);
    }
  }
  return out;
}

}  // namespace preservation_internal

// Hunk decomposition of `original` -> `model_plain` over decoded text.
inline std::vector<Alteration> ComputeAlterations(std::u32string_view a,
                                                  std::u32string_view b) {
  using namespace preservation_internal;
  std::vector<Hunk> hunks = LcsHunks(a, b);
  for (std::size_t k = 0; k < hunks.size(); ++k) {
    std::size_t lo = k == 0 ? 0 : hunks[k - 1].oe;
    std::size_t hi = k + 1 < hunks.size() ? hunks[k + 1].os : a.size();
    SlideHunk(hunks[k], a, b, lo, hi);
  }
  hunks = AlignToWords(hunks, a, b);

  std::vector<Alteration> out;
  out.reserve(hunks.size());
  for (const Hunk& h : hunks) {
    Alteration alt;
    alt.kind = h.os == h.oe   ? AlterationKind::kInsertion
               : h.ns == h.ne ? AlterationKind::kDeletion
                              : AlterationKind::kSubstitution;
    alt.orig_start = h.os;
    alt.orig_end = h.oe;
    alt.new_start = h.ns;
    alt.new_end = h.ne;
    alt.orig_text = EncodeUtf8(a.substr(h.os, h.oe - h.os));
    alt.new_text = EncodeUtf8(b.substr(h.ns, h.ne - h.ns));
    out.push_back(std::move(alt));
  }
  return out;
}

inline PreservationVerdict CheckPreservation(std::string_view original,
                                             std::string_view model_plain) {
  const std::u32string a = DecodeUtf8(original);
  const std::u32string b = DecodeUtf8(model_plain);
  PreservationVerdict verdict;
  if (a == b) return verdict;
  verdict.status = PreservationStatus::kAltered;
  verdict.alterations = ComputeAlterations(a, b);
  verdict.edit_ratio = static_cast<double>(LevenshteinDistance(a, b)) /
                       static_cast<double>(std::max({a.size(), b.size(),
                                                     std::size_t{1}}));
  return verdict;
}

// Replays the alterations on the original; yields the model text.
inline std::u32string ApplyAlterations(
    std::u32string_view original, const std::vector<Alteration>& alterations) {
  std::u32string out;
  std::size_t pos = 0;
  for (const Alteration& alt : alterations) {
    out.append(original.substr(pos, alt.orig_start - pos));
    out += DecodeUtf8(alt.new_text);
    pos = alt.orig_end;
  }
  out.append(original.substr(pos));
  return out;
}

struct RemapResult {
  std::vector<Annotation> remapped;    // offsets into the original
  std::vector<Annotation> unmappable;  // as given, on the model text
};

inline constexpr double kDefaultMaxEditRatio = 0.05;

// Carries annotations made on the model's text back onto the original. An
// annotation survives iff it does not touch any altered region; a deletion
// strictly inside a span also disqualifies it.
inline RemapResult RemapAnnotations(const std::vector<Annotation>& annotations,
                                    const PreservationVerdict& verdict,
                                    std::string_view original,
                                    double max_ratio = kDefaultMaxEditRatio) {
  const std::u32string orig = DecodeUtf8(original);
  std::size_t model_len = orig.size();
  for (const Alteration& alt : verdict.alterations) {
    model_len = model_len + (alt.new_end - alt.new_start) -
                (alt.orig_end - alt.orig_start);
  }
  for (const Annotation& a : annotations) {
    if (a.start >= a.end || a.end > model_len) {
      throw InconsistentInputError(
          "annotation [" + std::to_string(a.start) + "," +
          std::to_string(a.end) + ") outside model text of length " +
          std::to_string(model_len));
    }
  }

  RemapResult result;
  if (verdict.edit_ratio > max_ratio) {
    result.unmappable = annotations;
    return result;
  }
  for (const Annotation& a : annotations) {
    bool touched = false;
    std::ptrdiff_t shift = 0;
    for (const Alteration& alt : verdict.alterations) {
      if (alt.new_end <= a.start && alt.new_start < a.start) {
        shift += static_cast<std::ptrdiff_t>(alt.orig_end - alt.orig_start) -
                 static_cast<std::ptrdiff_t>(alt.new_end - alt.new_start);
        continue;
      }
      if (alt.new_start >= a.end) break;
      bool overlaps = alt.new_start < a.end && alt.new_end > a.start &&
                      alt.new_end > alt.new_start;
      bool inside_gap =
          alt.new_start == alt.new_end && alt.new_start > a.start;
      if (overlaps || inside_gap) {
        touched = true;
        break;
      }
      // A pure deletion sitting exactly at a.start precedes the span.
      shift += static_cast<std::ptrdiff_t>(alt.orig_end - alt.orig_start);
    }
    if (touched) {
      result.unmappable.push_back(a);
      continue;
    }
    Annotation moved = a;
    moved.start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(a.start) + shift);
    moved.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(a.end) + shift);
    moved.surface = EncodeUtf8(
        std::u32string_view(orig).substr(moved.start, moved.end - moved.start));
    if (moved.surface != a.surface) {
      result.unmappable.push_back(a);
      continue;
    }
    result.remapped.push_back(std::move(moved));
  }
  return result;
}

}  // namespace mythtag

#endif  // MYTHTAG_PRESERVATION_H_
