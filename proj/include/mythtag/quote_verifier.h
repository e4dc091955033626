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

#ifndef MYTHTAG_QUOTE_VERIFIER_H_
#define MYTHTAG_QUOTE_VERIFIER_H_

// Grounds claimed quotations against a corpus.
//
// A quote q of m normalized code points is compared with every window of m
// code points of every normalized document (a document shorter than m is a
// single window). The window distance is edit_distance / max(m, |window|).
// The verdict is exact when q occurs verbatim, near when the best window
// distance is within the threshold, not_found otherwise.
//
// Search: the index keeps one posting per text position, sorted by the
// 6-gram starting there, so a gram's postings are one contiguous run and any
// shorter prefix is a contiguous range too. With an edit budget k, q is cut
// into P >= k+1 pieces of length L = m / (k+1); a window within k edits
// contains at least P-k of them verbatim, each displaced by at most k from
// its offset in q. Candidate window starts are those with enough distinct
// piece hits on nearby diagonals, and each is scored with a banded edit
// distance that stops as soon as the budget is exceeded. The candidate set
// is complete, so results equal an exhaustive window scan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mythtag/normalize.h"
#include "mythtag/utf8.h"

namespace mythtag {

class EmptyQuoteError : public std::invalid_argument {
 public:
  EmptyQuoteError() : std::invalid_argument("quote is empty after normalization") {}
};

class DuplicateDocIdError : public std::invalid_argument {
 public:
  explicit DuplicateDocIdError(const std::string& doc_id)
      : std::invalid_argument("duplicate doc_id: " + doc_id) {}
};

struct IndexedDocument {
  std::string doc_id;
  std::u32string original;
  NormalizedText normalized;
};

class CorpusIndex {
 public:
  static constexpr std::size_t kGram = 6;

  struct Posting {
    uint32_t doc;
    uint32_t pos;
  };

  CorpusIndex() = default;

  const std::vector<IndexedDocument>& documents() const { return docs_; }
  const NormalizationConfig& config() const { return config_; }
  bool empty() const { return docs_.empty(); }

  // Postings whose text starts with `prefix` (1..kGram code points).
  std::pair<const Posting*, const Posting*> PrefixRange(
      std::u32string_view prefix) const {
    auto lo = std::lower_bound(
        postings_.begin(), postings_.end(), prefix,
        [this](const Posting& p, std::u32string_view q) {
          return Key(p, q.size()) < q;
        });
    auto hi = std::upper_bound(
        lo, postings_.end(), prefix,
        [this](std::u32string_view q, const Posting& p) {
          return q < Key(p, q.size());
        });
    return {postings_.data() + (lo - postings_.begin()),
            postings_.data() + (hi - postings_.begin())};
  }

  // Every position where `needle` occurs verbatim.
  std::vector<Posting> Occurrences(std::u32string_view needle) const {
    std::vector<Posting> out;
    if (needle.empty()) return out;
    auto [lo, hi] = PrefixRange(needle.substr(0, std::min(kGram, needle.size())));
    for (const Posting* p = lo; p != hi; ++p) {
      std::u32string_view text = docs_[p->doc].normalized.text;
      if (text.size() - p->pos >= needle.size() &&
          text.substr(p->pos, needle.size()) == needle) {
        out.push_back(*p);
      }
    }
    return out;
  }

  std::size_t posting_count() const { return postings_.size(); }

 private:
  friend CorpusIndex BuildIndex(
      const std::vector<std::pair<std::string, std::string>>& corpus,
      const NormalizationConfig& config);

  std::u32string_view Key(const Posting& p, std::size_t limit) const {
    std::u32string_view text = docs_[p.doc].normalized.text;
    return text.substr(p.pos, std::min({kGram, limit, text.size() - p.pos}));
  }

  std::vector<IndexedDocument> docs_;
  std::vector<Posting> postings_;  // sorted by (6-gram, doc, pos)
  NormalizationConfig config_;
};

// Throws DuplicateDocIdError, or std::invalid_argument for an empty text.
inline CorpusIndex BuildIndex(
    const std::vector<std::pair<std::string, std::string>>& corpus,
    const NormalizationConfig& config = {}) {
  CorpusIndex index;
  index.config_ = config;
  std::set<std::string> seen;
  for (const auto& [doc_id, text] : corpus) {
    if (!seen.insert(doc_id).second) throw DuplicateDocIdError(doc_id);
    if (text.empty()) {
      throw std::invalid_argument("empty text for doc_id " + doc_id);
    }
    IndexedDocument doc;
    doc.doc_id = doc_id;
    doc.original = DecodeUtf8(text);
    doc.normalized = Normalize(std::u32string_view(doc.original), config);
    index.docs_.push_back(std::move(doc));
  }
  // Sort on packed keys: three code points per word, 21 bits each, stored
  // as cp + 1 so that 0 marks the end of the text. Comparing the words
  // orders postings exactly as comparing the truncated 6-grams.
  static_assert(CorpusIndex::kGram == 6);
  struct Keyed {
    uint64_t hi, lo;
    CorpusIndex::Posting posting;
  };
  std::size_t total = 0;
  for (const auto& d : index.docs_) total += d.normalized.text.size();
  std::vector<Keyed> keyed;
  keyed.reserve(total);
  for (uint32_t d = 0; d < index.docs_.size(); ++d) {
    const std::u32string& t = index.docs_[d].normalized.text;
    const auto n = static_cast<uint32_t>(t.size());
    auto symbol = [&t, n](uint32_t i) -> uint64_t {
      return i < n ? static_cast<uint64_t>(t[i]) + 1 : 0;
    };
    for (uint32_t p = 0; p < n; ++p) {
      uint64_t hi = (symbol(p) << 42) | (symbol(p + 1) << 21) | symbol(p + 2);
      uint64_t lo =
          (symbol(p + 3) << 42) | (symbol(p + 4) << 21) | symbol(p + 5);
      keyed.push_back({hi, lo, {d, p}});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.hi != y.hi) return x.hi < y.hi;
    if (x.lo != y.lo) return x.lo < y.lo;
    return x.posting.doc != y.posting.doc ? x.posting.doc < y.posting.doc
                                          : x.posting.pos < y.posting.pos;
  });
  index.postings_.reserve(total);
  for (const auto& k : keyed) index.postings_.push_back(k.posting);
  return index;
}

// Edit distance if it is at most `budget`, otherwise budget + 1. Only the
// diagonal band of width 2*budget+1 is computed, and rows stop once every
// cell exceeds the budget.
inline std::size_t BoundedEditDistance(std::u32string_view a,
                                       std::u32string_view b,
                                       std::size_t budget) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t inf = budget + 1;
  if ((n > m ? n - m : m - n) > budget) return inf;
  thread_local std::vector<std::size_t> prev_buf, cur_buf;
  prev_buf.assign(m + 2, inf);
  cur_buf.assign(m + 2, inf);
  std::size_t* prev = prev_buf.data();
  std::size_t* cur = cur_buf.data();
  for (std::size_t j = 0; j <= std::min(m, budget); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > budget ? i - budget : 1;
    const std::size_t hi = std::min(m, i + budget);
    cur[lo - 1] = (lo == 1 && i <= budget) ? i : inf;
    std::size_t row_min = cur[lo - 1];
    const char32_t ca = a[i - 1];
    for (std::size_t j = lo; j <= hi; ++j) {
      std::size_t v = prev[j - 1] + (ca == b[j - 1] ? 0 : 1);
      v = std::min(v, prev[j] + 1);
      v = std::min(v, cur[j - 1] + 1);
      v = std::min(v, inf);
      cur[j] = v;
      row_min = std::min(row_min, v);
    }
    if (hi < m) cur[hi + 1] = inf;
    if (row_min > budget) return inf;
    std::swap(prev, cur);
  }
  return std::min(prev[m], inf);
}

enum class QuoteStatus { kExact, kNear, kNotFound };

inline constexpr std::string_view ToString(QuoteStatus status) {
  switch (status) {
    case QuoteStatus::kExact: return "exact";
    case QuoteStatus::kNear: return "near";
    case QuoteStatus::kNotFound: return "not_found";
  }
  return "";
}

struct QuoteMatch {
  std::string doc_id;
  std::size_t start = 0;  // original code points
  std::size_t end = 0;
  double normalized_distance = 0.0;
  std::size_t edit_distance = 0;
  std::size_t window_start = 0;  // normalized code points
  std::size_t window_end = 0;

  bool operator==(const QuoteMatch&) const = default;
};

struct QuoteVerdict {
  QuoteStatus status = QuoteStatus::kNotFound;
  std::vector<QuoteMatch> matches;
  std::size_t quote_length = 0;  // normalized code points
};

inline constexpr double kDefaultQuoteThreshold = 0.2;

// Largest edit count d with d / length <= threshold.
inline std::size_t EditBudget(double threshold, std::size_t length) {
  return static_cast<std::size_t>(
      std::floor(threshold * static_cast<double>(length) + 1e-9));
}

// Normalized quote with the collapsed space at either end dropped.
inline std::u32string NormalizeQuote(std::string_view quote,
                                     const NormalizationConfig& config) {
  std::u32string q = Normalize(quote, config).text;
  std::size_t b = 0, e = q.size();
  while (b < e && q[b] == U' ') ++b;
  while (e > b && q[e - 1] == U' ') --e;
  return q.substr(b, e - b);
}

namespace quote_internal {

struct Window {
  uint32_t doc;
  std::size_t start;
  std::size_t length;
  std::size_t distance;
};

// For each end position j of `text` (0..n), the smallest edit distance
// between q and any substring of text ending at j, or budget + 1 when that
// exceeds the budget. Column-wise DP with Ukkonen's cutoff: rows past the
// last one within budget are not computed.
inline std::vector<std::size_t> SubstringDistances(std::u32string_view q,
                                                   std::u32string_view text,
                                                   std::size_t budget) {
  const std::size_t m = q.size();
  const std::size_t inf = budget + 1;
  std::vector<std::size_t> col(m + 1);
  for (std::size_t i = 0; i <= m; ++i) col[i] = std::min(i, inf);
  std::vector<std::size_t> ends(text.size() + 1, inf);
  if (m <= budget) ends[0] = m;
  // Rows to compute in the next column: one past the last row within
  // budget, since a cell is never below its upper-left neighbour.
  std::size_t last = std::min(budget + 1, m);
  for (std::size_t j = 1; j <= text.size(); ++j) {
    std::size_t diag = 0;  // previous column, row i - 1
    for (std::size_t i = 1; i <= last; ++i) {
      const std::size_t up = col[i];
      std::size_t v = q[i - 1] == text[j - 1]
                          ? diag
                          : std::min({diag, up, col[i - 1]}) + 1;
      diag = up;
      col[i] = std::min(v, inf);
    }
    while (last > 0 && col[last] > budget) --last;
    if (last == m) {
      ends[j] = col[m];
    } else {
      ++last;
      col[last] = inf;  // stale rows are only known to exceed the budget
    }
  }
  return ends;
}

// Windows with distance <= budget whose start lies in [from, to]. A window
// is one of the substrings ending where it ends, so SubstringDistances
// bounds its distance from below. Only the best distance is reported in the
// end, so budget shrinks to the best distance seen; ties are kept.
inline void ScanStarts(const std::u32string& q, const IndexedDocument& doc,
                       uint32_t doc_index, std::size_t from, std::size_t to,
                       std::size_t& budget, std::vector<Window>& out) {
  std::u32string_view text = doc.normalized.text;
  const std::size_t m = q.size();
  const std::vector<std::size_t> ends =
      SubstringDistances(q, text.substr(from, to - from + m), budget);
  for (std::size_t a = from; a <= to; ++a) {
    if (ends[a - from + m] > budget) continue;
    std::size_t d = BoundedEditDistance(q, text.substr(a, m), budget);
    if (d <= budget) {
      out.push_back({doc_index, a, m, d});
      budget = d;
    }
  }
}

// Candidate window starts for one document from piece hits: (diagonal,
// piece) pairs. Returns merged [from, to] intervals.
inline std::vector<std::pair<std::size_t, std::size_t>> CandidateIntervals(
    std::vector<std::pair<std::ptrdiff_t, std::size_t>>& hits,
    std::size_t pieces, std::size_t required, std::size_t budget,
    std::size_t last_start) {
  struct Event {
    std::ptrdiff_t at;
    int delta;
    std::size_t piece;
  };
  std::vector<Event> events;
  events.reserve(hits.size() * 2);
  const auto k = static_cast<std::ptrdiff_t>(budget);
  for (auto [diag, piece] : hits) {
    events.push_back({diag - k, +1, piece});
    events.push_back({diag + k + 1, -1, piece});
  }
  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    return x.at != y.at ? x.at < y.at : x.delta < y.delta;
  });
  std::vector<int> count(pieces, 0);
  std::size_t distinct = 0;
  std::vector<std::pair<std::size_t, std::size_t>> intervals;
  const auto limit = static_cast<std::ptrdiff_t>(last_start);
  for (std::size_t e = 0; e < events.size();) {
    const std::ptrdiff_t at = events[e].at;
    while (e < events.size() && events[e].at == at) {
      const Event& ev = events[e++];
      if (ev.delta > 0) {
        if (count[ev.piece]++ == 0) ++distinct;
      } else {
        if (--count[ev.piece] == 0) --distinct;
      }
    }
    if (distinct < required || e == events.size()) continue;
    std::ptrdiff_t from = std::max<std::ptrdiff_t>(at, 0);
    std::ptrdiff_t to = std::min<std::ptrdiff_t>(events[e].at - 1, limit);
    if (from > to) continue;
    if (!intervals.empty() &&
        static_cast<std::ptrdiff_t>(intervals.back().second) + 1 >= from) {
      intervals.back().second =
          std::max(intervals.back().second, static_cast<std::size_t>(to));
    } else {
      intervals.emplace_back(static_cast<std::size_t>(from),
                             static_cast<std::size_t>(to));
    }
  }
  return intervals;
}

inline std::vector<Window> NearWindows(const CorpusIndex& index,
                                       const std::u32string& q,
                                       std::size_t budget) {
  std::vector<Window> found;
  const auto& docs = index.documents();
  const std::size_t m = q.size();

  // Documents shorter than the quote are one window each.
  for (uint32_t d = 0; d < docs.size(); ++d) {
    std::u32string_view text = docs[d].normalized.text;
    if (text.size() < m) {
      std::size_t dist = BoundedEditDistance(q, text, budget);
      if (dist <= budget) {
        found.push_back({d, 0, text.size(), dist});
        budget = dist;
      }
    }
  }

  if (m < CorpusIndex::kGram) {
    for (uint32_t d = 0; d < docs.size(); ++d) {
      std::size_t n = docs[d].normalized.text.size();
      if (n >= m) ScanStarts(q, docs[d], d, 0, n - m, budget, found);
    }
    return found;
  }

  const std::size_t piece_len = m / (budget + 1);
  const std::size_t pieces = m / piece_len;
  const std::size_t required = pieces - budget;

  std::vector<std::vector<std::pair<std::ptrdiff_t, std::size_t>>> hits(
      docs.size());
  for (std::size_t j = 0; j < pieces; ++j) {
    std::u32string_view piece =
        std::u32string_view(q).substr(j * piece_len, piece_len);
    const auto offset = static_cast<std::ptrdiff_t>(j * piece_len);
    if (piece_len <= CorpusIndex::kGram) {
      auto [lo, hi] = index.PrefixRange(piece);
      for (const auto* p = lo; p != hi; ++p) {
        hits[p->doc].emplace_back(static_cast<std::ptrdiff_t>(p->pos) - offset,
                                  j);
      }
    } else {
      for (const auto& p : index.Occurrences(piece)) {
        hits[p.doc].emplace_back(static_cast<std::ptrdiff_t>(p.pos) - offset,
                                 j);
      }
    }
  }
  for (uint32_t d = 0; d < docs.size(); ++d) {
    std::size_t n = docs[d].normalized.text.size();
    if (n < m || hits[d].empty()) continue;
    for (auto [from, to] :
         CandidateIntervals(hits[d], pieces, required, budget, n - m)) {
      ScanStarts(q, docs[d], d, from, to, budget, found);
    }
  }
  return found;
}

}  // namespace quote_internal

// threshold must lie in [0, 1). Throws EmptyQuoteError.
inline QuoteVerdict VerifyQuote(const CorpusIndex& index,
                                std::string_view quote,
                                double threshold = kDefaultQuoteThreshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must lie in [0, 1)");
  }
  const std::u32string q = NormalizeQuote(quote, index.config());
  if (q.empty()) throw EmptyQuoteError();
  QuoteVerdict verdict;
  verdict.quote_length = q.size();
  const auto& docs = index.documents();

  auto to_match = [&](uint32_t d, std::size_t start, std::size_t length,
                      std::size_t distance) {
    const auto& doc = docs[d];
    auto [os, oe] = doc.normalized.ToOriginal(start, start + length);
    QuoteMatch match;
    match.doc_id = doc.doc_id;
    match.start = os;
    match.end = oe;
    match.edit_distance = distance;
    match.normalized_distance =
        static_cast<double>(distance) /
        static_cast<double>(std::max(q.size(), length));
    match.window_start = start;
    match.window_end = start + length;
    return match;
  };

  auto exact = index.Occurrences(q);
  if (!exact.empty()) {
    std::sort(exact.begin(), exact.end(), [](const auto& x, const auto& y) {
      return x.doc != y.doc ? x.doc < y.doc : x.pos < y.pos;
    });
    verdict.status = QuoteStatus::kExact;
    for (const auto& p : exact) {
      verdict.matches.push_back(to_match(p.doc, p.pos, q.size(), 0));
    }
    return verdict;
  }

  const std::size_t budget = EditBudget(threshold, q.size());
  if (budget == 0) return verdict;
  std::vector<quote_internal::Window> windows =
      quote_internal::NearWindows(index, q, budget);
  if (windows.empty()) return verdict;

  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (const auto& w : windows) best = std::min(best, w.distance);
  std::sort(windows.begin(), windows.end(), [](const auto& x, const auto& y) {
    return x.doc != y.doc ? x.doc < y.doc : x.start < y.start;
  });
  verdict.status = QuoteStatus::kNear;
  std::optional<quote_internal::Window> last;
  for (const auto& w : windows) {
    if (w.distance != best) continue;
    // Overlapping windows of equal distance describe the same passage;
    // keep the leftmost.
    if (last && last->doc == w.doc && w.start < last->start + last->length) {
      continue;
    }
    verdict.matches.push_back(to_match(w.doc, w.start, w.length, w.distance));
    last = w;
  }
  return verdict;
}

// A quotation as submitted for checking, with the document it is claimed
// to come from.
struct QuoteClaim {
  std::string quote;
  std::optional<std::string> claimed_doc_id;
};

struct ClaimVerdict {
  QuoteClaim claim;
  QuoteVerdict verdict;
  std::vector<std::string> warnings;
};

// Like VerifyQuote, plus a wrong_attribution warning when the quote is found
// but not in the claimed document.
inline ClaimVerdict VerifyClaim(const CorpusIndex& index, QuoteClaim claim,
                                double threshold = kDefaultQuoteThreshold) {
  ClaimVerdict out;
  out.verdict = VerifyQuote(index, claim.quote, threshold);
  if (claim.claimed_doc_id && out.verdict.status != QuoteStatus::kNotFound) {
    bool in_claimed = false;
    for (const auto& m : out.verdict.matches) {
      in_claimed = in_claimed || m.doc_id == *claim.claimed_doc_id;
    }
    if (!in_claimed) {
      out.warnings.push_back("wrong_attribution: found in " +
                             out.verdict.matches.front().doc_id + ", not in " +
                             *claim.claimed_doc_id);
    }
  }
  out.claim = std::move(claim);
  return out;
}

}  // namespace mythtag

#endif  // MYTHTAG_QUOTE_VERIFIER_H_
