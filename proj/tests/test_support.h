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

#ifndef MYTHTAG_TESTS_TEST_SUPPORT_H_
#define MYTHTAG_TESTS_TEST_SUPPORT_H_

// Generators, oracles and fixture helpers shared by the unit tests and the
// acceptance binary. Oracles here are deliberately naive and share no code
// with the search paths they check.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mythtag/io.h"
#include "mythtag/normalize.h"
#include "mythtag/quote_verifier.h"
#include "mythtag/schema.h"
#include "mythtag/tag_parser.h"
#include "mythtag/utf8.h"

namespace mythtag::testing {

inline std::filesystem::path DataDir() { return MYTHTAG_TEST_DATA_DIR; }
inline std::filesystem::path CliPath() { return MYTHTAG_CLI_PATH; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mythtag") {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw IoError("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const {
    return path_ / rel;
  }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr, interleaved
};

// Runs the CLI binary with `args` (already shell-quoted where needed).
inline CommandResult RunCli(const std::string& args) {
  std::string cmd = "'" + CliPath().string() + "' " + args + " 2>&1";
  CommandResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string Quote(const std::filesystem::path& p) {
  return "'" + p.string() + "'";
}

// ---------------------------------------------------------------------------
// Random passages

inline constexpr std::u32string_view kPassageAlphabet =
    U"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZéèêàùçôîœÉÀ"
    U"     ,.;:!?’'\"«»—-()>/=\n ";

inline std::u32string RandomText(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<std::size_t> pick(0,
                                                  kPassageAlphabet.size() - 1);
  std::u32string s;
  s.reserve(len);
  for (std::size_t i = 0; i < len; ++i) s.push_back(kPassageAlphabet[pick(rng)]);
  return s;
}

inline EntityType RandomType(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, kAllEntityTypes.size() - 1);
  return kAllEntityTypes[pick(rng)];
}

// A valid passage: random text, sorted disjoint nonempty spans (possibly
// adjacent), random types.
inline ParsedPassage RandomPassage(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len_dist(0, 160);
  const std::u32string text = RandomText(rng, len_dist(rng));
  ParsedPassage p;
  p.plain_text = EncodeUtf8(text);
  std::size_t pos = 0;
  std::uniform_int_distribution<int> coin(0, 3);
  while (pos < text.size()) {
    std::uniform_int_distribution<std::size_t> gap(0, 12);
    std::size_t s = pos + (coin(rng) == 0 ? 0 : gap(rng));
    if (s >= text.size()) break;
    std::uniform_int_distribution<std::size_t> span(1, std::min<std::size_t>(
                                                           20, text.size() - s));
    std::size_t e = s + span(rng);
    p.annotations.push_back(MakeAnnotation(text, s, e, RandomType(rng)));
    pos = e;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Edit distance oracles

// Textbook two-row Levenshtein.
inline std::size_t Levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// The same recurrence, abandoned once a whole row exceeds `cutoff` (row
// minima never decrease). Returns cutoff + 1 in that case.
inline std::size_t LevenshteinAtMost(std::u32string_view a,
                                     std::u32string_view b,
                                     std::size_t cutoff) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    std::size_t row_min = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > cutoff) return cutoff + 1;
    std::swap(prev, cur);
  }
  return std::min(prev[b.size()], cutoff + 1);
}

struct OracleVerdict {
  QuoteStatus status = QuoteStatus::kNotFound;
  std::size_t best_edits = 0;  // meaningful unless not_found
  double best_distance = 0.0;
};

// Normalized corpus for the oracle.
struct OracleCorpus {
  std::vector<std::u32string> texts;
};

inline OracleCorpus MakeOracleCorpus(
    const std::vector<std::pair<std::string, std::string>>& corpus) {
  OracleCorpus c;
  for (const auto& [id, text] : corpus) {
    c.texts.push_back(Normalize(std::string_view(text)).text);
  }
  return c;
}

// Multiset difference |x \ window| kept up to date while a window slides.
template <typename Key>
class SlidingSurplus {
 public:
  void Need(Key k) { ++surplus_, ++diff_[k]; }
  void Enter(Key k) { Shift(k, -1); }
  void Leave(Key k) { Shift(k, +1); }
  std::size_t value() const { return static_cast<std::size_t>(surplus_); }

 private:
  void Shift(Key k, long delta) {
    long& x = diff_[k];
    long before = std::max(0L, x);
    x += delta;
    surplus_ += std::max(0L, x) - before;
  }
  std::unordered_map<Key, long> diff_;  // count in x minus count in window
  long surplus_ = 0;
};

inline std::uint64_t Bigram(char32_t a, char32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Brute force: exact by substring search; otherwise every window of the
// quote's length (a whole document when shorter) is a candidate. Bigrams
// of q missing from the window, halved, bound the distance from below (one
// edit destroys at most two bigrams) and skip hopeless windows. Survivors
// get the row-cutoff textbook DP.
inline OracleVerdict OracleVerify(const OracleCorpus& corpus,
                                  std::string_view quote, double threshold) {
  const std::u32string q = NormalizeQuote(quote, NormalizationConfig{});
  const std::size_t m = q.size();
  OracleVerdict v;
  for (const auto& t : corpus.texts) {
    if (t.find(q) != std::u32string::npos) {
      v.status = QuoteStatus::kExact;
      return v;
    }
  }
  const auto k = static_cast<std::size_t>(
      std::floor(threshold * static_cast<double>(m) + 1e-9));
  if (k == 0) return v;

  std::size_t best = k + 1;
  for (const auto& t : corpus.texts) {
    const std::size_t n = t.size();
    if (n < m) {
      best = std::min(best, Levenshtein(q, t));
      continue;
    }
    SlidingSurplus<std::uint64_t> bigrams;
    for (std::size_t i = 0; i + 1 < m; ++i) bigrams.Need(Bigram(q[i], q[i + 1]));
    for (std::size_t i = 0; i + 1 < m; ++i) bigrams.Enter(Bigram(t[i], t[i + 1]));
    for (std::size_t a = 0; a + m <= n; ++a) {
      if (a > 0) {
        if (m >= 2) {
          bigrams.Leave(Bigram(t[a - 1], t[a]));
          bigrams.Enter(Bigram(t[a + m - 2], t[a + m - 1]));
        }
      }
      const std::size_t cutoff = std::min(k, best);
      if ((bigrams.value() + 1) / 2 > cutoff) continue;
      std::size_t d =
          LevenshteinAtMost(q, std::u32string_view(t).substr(a, m), cutoff);
      if (d < best) best = d;
    }
  }
  if (best <= k) {
    v.status = QuoteStatus::kNear;
    v.best_edits = best;
    v.best_distance = static_cast<double>(best) / static_cast<double>(m);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Quote query generation

// Every *.txt in `dir`, keyed by stem, in file-name order.
inline std::vector<std::pair<std::string, std::string>> LoadCorpus(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, std::string>> corpus;
  for (const auto& f : files) {
    corpus.emplace_back(f.stem().string(), ReadFile(f));
  }
  return corpus;
}

enum class QueryKind { kVerbatim, kMutated, kPastiche };

struct Query {
  QueryKind kind;
  std::string text;
};

inline std::u32string RandomSlice(
    std::mt19937_64& rng, const std::vector<std::u32string>& docs,
    std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> pick_doc(0, docs.size() - 1);
  const std::u32string& d = docs[pick_doc(rng)];
  std::uniform_int_distribution<std::size_t> pick_len(min_len, max_len);
  std::size_t len = std::min(pick_len(rng), d.size());
  std::uniform_int_distribution<std::size_t> pick_start(0, d.size() - len);
  return d.substr(pick_start(rng), len);
}

// Applies round(rate * len) random single-character edits.
inline std::u32string Mutate(std::mt19937_64& rng, std::u32string s,
                             double rate) {
  static constexpr std::u32string_view kLetters =
      U"abcdefghijklmnopqrstuvwxyzéèàç ";
  std::uniform_int_distribution<std::size_t> letter(0, kLetters.size() - 1);
  std::uniform_int_distribution<int> op(0, 2);
  const auto edits = static_cast<std::size_t>(
      std::lround(rate * static_cast<double>(s.size())));
  for (std::size_t e = 0; e < std::max<std::size_t>(edits, 1); ++e) {
    std::uniform_int_distribution<std::size_t> at(0, s.size());
    std::size_t i = at(rng);
    int o = s.empty() ? 0 : op(rng);
    if (o == 0) {
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(i), kLetters[letter(rng)]);
    } else if (i < s.size()) {
      if (o == 1) {
        s.erase(s.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        s[i] = kLetters[letter(rng)];
      }
    }
  }
  return s;
}

// Words of the corpus shuffled into a plausible-looking sentence.
inline std::u32string Pastiche(std::mt19937_64& rng,
                               const std::vector<std::u32string>& words,
                               std::size_t target_len) {
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::u32string s;
  while (s.size() < target_len) {
    if (!s.empty()) s.push_back(U' ');
    s += words[pick(rng)];
  }
  return s;
}

inline std::vector<std::u32string> CorpusWords(
    const std::vector<std::u32string>& docs) {
  std::vector<std::u32string> words;
  for (const auto& d : docs) {
    std::u32string w;
    for (char32_t c : d) {
      if (IsWordChar(c)) {
        w.push_back(c);
      } else if (!w.empty()) {
        if (w.size() >= 3) words.push_back(w);
        w.clear();
      }
    }
  }
  return words;
}

// A third each of verbatim slices, slices mutated at 1-30%, and pastiches.
inline std::vector<Query> GenerateQueries(
    std::mt19937_64& rng,
    const std::vector<std::pair<std::string, std::string>>& corpus,
    std::size_t count) {
  std::vector<std::u32string> docs;
  for (const auto& [id, text] : corpus) docs.push_back(DecodeUtf8(text));
  const std::vector<std::u32string> words = CorpusWords(docs);
  std::uniform_real_distribution<double> rate(0.01, 0.30);
  std::uniform_int_distribution<std::size_t> plen(30, 200);
  std::vector<Query> out;
  for (std::size_t i = 0; i < count; ++i) {
    switch (i % 3) {
      case 0:
        out.push_back({QueryKind::kVerbatim,
                       EncodeUtf8(RandomSlice(rng, docs, 12, 300))});
        break;
      case 1:
        out.push_back({QueryKind::kMutated,
                       EncodeUtf8(Mutate(rng, RandomSlice(rng, docs, 20, 280),
                                         rate(rng)))});
        break;
      default:
        out.push_back({QueryKind::kPastiche,
                       EncodeUtf8(Pastiche(rng, words, plen(rng)))});
        break;
    }
    // A slice made only of blanks normalizes to nothing; redraw it.
    if (NormalizeQuote(out.back().text, NormalizationConfig{}).empty()) {
      out.pop_back();
      --i;
    }
  }
  return out;
}

}  // namespace mythtag::testing

#endif  // MYTHTAG_TESTS_TEST_SUPPORT_H_
