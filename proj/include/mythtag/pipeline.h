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

#ifndef MYTHTAG_PIPELINE_H_
#define MYTHTAG_PIPELINE_H_

// Whole-document annotation: segmentation, gazetteer prefilter, one model
// call per passage, lenient parsing, preservation check, offset merging.
// Also the review lints over a finished document.

#include <unicode/uchar.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mythtag/io.h"
#include "mythtag/llm_gateway.h"
#include "mythtag/normalize.h"
#include "mythtag/preservation.h"
#include "mythtag/schema.h"
#include "mythtag/standoff.h"
#include "mythtag/tag_parser.h"
#include "mythtag/utf8.h"

namespace mythtag {

class DocumentRefusedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Passage {
  std::string doc_id;
  std::size_t start = 0;  // code points into the document
  std::size_t end = 0;
  std::string text;

  bool operator==(const Passage&) const = default;
};

// ---------------------------------------------------------------------------
// Segmentation

inline constexpr std::size_t kDefaultMaxPassageLength = 1200;

namespace pipeline_internal {

// Start of the next sentence after a boundary at `i` (just past . ! ?), or
// npos when `i` is not a sentence boundary.
inline std::size_t SentenceStartAfter(std::u32string_view t, std::size_t i) {
  if (i == 0 || i >= t.size()) return std::u32string_view::npos;
  char32_t p = t[i - 1];
  if (p != U'.' && p != U'!' && p != U'?') return std::u32string_view::npos;
  std::size_t j = i;
  while (j < t.size() && IsSpaceChar(t[j])) ++j;
  if (j == i || j >= t.size()) return std::u32string_view::npos;
  if (t[j] == U'«' || u_isupper(static_cast<UChar32>(t[j]))) return j;
  return std::u32string_view::npos;
}

// Splits the paragraph [b, e) into pieces of at most max_len, preferring
// sentence boundaries, then whitespace, then a hard cut.
inline void SplitParagraph(std::u32string_view t, std::size_t b, std::size_t e,
                           std::size_t max_len,
                           std::vector<std::pair<std::size_t, std::size_t>>& out) {
  while (e - b > max_len) {
    const std::size_t limit = b + max_len;
    std::size_t cut = std::u32string_view::npos;
    std::size_t next = 0;
    for (std::size_t i = limit; i > b; --i) {
      std::size_t s = SentenceStartAfter(t, i);
      if (s != std::u32string_view::npos) {
        cut = i;
        next = s;
        break;
      }
    }
    if (cut == std::u32string_view::npos) {
      for (std::size_t i = limit; i > b; --i) {
        if (IsSpaceChar(t[i]) && !IsSpaceChar(t[i - 1])) {
          cut = i;
          next = i;
          while (next < e && IsSpaceChar(t[next])) ++next;
          break;
        }
      }
    }
    if (cut == std::u32string_view::npos) {
      cut = limit;
      next = limit;
    }
    out.emplace_back(b, cut);
    b = next;
  }
  if (b < e) out.emplace_back(b, e);
}

}  // namespace pipeline_internal

// Paragraphs are separated by whitespace runs holding at least two line
// breaks; whitespace at passage edges belongs to the separators. Passages
// and separators concatenate back to the document.
inline std::vector<Passage> Segment(const std::string& doc_id,
                                    std::string_view text,
                                    std::size_t max_len =
                                        kDefaultMaxPassageLength) {
  if (max_len < 200) throw std::invalid_argument("max_len must be >= 200");
  const std::u32string t = DecodeUtf8(text);
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t i = 0;
  while (i < t.size()) {
    while (i < t.size() && IsSpaceChar(t[i])) ++i;
    if (i >= t.size()) break;
    // Paragraph runs until a whitespace run with >= 2 newlines.
    std::size_t j = i;
    std::size_t para_end = t.size();
    while (j < t.size()) {
      if (!IsSpaceChar(t[j])) {
        ++j;
        continue;
      }
      std::size_t k = j;
      int newlines = 0;
      while (k < t.size() && IsSpaceChar(t[k])) {
        if (t[k] == U'\n') ++newlines;
        ++k;
      }
      if (newlines >= 2 || k == t.size()) {
        para_end = j;
        break;
      }
      j = k;
    }
    if (j >= t.size()) para_end = t.size();
    pipeline_internal::SplitParagraph(t, i, para_end, max_len, spans);
    i = para_end;
  }
  std::vector<Passage> out;
  out.reserve(spans.size());
  for (auto [b, e] : spans) {
    out.push_back({doc_id, b, e,
                   EncodeUtf8(std::u32string_view(t).substr(b, e - b))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gazetteer prefilter

// One name per line; '#' starts a comment.
inline std::vector<std::string> ParseGazetteer(std::string_view content) {
  std::vector<std::string> names;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(b, e - b + 1));
  }
  return names;
}

inline std::vector<std::string> LoadGazetteer(
    const std::filesystem::path& path) {
  return ParseGazetteer(ReadFile(path));
}

// Whether `name` occurs in `haystack` (both normalized) on word boundaries.
inline bool ContainsWord(std::u32string_view haystack,
                         std::u32string_view name) {
  if (name.empty()) return false;
  for (std::size_t pos = haystack.find(name); pos != std::u32string_view::npos;
       pos = haystack.find(name, pos + 1)) {
    std::size_t end = pos + name.size();
    bool left = pos == 0 || !IsWordChar(haystack[pos - 1]) ||
                !IsWordChar(name.front());
    bool right = end == haystack.size() || !IsWordChar(haystack[end]) ||
                 !IsWordChar(name.back());
    if (left && right) return true;
  }
  return false;
}

struct PrefilterResult {
  Passage passage;
  bool selected = false;
};

inline std::vector<PrefilterResult> Prefilter(
    const std::vector<Passage>& passages,
    const std::vector<std::string>& gazetteer) {
  std::vector<std::u32string> names;
  for (const auto& n : gazetteer) {
    std::u32string norm = Normalize(std::string_view(n)).text;
    std::size_t b = norm.find_first_not_of(U' ');
    if (b == std::u32string::npos) continue;
    names.push_back(norm.substr(b, norm.find_last_not_of(U' ') - b + 1));
  }
  std::vector<PrefilterResult> out;
  out.reserve(passages.size());
  for (const auto& p : passages) {
    bool selected = names.empty();
    if (!selected) {
      std::u32string text = Normalize(std::string_view(p.text)).text;
      for (const auto& n : names) {
        if (ContainsWord(text, n)) {
          selected = true;
          break;
        }
      }
    }
    out.push_back({p, selected});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotation

enum class PassageStatus {
  kAnnotated,
  kAnnotatedWithRemap,
  kFailedPreservation,
  kParseError,
  kBackendError,
  kSkippedPrefilter,
};

inline constexpr std::array<PassageStatus, 6> kAllPassageStatuses = {
    PassageStatus::kAnnotated,          PassageStatus::kAnnotatedWithRemap,
    PassageStatus::kFailedPreservation, PassageStatus::kParseError,
    PassageStatus::kBackendError,       PassageStatus::kSkippedPrefilter,
};

inline constexpr std::string_view ToString(PassageStatus s) {
  switch (s) {
    case PassageStatus::kAnnotated: return "annotated";
    case PassageStatus::kAnnotatedWithRemap: return "annotated_with_remap";
    case PassageStatus::kFailedPreservation: return "failed_preservation";
    case PassageStatus::kParseError: return "parse_error";
    case PassageStatus::kBackendError: return "backend_error";
    case PassageStatus::kSkippedPrefilter: return "skipped_prefilter";
  }
  return "";
}

struct PassageEntry {
  std::size_t index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  PassageStatus status = PassageStatus::kSkippedPrefilter;
  int model_calls = 0;  // requests answered by backend or cache
  int backend_attempts = 0;
  std::vector<std::string> prompt_digests;
  std::vector<Alteration> alterations;  // of the last response
  double edit_ratio = 0.0;
  std::vector<Annotation> unmappable;   // on the model's text
  std::vector<std::string> warnings;
  std::string error;
  std::size_t annotation_count = 0;
};

struct PipelineReport {
  std::string doc_id;
  std::string text_sha256;
  std::vector<PassageEntry> passages;

  std::map<PassageStatus, std::size_t> Counts() const {
    std::map<PassageStatus, std::size_t> counts;
    for (PassageStatus s : kAllPassageStatuses) counts[s] = 0;
    for (const auto& p : passages) ++counts[p.status];
    return counts;
  }
};

inline Json ToJson(const Alteration& a) {
  return Json{{"kind", std::string(ToString(a.kind))},
              {"orig_start", a.orig_start},
              {"orig_end", a.orig_end},
              {"new_start", a.new_start},
              {"new_end", a.new_end},
              {"orig_text", a.orig_text},
              {"new_text", a.new_text}};
}

inline Json ToJson(const PassageEntry& p) {
  Json alts = Json::array();
  for (const auto& a : p.alterations) alts.push_back(ToJson(a));
  return Json{{"index", p.index},
              {"start", p.start},
              {"end", p.end},
              {"status", std::string(ToString(p.status))},
              {"model_calls", p.model_calls},
              {"backend_attempts", p.backend_attempts},
              {"prompt_digests", p.prompt_digests},
              {"alterations", alts},
              {"edit_ratio", p.edit_ratio},
              {"unmappable", ToJson(p.unmappable)},
              {"warnings", p.warnings},
              {"error", p.error},
              {"annotation_count", p.annotation_count}};
}

inline Json ToJson(const PipelineReport& r) {
  Json passages = Json::array();
  for (const auto& p : r.passages) passages.push_back(ToJson(p));
  Json counts = Json::object();
  for (auto [s, n] : r.Counts()) counts[std::string(ToString(s))] = n;
  return Json{{"doc_id", r.doc_id},
              {"text_sha256", r.text_sha256},
              {"passages", passages},
              {"counts", counts}};
}

struct PipelineConfig {
  std::size_t max_passage_length = kDefaultMaxPassageLength;
  std::vector<std::string> gazetteer;  // empty: every passage selected
  double max_edit_ratio = kDefaultMaxEditRatio;
  int workers = 4;
  PromptTemplate prompt = DefaultPromptTemplate();
};

struct PipelineResult {
  AnnotatedDocument document;
  PipelineReport report;
};

namespace pipeline_internal {

// Models often wrap their answer in a newline; passages never start or end
// with whitespace, so edge whitespace of the response is dropped.
inline std::string_view TrimResponse(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\n' || s[b] == '\r' || s[b] == '\t')) {
    ++b;
  }
  while (e > b &&
         (s[e - 1] == ' ' || s[e - 1] == '\n' || s[e - 1] == '\r' ||
          s[e - 1] == '\t')) {
    --e;
  }
  return s.substr(b, e - b);
}

// Annotates one passage; the annotations returned are on the passage text.
inline std::vector<Annotation> AnnotatePassage(const Passage& passage,
                                               Gateway& gateway,
                                               const PipelineConfig& config,
                                               PassageEntry& entry) {
  const std::string prompt = BuildAnnotationPrompt(passage.text, config.prompt);
  const int tokens = DefaultMaxTokens(passage.text);
  for (int round = 0; round < 2; ++round) {
    Completion c;
    try {
      c = gateway.Complete(prompt, tokens, /*bypass_cache=*/round > 0);
    } catch (const BackendError& e) {
      entry.status = PassageStatus::kBackendError;
      entry.error = e.what();
      return {};
    }
    ++entry.model_calls;
    entry.backend_attempts += c.attempts;
    entry.prompt_digests.push_back(c.transcript.prompt_digest);

    ParsedPassage parsed;
    try {
      parsed = ParseInline(TrimResponse(c.transcript.response),
                           ParseMode::kLenient);
    } catch (const TagParseError& e) {
      entry.status = PassageStatus::kParseError;
      entry.error = e.what();
      return {};
    } catch (const Utf8Error& e) {
      entry.status = PassageStatus::kParseError;
      entry.error = e.what();
      return {};
    }
    entry.warnings = parsed.warnings;

    PreservationVerdict verdict =
        CheckPreservation(passage.text, parsed.plain_text);
    entry.alterations = verdict.alterations;
    entry.edit_ratio = verdict.edit_ratio;
    entry.unmappable.clear();
    if (verdict.identical()) {
      entry.status = PassageStatus::kAnnotated;
      return parsed.annotations;
    }
    if (verdict.edit_ratio <= config.max_edit_ratio) {
      RemapResult r = RemapAnnotations(parsed.annotations, verdict,
                                       passage.text, config.max_edit_ratio);
      entry.status = PassageStatus::kAnnotatedWithRemap;
      entry.unmappable = r.unmappable;
      for (const auto& a : r.unmappable) {
        entry.warnings.push_back("unmappable annotation \"" + a.surface +
                                 "\" dropped");
      }
      return r.remapped;
    }
  }
  entry.status = PassageStatus::kFailedPreservation;
  entry.error = "model altered the passage beyond the edit budget";
  return {};
}

}  // namespace pipeline_internal

inline PipelineResult AnnotateDocument(const std::string& doc_id,
                                       const std::string& text,
                                       Gateway& gateway,
                                       const PipelineConfig& config = {}) {
  if (text.find('<') != std::string::npos) {
    throw DocumentRefusedError(
        "document " + doc_id +
        " contains '<', which cannot be told apart from model markup");
  }
  if (!IsValidUtf8(text)) {
    throw DocumentRefusedError("document " + doc_id + " is not valid UTF-8");
  }
  const std::vector<PrefilterResult> selected =
      Prefilter(Segment(doc_id, text, config.max_passage_length),
                config.gazetteer);

  PipelineResult result;
  result.report.doc_id = doc_id;
  result.report.text_sha256 = Sha256Hex(text);
  result.report.passages.resize(selected.size());
  std::vector<std::vector<Annotation>> local(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    auto& entry = result.report.passages[i];
    entry.index = i;
    entry.start = selected[i].passage.start;
    entry.end = selected[i].passage.end;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < selected.size(); i = next++) {
      if (!selected[i].selected) continue;
      local[i] = pipeline_internal::AnnotatePassage(
          selected[i].passage, gateway, config, result.report.passages[i]);
    }
  };
  const int n = std::max(1, std::min<int>(config.workers,
                                          static_cast<int>(selected.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  // Merge in passage order.
  AnnotatedDocument& doc = result.document;
  doc.doc_id = doc_id;
  doc.text = text;
  const std::u32string full = DecodeUtf8(text);
  std::vector<std::string> digests;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    auto& entry = result.report.passages[i];
    for (const Annotation& a : local[i]) {
      doc.annotations.push_back(
          MakeAnnotation(full, a.start + entry.start, a.end + entry.start,
                         a.type));
    }
    entry.annotation_count = local[i].size();
    digests.insert(digests.end(), entry.prompt_digests.begin(),
                   entry.prompt_digests.end());
  }
  std::string joined;
  for (const auto& d : digests) joined += d + "\n";
  doc.provenance =
      Provenance{gateway.config().model, Sha256Hex(joined), gateway.Now()};
  ValidationReport check = ValidateDocument(doc);
  if (!check.ok()) {
    throw std::logic_error("pipeline produced an invalid document: " +
                           check.violations.front().detail);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Lints

enum class LintKind { kTypeConflict, kRepeatedSurface, kSpanSuspect };

inline constexpr std::string_view ToString(LintKind k) {
  switch (k) {
    case LintKind::kTypeConflict: return "type_conflict";
    case LintKind::kRepeatedSurface: return "repeated_surface";
    case LintKind::kSpanSuspect: return "span_suspect";
  }
  return "";
}

struct LintFinding {
  LintKind kind;
  std::vector<std::size_t> annotations;  // indices into doc.annotations
  std::string detail;

  bool operator==(const LintFinding&) const = default;
};

struct LintConfig {
  // Phrases that, right before a span, hint the span should include them.
  std::vector<std::string> cues = {"île de", "palais de", "mont",
                                   "temple de"};
};

inline Json ToJson(const LintFinding& f) {
  return Json{{"kind", std::string(ToString(f.kind))},
              {"annotations", f.annotations},
              {"detail", f.detail}};
}

inline Json ToJson(const std::vector<LintFinding>& findings) {
  Json arr = Json::array();
  for (const auto& f : findings) arr.push_back(ToJson(f));
  return arr;
}

inline std::vector<LintFinding> LintDocument(const AnnotatedDocument& doc,
                                             const LintConfig& config = {}) {
  std::vector<LintFinding> findings;
  const std::u32string text = DecodeUtf8(doc.text);

  // Groups by normalized surface, in order of first appearance.
  std::vector<std::u32string> keys;
  std::map<std::u32string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < doc.annotations.size(); ++i) {
    std::u32string key =
        Normalize(std::string_view(doc.annotations[i].surface)).text;
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) keys.push_back(key);
    it->second.push_back(i);
  }
  for (const auto& key : keys) {
    const auto& members = groups[key];
    if (members.size() < 2) continue;
    std::set<std::string_view> types;
    for (std::size_t i : members) types.insert(ToString(doc.annotations[i].type));
    const std::string surface = doc.annotations[members.front()].surface;
    if (types.size() >= 2) {
      std::string list;
      for (auto t : types) list += (list.empty() ? "" : ", ") + std::string(t);
      findings.push_back({LintKind::kTypeConflict, members,
                          "\"" + surface + "\" is typed " + list});
    }
    findings.push_back({LintKind::kRepeatedSurface, members,
                        "\"" + surface + "\" annotated " +
                            std::to_string(members.size()) + " times"});
  }

  std::vector<std::u32string> cues;
  for (const auto& c : config.cues) {
    cues.push_back(Normalize(std::string_view(c)).text);
  }
  for (std::size_t i = 0; i < doc.annotations.size(); ++i) {
    const Annotation& a = doc.annotations[i];
    for (std::size_t c = 0; c < cues.size(); ++c) {
      std::size_t end = a.start;
      if (end > 0 && IsSpaceChar(text[end - 1])) --end;
      const std::size_t len = cues[c].size();
      if (len == 0 || end < len) continue;
      const std::size_t begin = end - len;
      if (begin > 0 && IsWordChar(text[begin - 1])) continue;
      std::u32string window =
          Normalize(std::u32string_view(text).substr(begin, len)).text;
      if (window != cues[c]) continue;
      findings.push_back({LintKind::kSpanSuspect, {i},
                          "\"" + a.surface + "\" follows \"" +
                              config.cues[c] + "\"; span may be too short"});
      break;
    }
  }
  std::stable_sort(findings.begin(), findings.end(),
                   [](const LintFinding& x, const LintFinding& y) {
                     if (x.annotations.front() != y.annotations.front()) {
                       return x.annotations.front() < y.annotations.front();
                     }
                     return x.kind < y.kind;
                   });
  return findings;
}

}  // namespace mythtag

#endif  // MYTHTAG_PIPELINE_H_
