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

#ifndef MYTHTAG_STORE_H_
#define MYTHTAG_STORE_H_

// On-disk document store:
//
//   <root>/texts/<doc_id>.txt          plain UTF-8, "\n" line endings
//   <root>/annotations/<doc_id>.json   stand-off annotations
//   <root>/reports/<doc_id>.json       pipeline report
//   <root>/reports/<doc_id>.lint.json  lint findings
//   <root>/gold/<doc_id>.json          reviewed stand-off annotations
//   <root>/cache/<digest>.json         model transcripts
//
// Every stand-off write is validated first, so an invalid file never lands.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mythtag/io.h"
#include "mythtag/schema.h"
#include "mythtag/sha256.h"
#include "mythtag/standoff.h"
#include "mythtag/utf8.h"

namespace mythtag {

class UnknownDocumentError : public std::runtime_error {
 public:
  explicit UnknownDocumentError(const std::string& doc_id)
      : std::runtime_error("unknown document: " + doc_id) {}
};

class InvalidDocumentError : public std::runtime_error {
 public:
  explicit InvalidDocumentError(ValidationReport report)
      : std::runtime_error("annotations fail validation: " +
                           (report.violations.empty()
                                ? std::string("?")
                                : report.violations.front().detail)),
        report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

inline Json ToJson(const ValidationReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations) {
    violations.push_back(Json{{"kind", std::string(ToString(v.kind))},
                              {"index", v.index},
                              {"detail", v.detail}});
  }
  return Json{{"ok", r.ok()}, {"violations", violations}};
}

// Digest of an annotation set, used as the write precondition.
inline std::string AnnotationsDigest(const std::vector<Annotation>& anns) {
  return Sha256Hex(ToJson(anns).dump());
}

// Letters, digits, '_', '-', '.'; no leading '.'.
inline bool IsValidDocId(std::string_view id) {
  if (id.empty() || id.size() > 200 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
  });
}

// CRLF and lone CR become LF; a leading byte-order mark is dropped.
inline std::string NormalizeLineEndings(std::string_view in) {
  if (in.substr(0, 3) == "\xEF\xBB\xBF") in.remove_prefix(3);
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\r') {
      out += '\n';
      if (i + 1 < in.size() && in[i + 1] == '\n') ++i;
    } else {
      out += in[i];
    }
  }
  return out;
}

class Store {
 public:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path TextPath(const std::string& id) const {
    return root_ / "texts" / (id + ".txt");
  }
  std::filesystem::path AnnotationPath(const std::string& id) const {
    return root_ / "annotations" / (id + ".json");
  }
  std::filesystem::path ReportPath(const std::string& id) const {
    return root_ / "reports" / (id + ".json");
  }
  std::filesystem::path LintPath(const std::string& id) const {
    return root_ / "reports" / (id + ".lint.json");
  }
  std::filesystem::path MetricsPath(const std::string& id) const {
    return root_ / "reports" / (id + ".metrics.json");
  }
  std::filesystem::path GoldPath(const std::string& id) const {
    return root_ / "gold" / (id + ".json");
  }
  std::filesystem::path CacheDir() const { return root_ / "cache"; }

  bool HasDocument(const std::string& id) const {
    return IsValidDocId(id) && std::filesystem::is_regular_file(TextPath(id));
  }

  std::vector<std::string> ListDocuments() const {
    std::vector<std::string> ids;
    std::filesystem::path dir = root_ / "texts";
    if (!std::filesystem::is_directory(dir)) return ids;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") {
        std::string id = e.path().stem().string();
        if (IsValidDocId(id)) ids.push_back(id);
      }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  std::string ReadText(const std::string& id) const {
    if (!HasDocument(id)) throw UnknownDocumentError(id);
    std::string text = ReadFile(TextPath(id));
    if (!IsValidUtf8(text)) {
      throw FormatError("text of " + id + " is not valid UTF-8");
    }
    return text;
  }

  // Stores a plain-text file under `id`; returns the stored text.
  std::string Ingest(const std::string& id, std::string_view raw) const {
    if (!IsValidDocId(id)) {
      throw std::invalid_argument("invalid doc_id: " + id);
    }
    std::string text = NormalizeLineEndings(raw);
    if (!IsValidUtf8(text)) {
      throw FormatError("input for " + id + " is not valid UTF-8");
    }
    WriteFileAtomic(TextPath(id), text);
    return text;
  }

  // The document with its current annotations (none if never annotated).
  AnnotatedDocument LoadAnnotated(const std::string& id) const {
    std::string text = ReadText(id);
    if (!std::filesystem::is_regular_file(AnnotationPath(id))) {
      return AnnotatedDocument{id, std::move(text), {}, std::nullopt};
    }
    return AttachText(ReadStandoff(AnnotationPath(id)), std::move(text));
  }

  std::optional<StandoffFile> ReadAnnotations(const std::string& id) const {
    if (!std::filesystem::is_regular_file(AnnotationPath(id))) {
      return std::nullopt;
    }
    return ReadStandoff(AnnotationPath(id));
  }

  void SaveAnnotations(const AnnotatedDocument& doc) const {
    SaveValidated(AnnotationPath(doc.doc_id), doc, MakeStandoff(doc));
  }

  void SaveGold(const AnnotatedDocument& doc, std::string span_convention,
                Json review) const {
    StandoffFile f = MakeStandoff(doc);
    f.span_convention = std::move(span_convention);
    f.review = std::move(review);
    SaveValidated(GoldPath(doc.doc_id), doc, f);
  }

  std::optional<Json> ReadJsonIfExists(const std::filesystem::path& p) const {
    if (!std::filesystem::is_regular_file(p)) return std::nullopt;
    return ParseJson(ReadFile(p), p.string());
  }

 private:
  static void SaveValidated(const std::filesystem::path& path,
                            const AnnotatedDocument& doc,
                            const StandoffFile& f) {
    ValidationReport r = ValidateDocument(doc);
    if (!r.ok()) throw InvalidDocumentError(std::move(r));
    SaveStandoff(path, f);
  }

  std::filesystem::path root_;
};

}  // namespace mythtag

#endif  // MYTHTAG_STORE_H_
