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

#ifndef MYTHTAG_STANDOFF_H_
#define MYTHTAG_STANDOFF_H_

// Stand-off annotation files:
//
//   {
//     "doc_id": "...",
//     "text_sha256": "<hex digest of the UTF-8 text bytes>",
//     "annotations": [{"start": 0, "end": 5, "type": "deity",
//                      "surface": "Diane"}, ...],
//     "provenance": {...},        optional
//     "span_convention": "...",   optional, used by gold files
//     "review": {...}             optional, written on acceptance
//   }
//
// The text lives in a sibling UTF-8 file; loading refuses a text whose
// digest differs from text_sha256.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mythtag/io.h"
#include "mythtag/schema.h"
#include "mythtag/sha256.h"

namespace mythtag {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DigestMismatchError : public std::runtime_error {
 public:
  DigestMismatchError(const std::string& expected, const std::string& actual)
      : std::runtime_error("text digest mismatch: file declares " + expected +
                           ", text hashes to " + actual) {}
};

inline Json ToJson(const Annotation& a) {
  return Json{{"start", a.start},
              {"end", a.end},
              {"type", std::string(ToString(a.type))},
              {"surface", a.surface}};
}

// Labels go through ParseEntityType, so "DEITY" or "half\_creature" load.
inline Annotation AnnotationFromJson(const Json& j) {
  try {
    Annotation a;
    a.start = j.at("start").get<std::size_t>();
    a.end = j.at("end").get<std::size_t>();
    a.type = ParseEntityType(j.at("type").get<std::string>());
    a.surface = j.at("surface").get<std::string>();
    return a;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad annotation record: ") + e.what());
  }
}

inline Json ToJson(const std::vector<Annotation>& annotations) {
  Json arr = Json::array();
  for (const auto& a : annotations) arr.push_back(ToJson(a));
  return arr;
}

inline std::vector<Annotation> AnnotationsFromJson(const Json& j) {
  if (!j.is_array()) throw FormatError("annotations must be an array");
  std::vector<Annotation> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(AnnotationFromJson(item));
  return out;
}

inline Json ToJson(const Provenance& p) {
  return Json{{"model", p.model},
              {"prompt_digest", p.prompt_digest},
              {"timestamp", p.timestamp}};
}

// Parsed stand-off file, before its text is attached.
struct StandoffFile {
  std::string doc_id;
  std::string text_sha256;
  std::vector<Annotation> annotations;
  std::optional<Provenance> provenance;
  std::optional<std::string> span_convention;
  Json review;  // null when absent
};

inline Json ToJson(const StandoffFile& f) {
  Json j{{"doc_id", f.doc_id},
         {"text_sha256", f.text_sha256},
         {"annotations", ToJson(f.annotations)}};
  if (f.provenance) j["provenance"] = ToJson(*f.provenance);
  if (f.span_convention) j["span_convention"] = *f.span_convention;
  if (!f.review.is_null()) j["review"] = f.review;
  return j;
}

inline StandoffFile StandoffFromJson(const Json& j) {
  try {
    StandoffFile f;
    f.doc_id = j.at("doc_id").get<std::string>();
    f.text_sha256 = j.at("text_sha256").get<std::string>();
    f.annotations = AnnotationsFromJson(j.at("annotations"));
    if (j.contains("provenance")) {
      const Json& p = j["provenance"];
      f.provenance = Provenance{p.value("model", ""),
                                p.value("prompt_digest", ""),
                                p.value("timestamp", "")};
    }
    if (j.contains("span_convention")) {
      f.span_convention = j["span_convention"].get<std::string>();
    }
    if (j.contains("review")) f.review = j["review"];
    return f;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad stand-off file: ") + e.what());
  }
}

inline StandoffFile MakeStandoff(const AnnotatedDocument& doc) {
  StandoffFile f;
  f.doc_id = doc.doc_id;
  f.text_sha256 = Sha256Hex(doc.text);
  f.annotations = doc.annotations;
  f.provenance = doc.provenance;
  return f;
}

// Pretty-printed with sorted keys and a trailing newline, so equal content
// always produces equal bytes.
inline std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

inline Json ParseJson(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

inline StandoffFile ReadStandoff(const std::filesystem::path& path) {
  return StandoffFromJson(ParseJson(ReadFile(path), path.string()));
}

// Attaches `text` after checking the digest and UTF-8 validity.
inline AnnotatedDocument AttachText(const StandoffFile& f, std::string text) {
  std::string actual = Sha256Hex(text);
  if (actual != f.text_sha256) throw DigestMismatchError(f.text_sha256, actual);
  if (!IsValidUtf8(text)) throw FormatError("text is not valid UTF-8");
  return AnnotatedDocument{f.doc_id, std::move(text), f.annotations,
                           f.provenance};
}

// Sibling text lookup: <stem>.txt next to the file, then <doc_id>.txt in the
// same directory, then ../texts/<doc_id>.txt (store layout).
inline std::optional<std::filesystem::path> FindSiblingText(
    const std::filesystem::path& standoff_path, const std::string& doc_id) {
  namespace fs = std::filesystem;
  fs::path dir = standoff_path.parent_path();
  fs::path same_stem = standoff_path;
  same_stem.replace_extension(".txt");
  for (const fs::path& candidate :
       {same_stem, dir / (doc_id + ".txt"),
        dir / ".." / "texts" / (doc_id + ".txt")}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

inline AnnotatedDocument LoadStandoff(
    const std::filesystem::path& standoff_path,
    std::optional<std::filesystem::path> text_path = std::nullopt) {
  StandoffFile f = ReadStandoff(standoff_path);
  if (!text_path) text_path = FindSiblingText(standoff_path, f.doc_id);
  if (!text_path) {
    throw IoError("no text file found for " + standoff_path.string());
  }
  return AttachText(f, ReadFile(*text_path));
}

inline void SaveStandoff(const std::filesystem::path& path,
                         const StandoffFile& f) {
  WriteFileAtomic(path, DumpJson(ToJson(f)));
}

}  // namespace mythtag

#endif  // MYTHTAG_STANDOFF_H_
