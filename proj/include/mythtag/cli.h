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

#ifndef MYTHTAG_CLI_H_
#define MYTHTAG_CLI_H_

// The mythtag command line. Exit codes:
//   0  success
//   1  findings (validation violations, lint findings, not_found quotes,
//      passages that failed preservation or parsing)
//   2  usage error (bad flags, unknown document, unreadable input shape)
//   3  backend or I/O failure

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mythtag/evaluator.h"
#include "mythtag/io.h"
#include "mythtag/llm_gateway.h"
#include "mythtag/pipeline.h"
#include "mythtag/quote_verifier.h"
#include "mythtag/schema.h"
#include "mythtag/service.h"
#include "mythtag/standoff.h"
#include "mythtag/store.h"

namespace mythtag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFailure = 3;

inline constexpr std::string_view kUnverifiedBanner =
    "===== UNVERIFIED MODEL OUTPUT: generated commentary, not checked "
    "against any source =====";

// Timestamp used for every record written in mock mode, so offline runs
// are byte-reproducible.
inline constexpr std::string_view kMockTimestamp = "1970-01-01T00:00:00Z";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json ToJson(const QuoteMatch& m) {
  return Json{{"doc_id", m.doc_id},
              {"start", m.start},
              {"end", m.end},
              {"normalized_distance", m.normalized_distance},
              {"edit_distance", m.edit_distance}};
}

inline Json ToJson(const ClaimVerdict& v) {
  Json matches = Json::array();
  for (const auto& m : v.verdict.matches) matches.push_back(ToJson(m));
  Json j{{"quote", v.claim.quote},
         {"status", std::string(ToString(v.verdict.status))},
         {"matches", matches},
         {"warnings", v.warnings}};
  j["claimed_doc_id"] =
      v.claim.claimed_doc_id ? Json(*v.claim.claimed_doc_id) : Json();
  return j;
}

inline std::vector<QuoteClaim> QuoteClaimsFromJson(const Json& j) {
  const Json& list = j.is_object() && j.contains("quotes") ? j["quotes"] : j;
  if (!list.is_array()) throw UsageError("quotes file must hold a list");
  std::vector<QuoteClaim> claims;
  for (const auto& item : list) {
    QuoteClaim c;
    if (item.is_string()) {
      c.quote = item.get<std::string>();
    } else if (item.is_object() && item.contains("quote") &&
               item["quote"].is_string()) {
      c.quote = item["quote"].get<std::string>();
      if (item.contains("claimed_doc_id") &&
          item["claimed_doc_id"].is_string()) {
        c.claimed_doc_id = item["claimed_doc_id"].get<std::string>();
      }
    } else {
      throw UsageError("each quote needs a \"quote\" string");
    }
    claims.push_back(std::move(c));
  }
  return claims;
}

// Quoted stretches of a model answer: text inside « », “ ” or "..." of at
// least 20 code points. With none, the whole answer is one claim.
inline std::vector<std::string> ExtractQuotations(std::string_view answer) {
  const std::u32string t = DecodeUtf8(answer);
  std::vector<std::string> out;
  auto closer = [](char32_t c) -> char32_t {
    switch (c) {
      case U'«': return U'»';
      case U'“': return U'”';
      case U'"': return U'"';
      default: return 0;
    }
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    char32_t close = closer(t[i]);
    if (close == 0) continue;
    std::size_t j = t.find(close, i + 1);
    if (j == std::u32string::npos) break;
    std::u32string_view inner = std::u32string_view(t).substr(i + 1, j - i - 1);
    while (!inner.empty() && IsSpaceChar(inner.front())) inner.remove_prefix(1);
    while (!inner.empty() && IsSpaceChar(inner.back())) inner.remove_suffix(1);
    if (inner.size() >= 20) out.push_back(EncodeUtf8(inner));
    i = j;
  }
  if (out.empty()) {
    std::string whole(answer);
    if (whole.find_first_not_of(" \t\r\n") != std::string::npos) {
      out.push_back(whole);
    }
  }
  return out;
}

namespace cli_internal {

struct Context {
  std::string store_root = ".";
  std::ostream* out;
  std::ostream* err;
  Store store() const { return Store(store_root); }
};

inline BackendConfig LoadBackendConfig(const std::string& path) {
  if (path.empty()) throw UsageError("--backend <config.json> is required");
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError("backend config not found: " + path);
  }
  try {
    return BackendConfigFromJson(ParseJson(ReadFile(path), path));
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("bad backend config: ") + e.what());
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
}

// Gateway wiring shared by annotate and interpret. Mock runs are offline:
// no cache, no waiting between scripted retries, a fixed clock.
struct GatewayBundle {
  std::unique_ptr<Backend> backend;
  std::unique_ptr<TranscriptCache> cache;
  std::unique_ptr<Gateway> gateway;
};

inline GatewayBundle MakeGateway(const Context& ctx,
                                 const std::string& backend_path,
                                 const std::string& mock_dir) {
  GatewayBundle b;
  BackendConfig config = LoadBackendConfig(backend_path);
  GatewayOptions options;
  if (!mock_dir.empty()) {
    if (!std::filesystem::is_directory(mock_dir)) {
      throw UsageError("mock directory not found: " + mock_dir);
    }
    b.backend = MockBackend::FromDirectory(mock_dir);
    options.sleeper = [](std::chrono::milliseconds) {};
    options.clock = [] { return std::string(kMockTimestamp); };
  } else {
    b.backend = std::make_unique<HttpBackend>();
    b.cache = std::make_unique<TranscriptCache>(ctx.store().CacheDir());
  }
  b.gateway = std::make_unique<Gateway>(config, *b.backend, b.cache.get(),
                                        std::move(options));
  return b;
}

inline void RequireDocument(const Store& store, const std::string& id) {
  if (!store.HasDocument(id)) throw UsageError("unknown document: " + id);
}

inline int Ingest(const Context& ctx, const std::string& path,
                  const std::string& format, const std::string& id) {
  if (format != "txt") throw UsageError("unsupported format: " + format);
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    if (!id.empty()) throw UsageError("--id only applies to a single file");
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  Store store = ctx.store();
  for (const auto& f : files) {
    std::string doc_id = id.empty() ? f.stem().string() : id;
    if (!IsValidDocId(doc_id)) throw UsageError("invalid doc_id: " + doc_id);
    std::string text = store.Ingest(doc_id, ReadFile(f));
    *ctx.out << doc_id << "\t" << CodePointLength(text) << " code points\n";
  }
  return kExitOk;
}

inline int Annotate(const Context& ctx, const std::string& id,
                    const std::string& backend_path,
                    const std::string& gazetteer_path,
                    const std::string& mock_dir, std::size_t max_len,
                    int workers) {
  Store store = ctx.store();
  RequireDocument(store, id);
  GatewayBundle gw = MakeGateway(ctx, backend_path, mock_dir);
  PipelineConfig config;
  config.max_passage_length = max_len;
  config.workers = workers;
  if (!gazetteer_path.empty()) {
    if (!std::filesystem::is_regular_file(gazetteer_path)) {
      throw UsageError("gazetteer not found: " + gazetteer_path);
    }
    config.gazetteer = LoadGazetteer(gazetteer_path);
  }
  const std::string text = store.ReadText(id);
  PipelineResult result = AnnotateDocument(id, text, *gw.gateway, config);

  store.SaveAnnotations(result.document);
  WriteFileAtomic(store.ReportPath(id), DumpJson(ToJson(result.report)));
  std::vector<LintFinding> lints = LintDocument(result.document);
  WriteFileAtomic(store.LintPath(id),
                  DumpJson(Json{{"doc_id", id}, {"findings", ToJson(lints)}}));
  std::optional<Metrics> metrics;
  if (std::filesystem::is_regular_file(store.GoldPath(id))) {
    metrics = Evaluate(MakeStandoff(result.document),
                       ReadStandoff(store.GoldPath(id)));
    WriteFileAtomic(store.MetricsPath(id), DumpJson(ToJson(*metrics)));
  }

  auto counts = result.report.Counts();
  *ctx.out << id << ": " << result.document.annotations.size()
           << " annotations over " << result.report.passages.size()
           << " passages\n";
  for (auto [status, n] : counts) {
    if (n > 0) *ctx.out << "  " << ToString(status) << ": " << n << "\n";
  }
  *ctx.out << "  lint findings: " << lints.size() << "\n";
  if (metrics) {
    *ctx.out << "  recognition " << metrics->recognition_rate
             << ", type accuracy " << metrics->type_accuracy << "\n";
  }
  if (counts[PassageStatus::kBackendError] > 0) return kExitFailure;
  if (counts[PassageStatus::kFailedPreservation] > 0 ||
      counts[PassageStatus::kParseError] > 0) {
    return kExitFindings;
  }
  return kExitOk;
}

inline int Validate(const Context& ctx, const std::string& id, bool gold) {
  Store store = ctx.store();
  RequireDocument(store, id);
  std::filesystem::path p = gold ? store.GoldPath(id) : store.AnnotationPath(id);
  if (!std::filesystem::is_regular_file(p)) {
    throw IoError("no annotations at " + p.string());
  }
  StandoffFile f = ReadStandoff(p);
  std::string text = store.ReadText(id);
  std::string digest = Sha256Hex(text);
  if (f.text_sha256 != digest) {
    *ctx.out << DumpJson(Json{{"ok", false},
                              {"error", "text digest mismatch"},
                              {"expected", f.text_sha256},
                              {"actual", digest}});
    return kExitFindings;
  }
  ValidationReport r = ValidateDocument(AttachText(f, std::move(text)));
  *ctx.out << DumpJson(ToJson(r));
  return r.ok() ? kExitOk : kExitFindings;
}

inline int Lint(const Context& ctx, const std::string& id) {
  Store store = ctx.store();
  RequireDocument(store, id);
  AnnotatedDocument doc = store.LoadAnnotated(id);
  std::vector<LintFinding> findings = LintDocument(doc);
  *ctx.out << DumpJson(Json{{"doc_id", id}, {"findings", ToJson(findings)}});
  return findings.empty() ? kExitOk : kExitFindings;
}

// Every *.txt directly under `dir`, keyed by file stem.
inline std::vector<std::pair<std::string, std::string>> LoadCorpusDir(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw UsageError("corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, std::string>> corpus;
  for (const auto& f : files) {
    std::string text = ReadFile(f);
    if (text.empty()) continue;
    if (!IsValidUtf8(text)) throw FormatError(f.string() + " is not UTF-8");
    corpus.emplace_back(f.stem().string(), std::move(text));
  }
  return corpus;
}

inline int VerifyQuotes(const Context& ctx, const std::string& quotes_path,
                        const std::string& corpus_dir, double threshold,
                        const std::string& output) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw UsageError("--threshold must lie in [0, 1)");
  }
  if (!std::filesystem::is_regular_file(quotes_path)) {
    throw UsageError("quotes file not found: " + quotes_path);
  }
  std::vector<QuoteClaim> claims;
  try {
    claims = QuoteClaimsFromJson(ParseJson(ReadFile(quotes_path), quotes_path));
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  CorpusIndex index = BuildIndex(LoadCorpusDir(corpus_dir));
  Json results = Json::array();
  bool missing = false;
  for (auto& claim : claims) {
    ClaimVerdict v;
    try {
      v = VerifyClaim(index, std::move(claim), threshold);
    } catch (const EmptyQuoteError& e) {
      throw UsageError(e.what());
    }
    missing = missing || v.verdict.status == QuoteStatus::kNotFound;
    results.push_back(ToJson(v));
  }
  std::string dumped = DumpJson(results);
  if (!output.empty()) WriteFileAtomic(output, dumped);
  *ctx.out << dumped;
  return missing ? kExitFindings : kExitOk;
}

inline int EvaluateCmd(const Context& ctx, const std::string& pred_path,
                       const std::string& gold_path, const std::string& format,
                       const std::string& output) {
  ReportFormat f;
  if (format == "md" || format == "markdown") {
    f = ReportFormat::kMarkdown;
  } else if (format == "json") {
    f = ReportFormat::kJson;
  } else {
    throw UsageError("--report must be md or json");
  }
  for (const auto& p : {pred_path, gold_path}) {
    if (!std::filesystem::is_regular_file(p)) {
      throw UsageError("no such file: " + p);
    }
  }
  Metrics m;
  try {
    m = Evaluate(ReadStandoff(pred_path), ReadStandoff(gold_path));
  } catch (const TextMismatchError& e) {
    throw UsageError(e.what());
  }
  std::string report = RenderReport(m, f);
  if (!output.empty()) WriteFileAtomic(output, report);
  *ctx.out << report;
  return kExitOk;
}

inline int Interpret(const Context& ctx, const std::string& id,
                     std::size_t passage_index, const std::string& backend_path,
                     const std::string& mock_dir,
                     const std::string& quotes_out) {
  Store store = ctx.store();
  RequireDocument(store, id);
  AnnotatedDocument doc = store.LoadAnnotated(id);
  std::vector<Passage> passages = Segment(id, doc.text);
  if (passage_index >= passages.size()) {
    throw UsageError("document " + id + " has " +
                     std::to_string(passages.size()) + " passages");
  }
  const Passage& p = passages[passage_index];
  const std::u32string passage_text = DecodeUtf8(p.text);
  std::vector<Annotation> local;
  for (const auto& a : doc.annotations) {
    if (a.start >= p.start && a.end <= p.end) {
      local.push_back(MakeAnnotation(passage_text, a.start - p.start,
                                     a.end - p.start, a.type));
    }
  }
  GatewayBundle gw = MakeGateway(ctx, backend_path, mock_dir);
  Completion c =
      gw.gateway->Complete(BuildInterpretationPrompt(p.text, local));
  *ctx.out << kUnverifiedBanner << "\n" << c.transcript.response << "\n";
  if (!quotes_out.empty()) {
    Json quotes = Json::array();
    for (const auto& q : ExtractQuotations(c.transcript.response)) {
      quotes.push_back(Json{{"quote", q}, {"claimed_doc_id", id}});
    }
    WriteFileAtomic(quotes_out, DumpJson(quotes));
  }
  return kExitOk;
}

inline int Serve(const Context& ctx, int port, const std::string& host) {
  ReviewService service(ctx.store());
  int bound = service.Bind(host, port);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  *ctx.out << "serving " << ctx.store_root << " on http://" << host << ":"
           << bound << "\n"
           << std::flush;
  return service.ListenAfterBind() ? kExitOk : kExitFailure;
}

}  // namespace cli_internal

inline int Run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  using namespace cli_internal;
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;

  CLI::App app{"Annotate mythological entities in French literary texts"};
  app.name("mythtag");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--store", ctx.store_root, "store root directory")
      ->capture_default_str();

  std::string path, format = "txt", id, backend, gazetteer, mock, quotes,
                    corpus, pred, gold, report = "md", output, quotes_out,
                    host = "127.0.0.1";
  std::size_t max_len = kDefaultMaxPassageLength, passage = 0;
  int workers = 4, port = 8080;
  double threshold = kDefaultQuoteThreshold;
  bool use_gold = false;

  auto* ingest = app.add_subcommand("ingest", "add plain-text files to the store");
  ingest->add_option("path", path, "file or directory of .txt files")->required();
  ingest->add_option("--format", format, "input format")->capture_default_str();
  ingest->add_option("--id", id, "doc_id for a single file (default: stem)");

  auto* annotate = app.add_subcommand("annotate", "annotate a stored document");
  annotate->add_option("doc_id", id)->required();
  annotate->add_option("--backend", backend, "backend config JSON")->required();
  annotate->add_option("--gazetteer", gazetteer, "names file for prefiltering");
  annotate->add_option("--mock", mock, "canned-response directory (offline)");
  annotate->add_option("--max-len", max_len, "passage length bound")
      ->capture_default_str();
  annotate->add_option("--workers", workers, "concurrent passages")
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "check a stand-off file");
  validate->add_option("doc_id", id)->required();
  validate->add_flag("--gold", use_gold, "validate gold/ instead");

  auto* lint = app.add_subcommand("lint", "review lints for a document");
  lint->add_option("doc_id", id)->required();

  auto* verify = app.add_subcommand("verify-quotes", "ground quotations in a corpus");
  verify->add_option("quotes", quotes, "JSON list of {quote, claimed_doc_id}")
      ->required();
  verify->add_option("--corpus", corpus, "directory of .txt files")->required();
  verify->add_option("--threshold", threshold, "max normalized edit distance")
      ->capture_default_str();
  verify->add_option("--output", output, "also write verdicts here");

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  evaluate->add_option("pred", pred)->required();
  evaluate->add_option("gold", gold)->required();
  evaluate->add_option("--report", report, "md or json")->capture_default_str();
  evaluate->add_option("--output", output, "also write the report here");

  auto* interpret = app.add_subcommand("interpret", "ask the model to comment on a passage");
  interpret->add_option("doc_id", id)->required();
  interpret->add_option("--passage", passage, "0-based passage index")->required();
  interpret->add_option("--backend", backend, "backend config JSON")->required();
  interpret->add_option("--mock", mock, "canned-response directory (offline)");
  interpret->add_option("--quotes-out", quotes_out,
                        "write quotations found in the answer for verify-quotes");

  auto* serve = app.add_subcommand("serve", "run the review API");
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return Ingest(ctx, path, format, id);
    if (*annotate) {
      if (max_len < 200) throw UsageError("--max-len must be >= 200");
      if (workers < 1) throw UsageError("--workers must be positive");
      return Annotate(ctx, id, backend, gazetteer, mock, max_len, workers);
    }
    if (*validate) return Validate(ctx, id, use_gold);
    if (*lint) return Lint(ctx, id);
    if (*verify) return VerifyQuotes(ctx, quotes, corpus, threshold, output);
    if (*evaluate) return EvaluateCmd(ctx, pred, gold, report, output);
    if (*interpret) {
      return Interpret(ctx, id, passage, backend, mock, quotes_out);
    }
    if (*serve) return Serve(ctx, port, host);
  } catch (const UsageError& e) {
    err << "mythtag: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "mythtag: backend: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "mythtag: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

inline int Run(int argc, char** argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return Run(args, out, err);
}

}  // namespace mythtag

#endif  // MYTHTAG_CLI_H_
