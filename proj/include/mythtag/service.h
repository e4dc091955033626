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

#ifndef MYTHTAG_SERVICE_H_
#define MYTHTAG_SERVICE_H_

// Review API over a Store.
//
//   GET  /docs                     list of documents
//   GET  /docs/{id}                text, annotations, lints, pipeline report
//   POST /docs/{id}/annotations    full replacement of the annotation set
//   POST /docs/{id}/accept         promote the current set to gold/
//
// Writes carry the digests the client last saw (text_sha256 and
// base_annotations_sha256); a stale digest is answered with 409. Writes to
// one document are serialized.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "mythtag/llm_gateway.h"
#include "mythtag/pipeline.h"
#include "mythtag/schema.h"
#include "mythtag/sha256.h"
#include "mythtag/standoff.h"
#include "mythtag/store.h"

namespace mythtag {

class ReviewService {
 public:
  explicit ReviewService(Store store,
                         std::function<std::string()> clock = UtcTimestamp,
                         LintConfig lint = {})
      : store_(std::move(store)),
        clock_(std::move(clock)),
        lint_(std::move(lint)) {
    Routes();
  }

  // Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int Bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }
  // Serves until Stop(); call after Bind.
  bool ListenAfterBind() { return server_.listen_after_bind(); }
  void Stop() { server_.stop(); }
  void WaitUntilReady() { server_.wait_until_ready(); }

  httplib::Server& server() { return server_; }

 private:
  static void Reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(DumpJson(body), "application/json; charset=utf-8");
  }

  static Json Error(const std::string& message) {
    return Json{{"error", message}};
  }

  std::mutex& DocMutex(const std::string& id) {
    std::lock_guard lock(map_mu_);
    auto& slot = doc_mu_[id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  Json DocumentView(const std::string& id) const {
    AnnotatedDocument doc = store_.LoadAnnotated(id);
    Json view{{"doc_id", id},
              {"text", doc.text},
              {"text_sha256", Sha256Hex(doc.text)},
              {"annotations", ToJson(doc.annotations)},
              {"annotations_sha256", AnnotationsDigest(doc.annotations)},
              {"lints", ToJson(LintDocument(doc, lint_))},
              {"validation", ToJson(ValidateDocument(doc))},
              {"has_gold", std::filesystem::is_regular_file(store_.GoldPath(id))}};
    auto report = store_.ReadJsonIfExists(store_.ReportPath(id));
    view["report"] = report ? *report : Json();
    return view;
  }

  void Routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server_.Options(R"(/.*)", [](const httplib::Request&,
                                 httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server_.set_exception_handler([](const httplib::Request&,
                                     httplib::Response& res,
                                     std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      Reply(res, 500, Error(what));
    });

    server_.Get("/docs", [this](const httplib::Request&,
                                httplib::Response& res) {
      Json docs = Json::array();
      for (const auto& id : store_.ListDocuments()) {
        auto f = store_.ReadAnnotations(id);
        docs.push_back(Json{
            {"doc_id", id},
            {"annotation_count", f ? f->annotations.size() : 0},
            {"has_gold",
             std::filesystem::is_regular_file(store_.GoldPath(id))}});
      }
      Reply(res, 200, Json{{"docs", docs}});
    });

    server_.Get(R"(/docs/([^/]+))", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!store_.HasDocument(id)) return Reply(res, 404, Error("unknown document " + id));
      std::lock_guard lock(DocMutex(id));
      Reply(res, 200, DocumentView(id));
    });

    server_.Post(R"(/docs/([^/]+)/annotations)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   PostAnnotations(req.matches[1], req.body, res);
                 });

    server_.Post(R"(/docs/([^/]+)/accept)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   PostAccept(req.matches[1], req.body, res);
                 });
  }

  void PostAnnotations(const std::string& id, const std::string& body,
                       httplib::Response& res) {
    if (!store_.HasDocument(id)) {
      return Reply(res, 404, Error("unknown document " + id));
    }
    Json j;
    try {
      j = Json::parse(body);
    } catch (const Json::parse_error& e) {
      return Reply(res, 400, Error(std::string("body is not JSON: ") + e.what()));
    }
    if (!j.is_object() || !j.contains("annotations") ||
        !j.contains("text_sha256") || !j.contains("base_annotations_sha256")) {
      return Reply(res, 400,
                   Error("body needs annotations, text_sha256 and "
                         "base_annotations_sha256"));
    }
    std::vector<Annotation> submitted;
    try {
      submitted = AnnotationsFromJson(j["annotations"]);
    } catch (const std::exception& e) {
      return Reply(res, 422, Json{{"error", e.what()},
                                  {"validation", Json{{"ok", false},
                                                      {"violations",
                                                       Json::array()}}}});
    }

    std::lock_guard lock(DocMutex(id));
    AnnotatedDocument current = store_.LoadAnnotated(id);
    const std::string text_digest = Sha256Hex(current.text);
    const std::string base = AnnotationsDigest(current.annotations);
    if (j["text_sha256"] != text_digest ||
        j["base_annotations_sha256"] != base) {
      return Reply(res, 409, Json{{"error", "stale digest"},
                                  {"text_sha256", text_digest},
                                  {"annotations_sha256", base}});
    }
    AnnotatedDocument next = current;
    next.annotations = std::move(submitted);
    ValidationReport report = ValidateDocument(next);
    if (!report.ok()) {
      return Reply(res, 422, Json{{"error", "validation failed"},
                                  {"validation", ToJson(report)}});
    }
    store_.SaveAnnotations(next);
    Reply(res, 200,
          Json{{"annotations_sha256", AnnotationsDigest(next.annotations)},
               {"lints", ToJson(LintDocument(next, lint_))}});
  }

  void PostAccept(const std::string& id, const std::string& body,
                  httplib::Response& res) {
    if (!store_.HasDocument(id)) {
      return Reply(res, 404, Error("unknown document " + id));
    }
    Json j = Json::object();
    if (!body.empty()) {
      try {
        j = Json::parse(body);
      } catch (const Json::parse_error& e) {
        return Reply(res, 400,
                     Error(std::string("body is not JSON: ") + e.what()));
      }
    }
    if (!j.is_object() || !j.contains("reviewer") ||
        !j["reviewer"].is_string()) {
      return Reply(res, 400, Error("body needs a reviewer"));
    }
    std::lock_guard lock(DocMutex(id));
    AnnotatedDocument current = store_.LoadAnnotated(id);
    const std::string digest = AnnotationsDigest(current.annotations);
    if (j.contains("annotations_sha256") && j["annotations_sha256"] != digest) {
      return Reply(res, 409, Json{{"error", "stale digest"},
                                  {"annotations_sha256", digest}});
    }
    ValidationReport report = ValidateDocument(current);
    if (!report.ok()) {
      return Reply(res, 422, Json{{"error", "validation failed"},
                                  {"validation", ToJson(report)}});
    }
    Json review{{"reviewer", j["reviewer"]},
                {"accepted_at", clock_()},
                {"annotations_sha256", digest}};
    if (j.contains("note")) review["note"] = j["note"];
    store_.SaveGold(current, j.value("span_convention", "reviewed"), review);
    Reply(res, 200, Json{{"gold", store_.GoldPath(id).string()},
                         {"annotations_sha256", digest}});
  }

  Store store_;
  std::function<std::string()> clock_;
  LintConfig lint_;
  httplib::Server server_;
  std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> doc_mu_;
};

}  // namespace mythtag

#endif  // MYTHTAG_SERVICE_H_
