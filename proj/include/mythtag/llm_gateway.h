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

#ifndef MYTHTAG_LLM_GATEWAY_H_
#define MYTHTAG_LLM_GATEWAY_H_

// Prompt construction and chat-completion access with a content-addressed
// transcript cache, bounded retries and a bound on in-flight requests.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "mythtag/io.h"
#include "mythtag/schema.h"
#include "mythtag/sha256.h"
#include "mythtag/standoff.h"
#include "mythtag/utf8.h"

namespace mythtag {

class EmptyPassageError : public std::invalid_argument {
 public:
  EmptyPassageError() : std::invalid_argument("passage is empty") {}
};

// Base of every backend failure.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool retryable() const { return false; }
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
  bool retryable() const override { return true; }
};

class RateLimitedError : public BackendError {
 public:
  using BackendError::BackendError;
  bool retryable() const override { return true; }
};

class BadResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};

class MissingCredentialsError : public BackendError {
 public:
  explicit MissingCredentialsError(const std::string& var)
      : BackendError("environment variable " + var + " is not set") {}
};

// ---------------------------------------------------------------------------
// Prompts

struct PromptTemplate {
  std::string header;
  std::vector<std::string> schema_lines;
  std::string instruction;  // the passage is appended right after it
};

// English wording with the ten schema lines; long lines that wrap in print
// are joined with a single space.
inline const PromptTemplate& DefaultPromptTemplate() {
  static const PromptTemplate kTemplate{
      "This is the annotation schema:",
      {
          "<mythEntity type=\"deity\">: For gods or goddesses, like Zeus or "
          "Athena.",
          "<mythEntity type=\"hero\">: For mythological heroes like Heracles "
          "or Achilles.",
          "<mythEntity type=\"creature\">: For mythological creatures like "
          "the Minotaur.",
          "<mythEntity type=\"half_creature\">: For beings like centaurs or "
          "satyrs.",
          "<mythEntity type=\"creature_group\">: For groups of mythological "
          "entities like the Gorgons or collective references to "
          "“monsters.”",
          "<mythEntity type=\"monsters\">: For general references to "
          "mythological beings or monsters.",
          "<mythEntity type=\"location\">: For places or geographic "
          "references like Érymanthos.",
          "<mythEntity type=\"event\">: For mythological events, like the "
          "Trojan War or the Labors of Heracles.",
          "<mythEntity type=\"object\">: For mythological objects, like the "
          "Golden Fleece or Pandora’s Box.",
          "<mythEntity type=\"concept\">: For abstract mythological "
          "concepts, like Fate or Nemesis.",
      },
      "Please annotate the following sentence using this schema -> "};
  return kTemplate;
}

inline std::string BuildAnnotationPrompt(
    std::string_view passage,
    const PromptTemplate& tmpl = DefaultPromptTemplate()) {
  if (passage.empty()) throw EmptyPassageError();
  std::string out = tmpl.header;
  for (const auto& line : tmpl.schema_lines) {
    out += '\n';
    out += line;
  }
  out += '\n';
  out += tmpl.instruction;
  out += passage;
  return out;
}

// Recovers the passage from a prompt built with `tmpl`, if it is one.
inline std::optional<std::string> PassageOfPrompt(
    std::string_view prompt,
    const PromptTemplate& tmpl = DefaultPromptTemplate()) {
  std::string prefix = BuildAnnotationPrompt("x", tmpl);
  prefix.pop_back();
  if (prompt.size() <= prefix.size() ||
      prompt.substr(0, prefix.size()) != prefix) {
    return std::nullopt;
  }
  return std::string(prompt.substr(prefix.size()));
}

inline std::string BuildInterpretationPrompt(
    std::string_view passage, const std::vector<Annotation>& annotations) {
  if (passage.empty()) throw EmptyPassageError();
  std::string out = "Here is a passage from a French literary text:\n\n";
  out += passage;
  out += "\n\n";
  if (annotations.empty()) {
    out +=
        "Is any mythological allusion present in this passage? If so, name "
        "it and comment on the role it plays in the passage.";
    return out;
  }
  out += "The following mythological references were annotated in it:\n";
  for (const auto& a : annotations) {
    out += "- \"" + a.surface + "\" (" + std::string(ToString(a.type)) + ")\n";
  }
  out +=
      "Comment on the role each of these mythological references plays in "
      "the passage.";
  return out;
}

// ---------------------------------------------------------------------------
// Configuration and transcripts

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::optional<int> max_tokens;  // default: DefaultMaxTokens(passage)
  std::string api_key_env = "OPENAI_API_KEY";  // empty: send no credential
  double timeout_seconds = 60.0;

  void Validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
      throw std::invalid_argument("temperature must lie in [0, 2]");
    }
    if (!(timeout_seconds > 0.0)) {
      throw std::invalid_argument("timeout must be positive");
    }
    if (max_tokens && *max_tokens <= 0) {
      throw std::invalid_argument("max_tokens must be positive");
    }
    if (model.empty()) throw std::invalid_argument("model is empty");
  }
};

inline BackendConfig BackendConfigFromJson(const Json& j) {
  BackendConfig c;
  try {
    if (!j.is_object()) throw FormatError("backend config must be an object");
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    if (j.contains("max_tokens") && !j["max_tokens"].is_null()) {
      c.max_tokens = j["max_tokens"].get<int>();
    }
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad backend config: ") + e.what());
  }
  c.Validate();
  return c;
}

// Rough token estimate of four code points per token, doubled.
inline int DefaultMaxTokens(std::string_view passage) {
  std::size_t cps = CodePointLength(passage);
  return static_cast<int>(2 * ((cps + 3) / 4));
}

inline std::string PromptDigest(std::string_view model,
                                std::string_view prompt) {
  std::string keyed(model);
  keyed += '\n';
  keyed += prompt;
  return Sha256Hex(keyed);
}

struct Transcript {
  std::string prompt;
  std::string response;
  std::string model;
  std::string prompt_digest;
  std::string timestamp;

  bool DigestValid() const {
    return prompt_digest == PromptDigest(model, prompt);
  }
  bool operator==(const Transcript&) const = default;
};

inline Json ToJson(const Transcript& t) {
  return Json{{"prompt", t.prompt},
              {"response", t.response},
              {"model", t.model},
              {"prompt_digest", t.prompt_digest},
              {"timestamp", t.timestamp}};
}

inline Transcript TranscriptFromJson(const Json& j) {
  try {
    return Transcript{j.at("prompt").get<std::string>(),
                      j.at("response").get<std::string>(),
                      j.at("model").get<std::string>(),
                      j.at("prompt_digest").get<std::string>(),
                      j.at("timestamp").get<std::string>()};
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad transcript: ") + e.what());
  }
}

inline std::string UtcTimestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One <digest>.json file per transcript. Reads share a lock, writes are
// exclusive and atomic. A file whose digest does not verify is a miss.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<Transcript> Get(const std::string& digest) const {
    std::shared_lock lock(mu_);
    std::filesystem::path p = PathFor(digest);
    if (!std::filesystem::is_regular_file(p)) return std::nullopt;
    try {
      Transcript t = TranscriptFromJson(ParseJson(ReadFile(p), p.string()));
      if (t.prompt_digest != digest || !t.DigestValid()) return std::nullopt;
      return t;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void Put(const Transcript& t) {
    std::unique_lock lock(mu_);
    WriteFileAtomic(PathFor(t.prompt_digest), DumpJson(ToJson(t)));
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path PathFor(const std::string& digest) const {
    return dir_ / (digest + ".json");
  }

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
};

// ---------------------------------------------------------------------------
// Backends

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the assistant text. Throws BackendError subclasses.
  virtual std::string Send(const BackendConfig& config,
                           const std::string& prompt, int max_tokens) = 0;
};

// Chat-completion request over HTTP(S): one user message, bearer key from
// the configured environment variable.
class HttpBackend : public Backend {
 public:
  std::string Send(const BackendConfig& config, const std::string& prompt,
                   int max_tokens) override {
    std::string key;
    if (!config.api_key_env.empty()) {
      const char* v = std::getenv(config.api_key_env.c_str());
      if (v == nullptr || *v == '\0') {
        throw MissingCredentialsError(config.api_key_env);
      }
      key = v;
    }
    auto [base, path] = SplitUrl(config.endpoint);
    httplib::Client client(base);
    auto secs = std::chrono::duration<double>(config.timeout_seconds);
    auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (!key.empty()) client.set_bearer_token_auth(key);

    Json body{{"model", config.model},
              {"messages", Json::array({Json{{"role", "user"},
                                             {"content", prompt}}})},
              {"temperature", config.temperature},
              {"max_tokens", max_tokens}};
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
      throw TransportError("request to " + config.endpoint + " failed: " +
                           httplib::to_string(res.error()));
    }
    if (res->status == 429) {
      throw RateLimitedError("rate limited by " + config.endpoint);
    }
    if (res->status >= 500) {
      throw TransportError("server error " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw BadResponseError("HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));
    }
    return ExtractContent(res->body);
  }

  static std::string ExtractContent(const std::string& body) {
    try {
      Json j = Json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw BadResponseError(std::string("unparseable completion: ") +
                             e.what());
    }
  }

  // "https://host:port/v1/x" -> {"https://host:port", "/v1/x"}.
  static std::pair<std::string, std::string> SplitUrl(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
      throw std::invalid_argument("endpoint lacks a scheme: " + url);
    }
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
  }
};

// Offline backend driven by a canned directory holding responses.json:
//
//   {
//     "entries": [
//       {"match": "<substring of the prompt>",
//        "responses": ["first reply", {"fail": "transport"}, "..."]}
//     ],
//     "fallback": "echo" | "pastiche" | "error",
//     "pastiche": "text returned in pastiche mode"
//   }
//
// The entry with the longest match contained in the prompt wins. Its n-th
// call returns responses[n] (the last one repeats). A {"fail": kind} item
// throws transport, rate_limit or bad_response. Unmatched prompts use the
// fallback: echo returns the passage of an annotation prompt untouched,
// pastiche returns the configured fabricated text.
class MockBackend : public Backend {
 public:
  enum class Fallback { kEcho, kPastiche, kError };

  struct Reply {
    std::string text;
    std::string fail;  // empty for a normal reply
  };

  MockBackend() = default;

  static std::unique_ptr<MockBackend> FromJson(const Json& j) {
    auto owned = std::make_unique<MockBackend>();
    MockBackend& m = *owned;
    try {
      for (const auto& e : j.value("entries", Json::array())) {
        Entry entry;
        entry.match = e.at("match").get<std::string>();
        for (const auto& r : e.at("responses")) {
          if (r.is_string()) {
            entry.replies.push_back({r.get<std::string>(), ""});
          } else {
            entry.replies.push_back({"", r.at("fail").get<std::string>()});
          }
        }
        if (entry.replies.empty()) {
          throw FormatError("mock entry without responses");
        }
        m.entries_.push_back(std::move(entry));
      }
      std::string fb = j.value("fallback", "echo");
      if (fb == "echo") {
        m.fallback_ = Fallback::kEcho;
      } else if (fb == "pastiche") {
        m.fallback_ = Fallback::kPastiche;
      } else if (fb == "error") {
        m.fallback_ = Fallback::kError;
      } else {
        throw FormatError("unknown mock fallback: " + fb);
      }
      m.pastiche_ = j.value("pastiche", "");
    } catch (const Json::exception& e) {
      throw FormatError(std::string("bad mock responses: ") + e.what());
    }
    return owned;
  }

  static std::unique_ptr<MockBackend> FromDirectory(const std::filesystem::path& dir) {
    std::filesystem::path p = dir / "responses.json";
    return FromJson(ParseJson(ReadFile(p), p.string()));
  }

  void AddEntry(std::string match, std::vector<Reply> replies) {
    entries_.push_back({std::move(match), std::move(replies), 0});
  }
  void set_fallback(Fallback f) { fallback_ = f; }
  void set_pastiche(std::string text) { pastiche_ = std::move(text); }

  std::string Send(const BackendConfig&, const std::string& prompt,
                   int) override {
    std::lock_guard lock(mu_);
    ++calls_;
    Entry* best = nullptr;
    for (auto& e : entries_) {
      if (prompt.find(e.match) != std::string::npos &&
          (best == nullptr || e.match.size() > best->match.size())) {
        best = &e;
      }
    }
    if (best != nullptr) {
      const Reply& r =
          best->replies[std::min(best->served, best->replies.size() - 1)];
      ++best->served;
      if (r.fail.empty()) return r.text;
      if (r.fail == "transport") throw TransportError("scripted transport fault");
      if (r.fail == "rate_limit") throw RateLimitedError("scripted rate limit");
      throw BadResponseError("scripted bad response");
    }
    switch (fallback_) {
      case Fallback::kEcho:
        if (auto passage = PassageOfPrompt(prompt)) return *passage;
        return "";
      case Fallback::kPastiche:
        return pastiche_;
      case Fallback::kError:
        break;
    }
    throw BadResponseError("no canned response for prompt");
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  struct Entry {
    std::string match;
    std::vector<Reply> replies;
    std::size_t served = 0;
  };

  std::vector<Entry> entries_;
  Fallback fallback_ = Fallback::kEcho;
  std::string pastiche_;
  std::size_t calls_ = 0;
  mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Gateway

struct GatewayOptions {
  int max_attempts = 4;  // first try plus three retries
  std::chrono::milliseconds base_delay{1000};
  int max_in_flight = 4;
  std::function<void(std::chrono::milliseconds)> sleeper =
      [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::function<std::string()> clock = UtcTimestamp;
};

struct Completion {
  Transcript transcript;
  int attempts = 0;  // 0 on a cache hit
  bool from_cache = false;
};

class Gateway {
 public:
  Gateway(BackendConfig config, Backend& backend,
          TranscriptCache* cache = nullptr, GatewayOptions options = {})
      : config_(std::move(config)),
        backend_(backend),
        cache_(cache),
        options_(std::move(options)),
        free_slots_(options_.max_in_flight) {
    config_.Validate();
    if (options_.max_attempts < 1 || options_.max_in_flight < 1) {
      throw std::invalid_argument("gateway bounds must be positive");
    }
  }

  const BackendConfig& config() const { return config_; }
  std::string Now() const { return options_.clock(); }

  // `bypass_cache` skips the lookup (not the store), used when retrying a
  // response that was rejected downstream.
  Completion Complete(const std::string& prompt,
                      std::optional<int> max_tokens = std::nullopt,
                      bool bypass_cache = false) {
    const std::string digest = PromptDigest(config_.model, prompt);
    if (cache_ != nullptr && !bypass_cache) {
      if (auto hit = cache_->Get(digest)) return {*hit, 0, true};
    }
    int tokens = config_.max_tokens.value_or(
        max_tokens.value_or(DefaultMaxTokens(prompt)));

    Slot slot(*this);
    auto delay = options_.base_delay;
    for (int attempt = 1;; ++attempt) {
      try {
        std::string response = backend_.Send(config_, prompt, tokens);
        Transcript t{prompt, response, config_.model, digest,
                     options_.clock()};
        if (cache_ != nullptr) cache_->Put(t);
        return {std::move(t), attempt, false};
      } catch (const BackendError& e) {
        if (!e.retryable() || attempt >= options_.max_attempts) {
          Rethrow(e, attempt);
        }
      }
      options_.sleeper(delay);
      delay *= 2;
    }
  }

 private:
  // Called inside a handler: rethrows `e` as its own type with the attempt
  // count appended to the message.
  [[noreturn]] static void Rethrow(const BackendError& e, int attempts) {
    std::string msg = std::string(e.what()) + " (after " +
                      std::to_string(attempts) + " attempt" +
                      (attempts == 1 ? "" : "s") + ")";
    if (dynamic_cast<const RateLimitedError*>(&e)) throw RateLimitedError(msg);
    if (dynamic_cast<const TransportError*>(&e)) throw TransportError(msg);
    if (dynamic_cast<const BadResponseError*>(&e)) throw BadResponseError(msg);
    throw;
  }

  class Slot {
   public:
    explicit Slot(Gateway& g) : g_(g) {
      std::unique_lock lock(g_.slot_mu_);
      g_.slot_cv_.wait(lock, [this] { return g_.free_slots_ > 0; });
      --g_.free_slots_;
    }
    ~Slot() {
      {
        std::lock_guard lock(g_.slot_mu_);
        ++g_.free_slots_;
      }
      g_.slot_cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    Gateway& g_;
  };

  BackendConfig config_;
  Backend& backend_;
  TranscriptCache* cache_;
  GatewayOptions options_;
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int free_slots_;
};

}  // namespace mythtag

#endif  // MYTHTAG_LLM_GATEWAY_H_
