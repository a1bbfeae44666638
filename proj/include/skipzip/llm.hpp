#pragma once

// Chat-completion client. A Backend turns a PromptBundle into reply text (or
// throws a transport error); complete() wraps any backend with retries and
// exponential backoff.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "skipzip/codec.hpp"
#include "skipzip/format.hpp"
#include "skipzip/interp.hpp"
#include "skipzip/parse.hpp"
#include "skipzip/prompt.hpp"

namespace skipzip {

struct LlmConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_retries = 3;
  double timeout_s = 60.0;
  std::string api_key_env = "LLM_API_KEY";

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(Errc::BadConfig, "temperature must be >= 0");
    if (max_retries < 0 || max_retries > 10) throw Error(Errc::BadConfig, "max_retries must be in [0, 10]");
    if (!(timeout_s > 0.0)) throw Error(Errc::BadConfig, "timeout_s must be positive");
  }
};

struct ChatReply {
  std::string text;
  double latency_ms = 0.0;
  int attempt = 1;
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// Returns the reply text of one request. Throws Error with Timeout,
  /// Transport or HttpStatus on failure.
  virtual std::string send(const PromptBundle& bundle, const LlmConfig& cfg) = 0;
  virtual std::string_view kind() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

struct BackoffPolicy {
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  std::chrono::milliseconds cap{30000};

  /// Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay(int retry) const {
    double ms = static_cast<double>(base.count());
    for (int i = 1; i < retry; ++i) ms *= factor;
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::min(ms, static_cast<double>(cap.count()))));
  }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

inline bool is_retryable(const Error& e) {
  switch (e.code()) {
    case Errc::Timeout:
    case Errc::Transport:
      return true;
    case Errc::HttpStatus:
      return e.status && (*e.status == 429 || *e.status == 408 || *e.status >= 500);
    default:
      return false;
  }
}

/// Sends the bundle, retrying transport failures and empty replies up to
/// cfg.max_retries times.
inline ChatReply complete(const PromptBundle& bundle, Backend& backend, const LlmConfig& cfg,
                          const Sleeper& sleep = real_sleep, const BackoffPolicy& policy = {}) {
  cfg.validate();
  std::string last_error = "no attempt made";
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) sleep(policy.delay(attempt - 1));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::string text = backend.send(bundle, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        last_error = "empty reply";
        continue;
      }
      return {std::move(text), std::chrono::duration<double, std::milli>(t1 - t0).count(), attempt};
    } catch (const Error& e) {
      if (!is_retryable(e)) throw;
      last_error = e.what();
    }
  }
  Error e(Errc::RetriesExhausted, std::to_string(attempts) + " attempts, last: " + last_error);
  e.found = static_cast<std::size_t>(attempts);
  throw e;
}

// Wire format ---------------------------------------------------------------

inline nlohmann::json make_request_body(const PromptBundle& bundle, const LlmConfig& cfg) {
  return {{"model", cfg.model_name},
          {"temperature", cfg.temperature},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", bundle.system_text}},
                                  {{"role", "user"}, {"content", bundle.user_text}}})}};
}

/// Content of the first choice's message.
inline std::string parse_reply_body(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::Transport, "reply body is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::Transport, "reply has no choices[0].message.content");
  }
}

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

inline Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::BadConfig, "endpoint_url needs a scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(Errc::BadConfig, "unsupported scheme: " + scheme);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

class RemoteBackend final : public Backend {
 public:
  RemoteBackend(const LlmConfig& cfg) : endpoint_(split_url(cfg.endpoint_url)) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw Error(Errc::MissingApiKey, "environment variable " + cfg.api_key_env + " is not set");
    api_key_ = key;
  }

  std::string send(const PromptBundle& bundle, const LlmConfig& cfg) override {
    httplib::Client client(endpoint_.scheme_host_port);
    const auto secs = static_cast<time_t>(cfg.timeout_s);
    const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
    auto res = client.Post(endpoint_.path, headers, make_request_body(bundle, cfg).dump(), "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw Error(Errc::Timeout, httplib::to_string(err));
      throw Error(Errc::Transport, httplib::to_string(err));
    }
    if (res->status != 200) throw Error::http_status(res->status, res->body.substr(0, 512));
    return parse_reply_body(res->body);
  }

  std::string_view kind() const override { return "remote"; }

 private:
  Endpoint endpoint_;
  std::string api_key_;
};

// Mock backends -------------------------------------------------------------

struct ReplyDecoration {
  std::vector<std::string> prefixes = {
      "",
      "Sure! Here is the reconstructed sequence:\n",
      "```\n",
      "Decompressed:\n\n",
      "Based on the neighbouring values, the full sequence is\n",
  };
  std::vector<std::string> suffixes = {
      "",
      "\n```",
      "\nLet me know if you need anything else.",
      "\n\nThese estimates follow the trend of the known samples.",
  };
  std::vector<std::pair<std::string, std::string>> brackets = {{"[", "]"}, {"", ""}, {"(", ")"}};
  std::vector<std::string> separators = {", ", " ", "; ", ",\n"};
};

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Reads the compressed sequence back out of the prompt, interpolates it
/// linearly to the expected length and wraps it in reply-like noise. The
/// decoration is chosen from a hash of the prompt, so replies do not depend
/// on call order.
class MockInterpolatingBackend final : public Backend {
 public:
  explicit MockInterpolatingBackend(bool decorate = true, ReplyDecoration deco = {})
      : decorate_(decorate), deco_(std::move(deco)) {}

  static std::vector<double> interpolate(const PromptBundle& bundle) {
    const auto anchors = longest_run(bundle.user_text);
    if (anchors.size() < 2) throw Error(Errc::BadFormat, "prompt carries no sequence");
    const auto plan = plan_indices_for_count(bundle.expected_length, anchors.size());
    return interp::linear<double>(plan.kept_indices, anchors, bundle.expected_length);
  }

  std::string send(const PromptBundle& bundle, const LlmConfig&) override {
    const auto values = interpolate(bundle);
    if (!decorate_) return render_sequence(values, &grid_or_shortest);

    const auto h = fnv1a(bundle.system_text + '\x1f' + bundle.user_text);
    const auto pick = [h](std::size_t n, int shift) { return static_cast<std::size_t>((h >> shift) % n); };
    const auto& pre = deco_.prefixes[pick(deco_.prefixes.size(), 0)];
    const auto& suf = deco_.suffixes[pick(deco_.suffixes.size(), 8)];
    const auto& br = deco_.brackets[pick(deco_.brackets.size(), 16)];
    const auto& sep = deco_.separators[pick(deco_.separators.size(), 24)];
    std::string out = pre + br.first;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += sep;
      out += grid_or_shortest(values[i]);
    }
    out += br.second + suf;
    return out;
  }

  std::string_view kind() const override { return "mock_interpolating"; }

 private:
  bool decorate_;
  ReplyDecoration deco_;
};

/// One scripted step: a reply, or a failure to raise.
struct ScriptStep {
  enum class Kind { Reply, Timeout, Transport, Http } kind = Kind::Reply;
  std::string text;
  int status = 0;
};

/// Replays canned steps in order, then fails with BadMockScript.
class MockScriptedBackend final : public Backend {
 public:
  explicit MockScriptedBackend(std::vector<ScriptStep> steps) : steps_(std::move(steps)) {}

  static std::vector<ScriptStep> parse_script(const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw Error(Errc::BadMockScript, "script must be a JSON array");
    std::vector<ScriptStep> steps;
    for (const auto& e : j) {
      if (e.is_string()) {
        steps.push_back({ScriptStep::Kind::Reply, e.get<std::string>(), 0});
      } else if (e.is_object() && e.contains("status")) {
        steps.push_back({ScriptStep::Kind::Http, e.value("body", ""), e["status"].get<int>()});
      } else if (e.is_object() && e.value("error", "") == "timeout") {
        steps.push_back({ScriptStep::Kind::Timeout, "", 0});
      } else if (e.is_object() && e.value("error", "") == "transport") {
        steps.push_back({ScriptStep::Kind::Transport, "", 0});
      } else {
        throw Error(Errc::BadMockScript, "unrecognised script entry " + e.dump());
      }
    }
    return steps;
  }

  static std::shared_ptr<MockScriptedBackend> from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::BadMockScript, "cannot read script " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::make_shared<MockScriptedBackend>(parse_script(ss.str()));
  }

  std::string send(const PromptBundle&, const LlmConfig&) override {
    ScriptStep step;
    {
      std::lock_guard lock(mu_);
      if (next_ >= steps_.size()) throw Error(Errc::BadMockScript, "exhausted");
      step = steps_[next_++];
    }
    switch (step.kind) {
      case ScriptStep::Kind::Reply: return step.text;
      case ScriptStep::Kind::Timeout: throw Error(Errc::Timeout, "scripted timeout");
      case ScriptStep::Kind::Transport: throw Error(Errc::Transport, "scripted transport failure");
      case ScriptStep::Kind::Http: throw Error::http_status(step.status, step.text);
    }
    return {};
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return next_;
  }

  std::string_view kind() const override { return "mock_scripted"; }

 private:
  mutable std::mutex mu_;
  std::vector<ScriptStep> steps_;
  std::size_t next_ = 0;
};

enum class BackendKind { Remote, MockInterpolating, MockScripted };

inline BackendKind parse_backend_kind(std::string_view s) {
  if (s == "remote") return BackendKind::Remote;
  if (s == "mock_interpolating") return BackendKind::MockInterpolating;
  if (s == "mock_scripted") return BackendKind::MockScripted;
  throw Error(Errc::UnknownBackend, std::string(s));
}

struct BackendOptions {
  std::string script_path;  // mock_scripted
  bool decorate = true;     // mock_interpolating
};

inline BackendPtr make_backend(BackendKind kind, const LlmConfig& cfg, const BackendOptions& opts = {}) {
  switch (kind) {
    case BackendKind::Remote:
      cfg.validate();
      return std::make_shared<RemoteBackend>(cfg);
    case BackendKind::MockInterpolating:
      return std::make_shared<MockInterpolatingBackend>(opts.decorate);
    case BackendKind::MockScripted:
      if (opts.script_path.empty()) throw Error(Errc::BadMockScript, "mock_scripted needs a script path");
      return MockScriptedBackend::from_file(opts.script_path);
  }
  throw Error(Errc::UnknownBackend, "unhandled backend kind");
}

}  // namespace skipzip
