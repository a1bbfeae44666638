#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "skipzip/llm.hpp"

namespace skipzip {
namespace {

using namespace std::chrono_literals;

PromptBundle bundle_with(std::string seq, std::size_t expected) {
  return {"system", "Compressed sequence: " + seq + "\nReturn it.", expected};
}

struct SleepLog {
  std::vector<std::chrono::milliseconds> delays;
  Sleeper fn() {
    return [this](std::chrono::milliseconds d) { delays.push_back(d); };
  }
};

std::vector<ScriptStep> steps(std::initializer_list<ScriptStep> s) { return s; }

ScriptStep reply(std::string t) { return {ScriptStep::Kind::Reply, std::move(t), 0}; }
ScriptStep timeout() { return {ScriptStep::Kind::Timeout, "", 0}; }

TEST(Complete, MockReplyOnFirstAttempt) {
  MockScriptedBackend b(steps({reply("fixed text")}));
  SleepLog log;
  const auto r = complete(bundle_with("[0.00, 1.00]", 2), b, LlmConfig{}, log.fn());
  EXPECT_EQ(r.text, "fixed text");
  EXPECT_EQ(r.attempt, 1);
  EXPECT_TRUE(log.delays.empty());
}

TEST(Complete, RetriesThenSucceeds) {
  MockScriptedBackend b(steps({timeout(), {ScriptStep::Kind::Transport, "", 0}, reply("ok")}));
  LlmConfig cfg;
  cfg.max_retries = 3;
  SleepLog log;
  const auto r = complete(bundle_with("[0.00, 1.00]", 2), b, cfg, log.fn());
  EXPECT_EQ(r.attempt, 3);
  EXPECT_EQ(log.delays, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms}));
}

TEST(Complete, RetriesExhaustedAfterMaxPlusOneAttempts) {
  MockScriptedBackend b(steps({timeout(), timeout(), timeout(), reply("too late")}));
  LlmConfig cfg;
  cfg.max_retries = 2;
  SleepLog log;
  try {
    complete(bundle_with("[0.00, 1.00]", 2), b, cfg, log.fn());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RetriesExhausted);
  }
  EXPECT_EQ(b.calls(), 3u);
  EXPECT_EQ(log.delays.size(), 2u);
}

TEST(Complete, EmptyReplyIsRetried) {
  MockScriptedBackend b(steps({reply("  \n"), reply("[0.1]")}));
  SleepLog log;
  EXPECT_EQ(complete(bundle_with("[0.00, 1.00]", 2), b, LlmConfig{}, log.fn()).attempt, 2);
}

TEST(Complete, ServerErrorsRetryClientErrorsDoNot) {
  MockScriptedBackend retry(steps({{ScriptStep::Kind::Http, "busy", 503}, reply("ok")}));
  SleepLog log;
  EXPECT_EQ(complete(bundle_with("[0.00, 1.00]", 2), retry, LlmConfig{}, log.fn()).attempt, 2);

  MockScriptedBackend fatal(steps({{ScriptStep::Kind::Http, "bad key", 401}, reply("ok")}));
  try {
    complete(bundle_with("[0.00, 1.00]", 2), fatal, LlmConfig{}, log.fn());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::HttpStatus);
    EXPECT_EQ(*e.status, 401);
  }
  EXPECT_EQ(fatal.calls(), 1u);
}

TEST(Complete, RejectsBadConfig) {
  MockScriptedBackend b(steps({reply("x")}));
  LlmConfig cfg;
  cfg.max_retries = 11;
  EXPECT_THROW(complete(bundle_with("[0.00, 1.00]", 2), b, cfg), Error);
  cfg.max_retries = 1;
  cfg.temperature = -0.1;
  EXPECT_THROW(complete(bundle_with("[0.00, 1.00]", 2), b, cfg), Error);
}

TEST(Backoff, NonDecreasingAndCapped) {
  BackoffPolicy p;
  EXPECT_EQ(p.delay(1), 1000ms);
  EXPECT_EQ(p.delay(2), 2000ms);
  EXPECT_EQ(p.delay(3), 4000ms);
  for (int r = 1; r < 10; ++r) {
    EXPECT_LE(p.delay(r), p.delay(r + 1));
    EXPECT_LE(p.delay(r + 1), p.cap);
  }
}

TEST(MockInterpolating, Midpoint) {
  MockInterpolatingBackend b(false);
  EXPECT_EQ(b.send(bundle_with("[0.00, 1.00]", 3), LlmConfig{}), "[0.00, 0.50, 1.00]");
}

TEST(MockInterpolating, DecoratedRepliesStillParse) {
  MockInterpolatingBackend b(true);
  for (int i = 0; i < 200; ++i) {
    auto bundle = bundle_with("[0.00, 0.40, 1.00]", 5);
    bundle.system_text += std::to_string(i);  // vary the decoration
    const auto text = b.send(bundle, LlmConfig{});
    EXPECT_EQ(parse_sequence(text, 5), (std::vector<double>{0.0, 0.2, 0.4, 0.7, 1.0})) << text;
  }
}

TEST(MockInterpolating, DeterministicPerPrompt) {
  MockInterpolatingBackend b(true);
  const auto bundle = bundle_with("[0.10, 0.90, 0.30]", 7);
  EXPECT_EQ(b.send(bundle, LlmConfig{}), b.send(bundle, LlmConfig{}));
}

TEST(MockScripted, ExhaustedScript) {
  MockScriptedBackend b(steps({reply("a"), reply("b")}));
  const auto bundle = bundle_with("[0.00, 1.00]", 2);
  EXPECT_EQ(b.send(bundle, LlmConfig{}), "a");
  EXPECT_EQ(b.send(bundle, LlmConfig{}), "b");
  try {
    b.send(bundle, LlmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadMockScript);
  }
}

TEST(MockScripted, ScriptFileFormat) {
  const auto steps = MockScriptedBackend::parse_script(
      R"(["hello", {"error": "timeout"}, {"error": "transport"}, {"status": 500, "body": "x"}])");
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_EQ(steps[0].text, "hello");
  EXPECT_EQ(steps[1].kind, ScriptStep::Kind::Timeout);
  EXPECT_EQ(steps[2].kind, ScriptStep::Kind::Transport);
  EXPECT_EQ(steps[3].status, 500);
  EXPECT_THROW(MockScriptedBackend::parse_script("{}"), Error);
  EXPECT_THROW(MockScriptedBackend::parse_script("[1]"), Error);
  BackendOptions opts;
  opts.script_path = "/nonexistent/script.json";
  EXPECT_THROW(make_backend(BackendKind::MockScripted, LlmConfig{}, opts), Error);
}

TEST(MakeBackend, KindsAndErrors) {
  EXPECT_EQ(parse_backend_kind("remote"), BackendKind::Remote);
  try {
    parse_backend_kind("local_llama");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownBackend);
  }
  EXPECT_EQ(make_backend(BackendKind::MockInterpolating, LlmConfig{})->kind(), "mock_interpolating");

  LlmConfig cfg;
  cfg.api_key_env = "SKIPZIP_TEST_KEY_THAT_IS_NOT_SET";
  ::unsetenv(cfg.api_key_env.c_str());
  try {
    make_backend(BackendKind::Remote, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingApiKey);
  }
}

TEST(WireFormat, RequestBodyShape) {
  LlmConfig cfg;
  const auto j = make_request_body({"sys", "usr", 3}, cfg);
  EXPECT_EQ(j["model"], "gpt-4");
  EXPECT_EQ(j["temperature"], 0.0);
  ASSERT_EQ(j["messages"].size(), 2u);
  EXPECT_EQ(j["messages"][0]["role"], "system");
  EXPECT_EQ(j["messages"][0]["content"], "sys");
  EXPECT_EQ(j["messages"][1]["role"], "user");
  EXPECT_EQ(j["messages"][1]["content"], "usr");
  EXPECT_EQ(parse_reply_body(R"({"choices":[{"message":{"role":"assistant","content":"[0.1]"}}]})"), "[0.1]");
  EXPECT_THROW(parse_reply_body(R"({"choices":[]})"), Error);
  EXPECT_THROW(parse_reply_body("not json"), Error);
}

TEST(WireFormat, SplitUrl) {
  const auto e = split_url("https://api.example.com:8443/v1/chat/completions");
  EXPECT_EQ(e.scheme_host_port, "https://api.example.com:8443");
  EXPECT_EQ(e.path, "/v1/chat/completions");
  EXPECT_EQ(split_url("http://localhost:1").path, "/");
  EXPECT_THROW(split_url("localhost/x"), Error);
  EXPECT_THROW(split_url("ftp://x/y"), Error);
}

// A local chat-completions server exercising the remote backend end to end.
class RemoteBackendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ::setenv("SKIPZIP_TEST_KEY", "sk-test", 1);
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (mode_ == "flaky" && n == 1) {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
        return;
      }
      if (mode_ == "slow") std::this_thread::sleep_for(600ms);
      if (mode_ == "unauthorized") {
        res.status = 401;
        res.set_content(R"({"error":"bad key"})", "application/json");
        return;
      }
      nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "[0.00, 0.50, 1.00]"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  LlmConfig config() const {
    LlmConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    cfg.api_key_env = "SKIPZIP_TEST_KEY";
    cfg.timeout_s = 5.0;
    return cfg;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string mode_ = "ok";
  std::string last_auth_, last_body_;
};

TEST_F(RemoteBackendTest, SendsChatCompletionRequest) {
  auto b = make_backend(BackendKind::Remote, config());
  SleepLog log;
  const auto r = complete({"sys", "usr", 3}, *b, config(), log.fn());
  EXPECT_EQ(r.text, "[0.00, 0.50, 1.00]");
  EXPECT_EQ(last_auth_, "Bearer sk-test");
  const auto body = nlohmann::json::parse(last_body_);
  EXPECT_EQ(body["model"], "gpt-4");
  EXPECT_EQ(body["messages"][1]["content"], "usr");
}

TEST_F(RemoteBackendTest, RetriesServiceUnavailable) {
  mode_ = "flaky";
  auto b = make_backend(BackendKind::Remote, config());
  SleepLog log;
  EXPECT_EQ(complete({"sys", "usr", 3}, *b, config(), log.fn()).attempt, 2);
  EXPECT_EQ(hits_.load(), 2);
}

TEST_F(RemoteBackendTest, UnauthorizedIsHttpStatus) {
  mode_ = "unauthorized";
  auto b = make_backend(BackendKind::Remote, config());
  try {
    b->send({"sys", "usr", 3}, config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::HttpStatus);
    EXPECT_EQ(*e.status, 401);
  }
}

TEST_F(RemoteBackendTest, SlowServerTimesOut) {
  mode_ = "slow";
  auto cfg = config();
  cfg.timeout_s = 0.2;
  cfg.max_retries = 0;
  auto b = make_backend(BackendKind::Remote, cfg);
  try {
    b->send({"sys", "usr", 3}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Timeout);
  }
  SleepLog log;
  try {
    complete({"sys", "usr", 3}, *b, cfg, log.fn());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RetriesExhausted);
  }
}

TEST(RemoteBackend, ConnectionRefusedIsTransport) {
  ::setenv("SKIPZIP_TEST_KEY", "sk-test", 1);
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();  // nothing listens on the port any more
  LlmConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.api_key_env = "SKIPZIP_TEST_KEY";
  cfg.timeout_s = 1.0;
  auto b = make_backend(BackendKind::Remote, cfg);
  try {
    b->send({"sys", "usr", 3}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::Transport || e.code() == Errc::Timeout) << e.what();
  }
}

}  // namespace
}  // namespace skipzip
