#include <doctest.h>

#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "marco/domain.hpp"
#include "marco/errors.hpp"
#include "marco/providers.hpp"
#include "marco/util.hpp"

using namespace marco;
using nlohmann::json;

namespace {

struct RequestSeen {
  std::string base_url;
  std::string path;
  json body;
  std::vector<std::pair<std::string, std::string>> headers;
};

// Transport double: serves a fixed sequence of canned outcomes. A negative
// status models a connection failure.
class FakeTransport : public HttpTransport {
 public:
  explicit FakeTransport(std::vector<HttpResponse> responses)
      : responses_(std::move(responses)) {}

  HttpResponse post_json(const std::string& base_url, const std::string& path,
                         const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         double) override {
    requests.push_back(RequestSeen{base_url, path, json::parse(body), headers});
    if (served_ >= responses_.size()) {
      raise(ErrorKind::Transport, "no canned response left");
    }
    HttpResponse response = responses_[served_++];
    if (response.status < 0) {
      raise(ErrorKind::Transport, "connection refused");
    }
    return response;
  }

  std::vector<RequestSeen> requests;

 private:
  std::vector<HttpResponse> responses_;
  std::size_t served_ = 0;
};

std::string ok_body(const std::string& text) {
  json body;
  body["choices"] = json::array({{{"message", {{"content", text}}}}});
  body["usage"] = {{"prompt_tokens", 11}, {"completion_tokens", 7}};
  return body.dump();
}

HttpChatProvider make_http_provider(std::shared_ptr<FakeTransport> transport,
                                    int max_attempts = 3) {
  AgentConfig config;
  config.kind = "openai";
  config.model = "test-model";
  config.base_url = "https://api.example.test/v1";
  config.api_key_env = "MARCO_TEST_KEY";
  RetryPolicy retry;
  retry.max_attempts = max_attempts;
  retry.base_delay_seconds = 0.01;
  return HttpChatProvider(config, retry, 5.0, std::move(transport), [](double) {});
}

std::vector<ChatMessage> hello_messages() {
  return {{Role::System, "You are a solver."}, {Role::User, "hello"}};
}

ErrorKind chat_error(HttpChatProvider& provider) {
  try {
    provider.chat(hello_messages(), ChatSettings{});
  } catch (const MarcoError& e) {
    return e.kind();
  }
  FAIL("expected a MarcoError");
  return ErrorKind::Config;
}

struct EnvGuard {
  explicit EnvGuard(const char* name, const char* value) : name_(name) {
    if (value) {
      setenv(name, value, 1);
    } else {
      unsetenv(name);
    }
  }
  ~EnvGuard() { unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST_CASE("scripted provider replays entries in order") {
  ScriptedProvider provider({{{}, {}, "first"}, {{}, {}, "second"}});
  CHECK(provider.chat(hello_messages(), ChatSettings{}).text == "first");
  CHECK(provider.chat(hello_messages(), ChatSettings{}).text == "second");
  CHECK(provider.calls_made() == 2);
}

TEST_CASE("scripted provider raises ScriptExhausted past the last entry") {
  ScriptedProvider provider({{{}, {}, "only"}});
  provider.chat(hello_messages(), ChatSettings{});
  try {
    provider.chat(hello_messages(), ChatSettings{});
    FAIL("expected ScriptExhausted");
  } catch (const MarcoError& e) {
    CHECK(e.kind() == ErrorKind::ScriptExhausted);
  }
}

TEST_CASE("scripted provider checks required substrings of the last user message") {
  ScriptedProvider provider({{{"Problem: p1", "Example 1"}, {}, "ok"}});
  std::vector<ChatMessage> messages = {
      {Role::System, "sys"},
      {Role::User, "Problem: p1\nExample 1:\n  Input: [1]\n  Output: [1]"}};
  CHECK(provider.chat(messages, ChatSettings{}).text == "ok");
}

TEST_CASE("scripted provider raises TranscriptMismatch on a failed predicate") {
  SUBCASE("missing required text") {
    ScriptedProvider provider({{{"Problem: p2"}, {}, "ok"}});
    try {
      provider.chat(hello_messages(), ChatSettings{});
      FAIL("expected TranscriptMismatch");
    } catch (const MarcoError& e) {
      CHECK(e.kind() == ErrorKind::TranscriptMismatch);
    }
  }
  SUBCASE("present forbidden text") {
    ScriptedProvider provider({{{}, {"hello"}, "ok"}});
    try {
      provider.chat(hello_messages(), ChatSettings{});
      FAIL("expected TranscriptMismatch");
    } catch (const MarcoError& e) {
      CHECK(e.kind() == ErrorKind::TranscriptMismatch);
    }
  }
}

TEST_CASE("scripted provider matches on the LAST user message only") {
  ScriptedProvider provider({{{"revise"}, {"hello"}, "ok"}});
  std::vector<ChatMessage> messages = {{Role::System, "sys"},
                                       {Role::User, "hello"},
                                       {Role::Assistant, "draft"},
                                       {Role::User, "please revise"}};
  CHECK(provider.chat(messages, ChatSettings{}).text == "ok");
}

TEST_CASE("script_entries_from_json accepts string or list matchers") {
  json spec = json::array({{{"match", "a"}, {"reply", "r1"}},
                           {{"match", json::array({"b", "c"})},
                            {"forbid", "x"},
                            {"reply", "r2"}},
                           {{"reply", "r3"}}});
  std::vector<ScriptEntry> entries = script_entries_from_json(spec);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].require == std::vector<std::string>{"a"});
  CHECK(entries[1].require == std::vector<std::string>{"b", "c"});
  CHECK(entries[1].forbid == std::vector<std::string>{"x"});
  CHECK(entries[1].reply == "r2");
  CHECK(entries[2].require.empty());
}

TEST_CASE("script_entries_from_json rejects malformed specs") {
  for (const json& bad :
       {json::parse(R"("not an array")"), json::array({{{"match", 5}, {"reply", "r"}}}),
        json::array({{{"match", "a"}}})}) {
    try {
      script_entries_from_json(bad);
      FAIL("expected Config for: " << bad.dump());
    } catch (const MarcoError& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
}

TEST_CASE("chat rejects transcripts that break the message-shape preconditions") {
  ScriptedProvider provider({{{}, {}, "ok"}});
  for (const std::vector<ChatMessage>& bad :
       {std::vector<ChatMessage>{}, std::vector<ChatMessage>{{Role::Assistant, "hi"}},
        std::vector<ChatMessage>{{Role::User, ""}}}) {
    try {
      provider.chat(bad, ChatSettings{});
      FAIL("expected Config");
    } catch (const MarcoError& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
}

TEST_CASE("http provider sends the chat-completions request shape") {
  EnvGuard key("MARCO_TEST_KEY", "sk-test-123");
  auto transport = std::make_shared<FakeTransport>(
      std::vector<HttpResponse>{{200, ok_body("the reply")}});
  HttpChatProvider provider = make_http_provider(transport);

  ChatSettings settings;
  settings.model = "test-model";
  settings.temperature = 0.25;
  settings.max_tokens = 512;
  ProviderResponse response = provider.chat(hello_messages(), settings);

  CHECK(response.text == "the reply");
  CHECK(response.usage.prompt_tokens == 11);
  CHECK(response.usage.completion_tokens == 7);

  REQUIRE(transport->requests.size() == 1);
  const RequestSeen& request = transport->requests[0];
  CHECK(request.base_url == "https://api.example.test/v1");
  CHECK(request.path == "/chat/completions");
  CHECK(request.body["model"] == "test-model");
  CHECK(request.body["temperature"] == doctest::Approx(0.25));
  CHECK(request.body["max_tokens"] == 512);
  REQUIRE(request.body["messages"].size() == 2);
  CHECK(request.body["messages"][0]["role"] == "system");
  CHECK(request.body["messages"][1]["role"] == "user");
  CHECK(request.body["messages"][1]["content"] == "hello");

  bool saw_auth = false;
  for (const auto& [name, value] : request.headers) {
    if (name == "Authorization") {
      saw_auth = true;
      CHECK(value == "Bearer sk-test-123");
    }
  }
  CHECK(saw_auth);
}

TEST_CASE("http provider retries transport failures then succeeds") {
  EnvGuard key("MARCO_TEST_KEY", "sk-test");
  for (int failures = 0; failures < 3; ++failures) {
    std::vector<HttpResponse> canned(failures, HttpResponse{-1, ""});
    canned.push_back({200, ok_body("done")});
    auto transport = std::make_shared<FakeTransport>(canned);
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(provider.chat(hello_messages(), ChatSettings{}).text == "done");
    CHECK(provider.attempts() == failures + 1);
  }
}

TEST_CASE("http provider raises Transport after the attempt cap") {
  EnvGuard key("MARCO_TEST_KEY", "sk-test");
  auto transport = std::make_shared<FakeTransport>(
      std::vector<HttpResponse>{{-1, ""}, {-1, ""}, {-1, ""}});
  HttpChatProvider provider = make_http_provider(transport, 3);
  CHECK(chat_error(provider) == ErrorKind::Transport);
  CHECK(provider.attempts() == 3);
}

TEST_CASE("http provider retries 5xx and 429 statuses") {
  EnvGuard key("MARCO_TEST_KEY", "sk-test");
  SUBCASE("5xx then success") {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{503, "down"}, {200, ok_body("up")}});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(provider.chat(hello_messages(), ChatSettings{}).text == "up");
    CHECK(provider.attempts() == 2);
  }
  SUBCASE("persistent 429 becomes RateLimited") {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{429, ""}, {429, ""}, {429, ""}});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(chat_error(provider) == ErrorKind::RateLimited);
    CHECK(provider.attempts() == 3);
  }
}

TEST_CASE("http provider fails fast on authentication problems") {
  SUBCASE("401 is not retried") {
    EnvGuard key("MARCO_TEST_KEY", "sk-test");
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{401, "no"}, {200, ok_body("never")}});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(chat_error(provider) == ErrorKind::Auth);
    CHECK(provider.attempts() == 1);
  }
  SUBCASE("missing key env var raises Auth before any request") {
    EnvGuard key("MARCO_TEST_KEY", nullptr);
    auto transport = std::make_shared<FakeTransport>(std::vector<HttpResponse>{});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(chat_error(provider) == ErrorKind::Auth);
    CHECK(provider.attempts() == 0);
    CHECK(transport->requests.empty());
  }
}

TEST_CASE("http provider raises MalformedResponse on bad bodies") {
  EnvGuard key("MARCO_TEST_KEY", "sk-test");
  SUBCASE("not JSON") {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{200, "<html>oops</html>"}});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(chat_error(provider) == ErrorKind::MalformedResponse);
  }
  SUBCASE("missing content field") {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{200, R"({"choices": [{}]})"}});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(chat_error(provider) == ErrorKind::MalformedResponse);
  }
  SUBCASE("non-retryable 4xx") {
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{400, "bad request"}});
    HttpChatProvider provider = make_http_provider(transport, 3);
    CHECK(chat_error(provider) == ErrorKind::MalformedResponse);
    CHECK(provider.attempts() == 1);
  }
}

TEST_CASE("recording provider captures prompts and replies") {
  auto inner = scripted_from_transcript({{{}, {}, "reply one"}});
  RecordingProvider recording(inner);
  recording.chat(hello_messages(), ChatSettings{});
  std::vector<RecordedCall> calls = recording.calls();
  REQUIRE(calls.size() == 1);
  CHECK(calls[0].messages == hello_messages());
  CHECK(calls[0].reply == "reply one");
}

TEST_CASE("make_provider dispatches on the configured kind") {
  RetryPolicy retry;
  SUBCASE("scripted") {
    AgentConfig config;
    config.kind = "scripted";
    config.script = json::array({{{"reply", "scripted reply"}}});
    auto provider = make_provider(config, retry, 5.0, 1000);
    CHECK(provider->chat(hello_messages(), ChatSettings{}).text == "scripted reply");
  }
  SUBCASE("dsl_enum solves from pairs in the prompt") {
    AgentConfig config;
    config.kind = "dsl_enum";
    config.depth = 2;
    auto provider = make_provider(config, retry, 5.0, 200000);
    std::vector<ChatMessage> messages = {
        {Role::System, "sys"},
        {Role::User, "Example 1:\n  Input: [3, 1, 2]\n  Output: [1, 2, 3]"}};
    std::string text = provider->chat(messages, ChatSettings{}).text;
    CHECK(util::contains(text, "```"));
    CHECK(util::contains(text, "Sort"));
  }
  SUBCASE("openai") {
    AgentConfig config;
    config.kind = "openai";
    auto provider = make_provider(config, retry, 5.0, 1000);
    CHECK(provider != nullptr);
  }
  SUBCASE("unknown kind") {
    AgentConfig config;
    config.kind = "mystery";
    try {
      make_provider(config, retry, 5.0, 1000);
      FAIL("expected Config");
    } catch (const MarcoError& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
}

TEST_CASE("enumerator provider replies with a miss sentence when no program fits") {
  AgentConfig config;
  config.kind = "dsl_enum";
  config.depth = 1;
  auto provider = make_provider(config, RetryPolicy{}, 5.0, 200000);
  std::vector<ChatMessage> messages = {
      {Role::System, "sys"},
      {Role::User, "Example 1:\n  Input: [1]\n  Output: [1]\n"
                   "Example 2:\n  Input: [1]\n  Output: [2]"}};
  std::string text = provider->chat(messages, ChatSettings{}).text;
  CHECK_FALSE(util::contains(text, "```"));
}
