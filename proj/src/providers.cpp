#include "marco/providers.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#ifdef MARCO_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "marco/dsl_provider.hpp"
#include "marco/errors.hpp"
#include "marco/util.hpp"

namespace marco {

namespace {

using nlohmann::json;

// Rough but deterministic token estimate for providers that do not report
// usage themselves.
long long approx_tokens(std::size_t chars) {
  return static_cast<long long>(chars / 4 + 1);
}

const ChatMessage* last_user_message(const std::vector<ChatMessage>& messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::User) return &*it;
  }
  return nullptr;
}

void check_chat_preconditions(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) raise(ErrorKind::Config, "chat requires at least one message");
  if (messages.front().role == Role::Assistant) {
    raise(ErrorKind::Config, "first chat message must be system or user");
  }
  for (const ChatMessage& message : messages) {
    if (message.role != Role::Assistant && message.content.empty()) {
      raise(ErrorKind::Config, "system/user messages must be non-empty");
    }
  }
}

std::vector<std::string> string_or_list(const json& node, const char* field) {
  std::vector<std::string> out;
  if (node.is_string()) {
    out.push_back(node.get<std::string>());
  } else if (node.is_array()) {
    for (const json& item : node) {
      if (!item.is_string()) {
        raise(ErrorKind::Config, std::string("script entry field '") + field +
                                     "' must be a string or array of strings");
      }
      out.push_back(item.get<std::string>());
    }
  } else {
    raise(ErrorKind::Config, std::string("script entry field '") + field +
                                 "' must be a string or array of strings");
  }
  return out;
}

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

// ---------------------------------------------------------------------------
// ScriptedProvider.
// ---------------------------------------------------------------------------

ScriptedProvider::ScriptedProvider(std::vector<ScriptEntry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) raise(ErrorKind::Config, "scripted transcript must be non-empty");
}

ProviderResponse ScriptedProvider::chat(const std::vector<ChatMessage>& messages,
                                        const ChatSettings&) {
  check_chat_preconditions(messages);
  std::lock_guard<std::mutex> lock(mutex_);
  if (cursor_ >= entries_.size()) {
    raise(ErrorKind::ScriptExhausted,
          "scripted transcript exhausted after " + std::to_string(entries_.size()) + " calls");
  }
  const ScriptEntry& entry = entries_[cursor_];
  const ChatMessage* last_user = last_user_message(messages);
  std::string last_text = last_user ? last_user->content : "";
  for (const std::string& needle : entry.require) {
    if (!util::contains(last_text, needle)) {
      raise(ErrorKind::TranscriptMismatch,
            "entry " + std::to_string(cursor_ + 1) + ": last user message lacks \"" + needle +
                "\"");
    }
  }
  for (const std::string& needle : entry.forbid) {
    if (util::contains(last_text, needle)) {
      raise(ErrorKind::TranscriptMismatch,
            "entry " + std::to_string(cursor_ + 1) + ": last user message contains forbidden \"" +
                needle + "\"");
    }
  }
  ++cursor_;

  ProviderResponse response;
  response.text = entry.reply;
  std::size_t prompt_chars = 0;
  for (const ChatMessage& message : messages) prompt_chars += message.content.size();
  response.usage.prompt_tokens = approx_tokens(prompt_chars);
  response.usage.completion_tokens = approx_tokens(entry.reply.size());
  return response;
}

std::size_t ScriptedProvider::calls_made() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cursor_;
}

std::shared_ptr<ChatProvider> scripted_from_transcript(std::vector<ScriptEntry> entries) {
  return std::make_shared<ScriptedProvider>(std::move(entries));
}

std::vector<ScriptEntry> script_entries_from_json(const json& spec) {
  if (!spec.is_array()) {
    raise(ErrorKind::Config, "scripted agent needs a 'script' array");
  }
  std::vector<ScriptEntry> entries;
  for (const json& node : spec) {
    if (!node.is_object() || !node.contains("reply") || !node["reply"].is_string()) {
      raise(ErrorKind::Config, "script entries need a string 'reply'");
    }
    ScriptEntry entry;
    entry.reply = node["reply"].get<std::string>();
    if (node.contains("match")) entry.require = string_or_list(node["match"], "match");
    if (node.contains("forbid")) entry.forbid = string_or_list(node["forbid"], "forbid");
    entries.push_back(std::move(entry));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// HTTP transport + provider.
// ---------------------------------------------------------------------------

namespace {

struct UrlParts {
  std::string scheme_host_port;  // e.g. "https://api.openai.com"
  std::string path_prefix;       // e.g. "/v1"
};

UrlParts split_base_url(const std::string& base_url) {
  std::size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    raise(ErrorKind::Config, "base_url must start with http:// or https://");
  }
  std::size_t path_start = base_url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_start == std::string::npos) {
    parts.scheme_host_port = base_url;
  } else {
    parts.scheme_host_port = base_url.substr(0, path_start);
    parts.path_prefix = base_url.substr(path_start);
    while (!parts.path_prefix.empty() && parts.path_prefix.back() == '/') {
      parts.path_prefix.pop_back();
    }
  }
  return parts;
}

class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& base_url, const std::string& path,
                         const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         double timeout_seconds) override {
    UrlParts parts = split_base_url(base_url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (parts.scheme_host_port.rfind("https://", 0) == 0) {
      raise(ErrorKind::Transport, "https requested but TLS support is not built in");
    }
#endif
    httplib::Client client(parts.scheme_host_port);
    auto timeout = std::chrono::milliseconds(static_cast<long long>(timeout_seconds * 1000));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers hl_headers;
    for (const auto& [key, value] : headers) hl_headers.emplace(key, value);

    httplib::Result result =
        client.Post(parts.path_prefix + path, hl_headers, body, "application/json");
    if (!result) {
      raise(ErrorKind::Transport, "request failed: " + httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() {
  return std::make_shared<HttplibTransport>();
}

HttpChatProvider::HttpChatProvider(AgentConfig config, RetryPolicy retry, double timeout_seconds,
                                   std::shared_ptr<HttpTransport> transport,
                                   std::function<void(double)> sleep_fn)
    : config_(std::move(config)),
      retry_(retry),
      timeout_seconds_(timeout_seconds),
      transport_(transport ? std::move(transport) : make_httplib_transport()),
      sleep_(sleep_fn ? std::move(sleep_fn) : [](double seconds) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
      }) {}

ProviderResponse HttpChatProvider::chat(const std::vector<ChatMessage>& messages,
                                        const ChatSettings& settings) {
  check_chat_preconditions(messages);

  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) {
    raise(ErrorKind::Auth, "environment variable " + config_.api_key_env + " is not set");
  }

  json body;
  body["model"] = settings.model;
  body["temperature"] = settings.temperature;
  body["max_tokens"] = settings.max_tokens;
  body["messages"] = json::array();
  for (const ChatMessage& message : messages) {
    body["messages"].push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  std::string body_text = body.dump();
  std::vector<std::pair<std::string, std::string>> headers = {
      {"Authorization", std::string("Bearer ") + key}};

  std::string last_failure;
  ErrorKind last_kind = ErrorKind::Transport;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    attempts_.fetch_add(1);
    HttpResponse response;
    bool transport_failed = false;
    auto start = std::chrono::steady_clock::now();
    try {
      response = transport_->post_json(config_.base_url, "/chat/completions", body_text, headers,
                                       timeout_seconds_);
    } catch (const MarcoError& err) {
      if (err.kind() != ErrorKind::Transport) throw;
      transport_failed = true;
      last_failure = err.what();
      last_kind = ErrorKind::Transport;
    }

    if (!transport_failed) {
      if (response.status == 401 || response.status == 403) {
        raise(ErrorKind::Auth,
              "authentication rejected (status " + std::to_string(response.status) + ")");
      }
      if (response.status == 200) {
        json parsed = json::parse(response.body, nullptr, false);
        if (parsed.is_discarded()) {
          raise(ErrorKind::MalformedResponse, "response body is not JSON");
        }
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty() || !parsed["choices"][0].contains("message") ||
            !parsed["choices"][0]["message"].contains("content") ||
            !parsed["choices"][0]["message"]["content"].is_string()) {
          raise(ErrorKind::MalformedResponse, "response lacks choices[0].message.content");
        }
        ProviderResponse out;
        out.text = parsed["choices"][0]["message"]["content"].get<std::string>();
        if (parsed.contains("usage") && parsed["usage"].is_object()) {
          out.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0ll);
          out.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0ll);
        }
        out.latency_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return out;
      }
      if (response.status == 429) {
        last_kind = ErrorKind::RateLimited;
        last_failure = "rate limited (status 429)";
      } else if (response.status >= 500) {
        last_kind = ErrorKind::Transport;
        last_failure = "upstream error (status " + std::to_string(response.status) + ")";
      } else {
        raise(ErrorKind::MalformedResponse,
              "upstream rejected request (status " + std::to_string(response.status) + "): " +
                  util::truncate_within(response.body, 300));
      }
    }

    if (attempt < retry_.max_attempts) {
      double delay = retry_.base_delay_seconds * std::pow(2.0, attempt - 1);
      sleep_(std::min(delay, retry_.max_delay_seconds));
    }
  }
  raise(last_kind, last_failure + " after " + std::to_string(retry_.max_attempts) + " attempts");
}

// ---------------------------------------------------------------------------
// RecordingProvider.
// ---------------------------------------------------------------------------

RecordingProvider::RecordingProvider(std::shared_ptr<ChatProvider> inner)
    : inner_(std::move(inner)) {}

ProviderResponse RecordingProvider::chat(const std::vector<ChatMessage>& messages,
                                         const ChatSettings& settings) {
  ProviderResponse response = inner_->chat(messages, settings);
  std::lock_guard<std::mutex> lock(mutex_);
  calls_.push_back(RecordedCall{messages, settings, response.text});
  return response;
}

std::vector<RecordedCall> RecordingProvider::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Factory.
// ---------------------------------------------------------------------------

std::shared_ptr<ChatProvider> make_provider(const AgentConfig& config, const RetryPolicy& retry,
                                            double timeout_seconds, long long enum_node_budget) {
  if (config.kind == "openai") {
    return std::make_shared<HttpChatProvider>(config, retry, timeout_seconds);
  }
  if (config.kind == "scripted") {
    return scripted_from_transcript(script_entries_from_json(config.script));
  }
  if (config.kind == "dsl_enum") {
    return std::make_shared<EnumeratorProvider>(config.depth, enum_node_budget);
  }
  raise(ErrorKind::Config, "unknown agent kind '" + config.kind + "'");
}

}  // namespace marco
