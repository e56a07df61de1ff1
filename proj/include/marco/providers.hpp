#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "marco/domain.hpp"

namespace marco {

enum class Role { System, User, Assistant };

std::string to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage& other) const {
    return role == other.role && content == other.content;
  }
};

struct TokenUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
};

struct ProviderResponse {
  std::string text;
  TokenUsage usage;
  double latency_seconds = 0.0;
};

struct ChatSettings {
  std::string model = "gpt-4o-mini";
  double temperature = 0.7;
  int max_tokens = 2048;
};

// Uniform chat interface behind which live models, scripted transcripts, and
// the enumerative DSL solver are interchangeable. Implementations must accept
// concurrent chat calls.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ProviderResponse chat(const std::vector<ChatMessage>& messages,
                                const ChatSettings& settings) = 0;
};

// ---------------------------------------------------------------------------
// Scripted provider: deterministic transcript replay with per-entry predicates
// on the last user message. This is how tests assert prompt contents.
// ---------------------------------------------------------------------------

struct ScriptEntry {
  std::vector<std::string> require;  // substrings the last user message must contain
  std::vector<std::string> forbid;   // substrings it must not contain
  std::string reply;
};

class ScriptedProvider : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptEntry> entries);

  ProviderResponse chat(const std::vector<ChatMessage>& messages,
                        const ChatSettings& settings) override;

  std::size_t calls_made() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ScriptEntry> entries_;
  std::size_t cursor_ = 0;
};

std::shared_ptr<ChatProvider> scripted_from_transcript(std::vector<ScriptEntry> entries);

// Parses the AgentConfig.script JSON: an array of entries
// {"match": str | [str], "forbid": str | [str], "reply": str}.
std::vector<ScriptEntry> script_entries_from_json(const nlohmann::json& spec);

// ---------------------------------------------------------------------------
// Live provider over the chat-completions HTTP shape, with an injectable
// transport so retry behavior is testable without a network.
// ---------------------------------------------------------------------------

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  // POSTs a JSON body; throws MarcoError(Transport) on connection failure.
  virtual HttpResponse post_json(const std::string& base_url, const std::string& path,
                                 const std::string& body,
                                 const std::vector<std::pair<std::string, std::string>>& headers,
                                 double timeout_seconds) = 0;
};

std::shared_ptr<HttpTransport> make_httplib_transport();

class HttpChatProvider : public ChatProvider {
 public:
  HttpChatProvider(AgentConfig config, RetryPolicy retry, double timeout_seconds,
                   std::shared_ptr<HttpTransport> transport = nullptr,
                   std::function<void(double)> sleep_fn = nullptr);

  ProviderResponse chat(const std::vector<ChatMessage>& messages,
                        const ChatSettings& settings) override;

  // Cumulative HTTP attempts across all chat calls.
  long long attempts() const { return attempts_.load(); }

 private:
  AgentConfig config_;
  RetryPolicy retry_;
  double timeout_seconds_;
  std::shared_ptr<HttpTransport> transport_;
  std::function<void(double)> sleep_;
  std::atomic<long long> attempts_{0};
};

// ---------------------------------------------------------------------------
// Recording wrapper: captures every call and reply for later inspection.
// ---------------------------------------------------------------------------

struct RecordedCall {
  std::vector<ChatMessage> messages;
  ChatSettings settings;
  std::string reply;
};

class RecordingProvider : public ChatProvider {
 public:
  explicit RecordingProvider(std::shared_ptr<ChatProvider> inner);

  ProviderResponse chat(const std::vector<ChatMessage>& messages,
                        const ChatSettings& settings) override;

  std::vector<RecordedCall> calls() const;

 private:
  std::shared_ptr<ChatProvider> inner_;
  mutable std::mutex mutex_;
  std::vector<RecordedCall> calls_;
};

// Builds the provider an AgentConfig asks for ("openai", "scripted", or
// "dsl_enum").
std::shared_ptr<ChatProvider> make_provider(const AgentConfig& config, const RetryPolicy& retry,
                                            double timeout_seconds, long long enum_node_budget);

}  // namespace marco
