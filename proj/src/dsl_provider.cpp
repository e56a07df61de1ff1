#include "marco/dsl_provider.hpp"

#include <optional>
#include <sstream>

#include "marco/dsl.hpp"
#include "marco/errors.hpp"
#include "marco/prompts.hpp"
#include "marco/util.hpp"

namespace marco {

namespace {

constexpr const char* kSummaryReply =
    "Match the simplest transformation to the failing examples first: identify which step of "
    "the current program disagrees with them and replace only that step before growing the "
    "program.";

constexpr const char* kCondenseReply =
    "1. Start from the shortest program consistent with the first example, then verify against "
    "the rest.\n"
    "2. When a proposal fails, adjust the stage implicated by the failing examples instead of "
    "rewriting everything.\n"
    "3. Prefer fewer stages over equally consistent longer programs.";

long long approx_tokens(std::size_t chars) {
  return static_cast<long long>(chars / 4) + 1;
}

bool any_message_contains(const std::vector<ChatMessage>& messages, std::string_view needle) {
  for (const ChatMessage& message : messages) {
    if (message.content.find(needle) != std::string::npos) return true;
  }
  return false;
}

// Pulls "Input:" / "Output:" line pairs back out of a rendered problem. Only
// complete pairs count; a dangling input line (deduction prompts) yields none.
std::vector<IOPair> pairs_from_prompt(const std::string& text) {
  std::vector<IOPair> pairs;
  std::optional<std::string> pending_input;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::string trimmed = util::trim(line);
    if (trimmed.rfind("Input: ", 0) == 0) {
      pending_input = trimmed.substr(7);
    } else if (trimmed.rfind("Output: ", 0) == 0 && pending_input) {
      IOPair pair;
      pair.input = *pending_input;
      pair.output = trimmed.substr(8);
      pairs.push_back(std::move(pair));
      pending_input.reset();
    }
  }
  return pairs;
}

}  // namespace

EnumeratorProvider::EnumeratorProvider(int max_stages, long long node_budget)
    : max_stages_(max_stages), node_budget_(node_budget) {
  if (max_stages < 1) raise(ErrorKind::Config, "enumerator depth must be at least 1");
  if (node_budget < 1) raise(ErrorKind::Config, "enumerator node budget must be positive");
}

ProviderResponse EnumeratorProvider::chat(const std::vector<ChatMessage>& messages,
                                          const ChatSettings& settings) {
  (void)settings;
  if (messages.empty()) raise(ErrorKind::Config, "chat called with no messages");

  std::size_t prompt_chars = 0;
  for (const ChatMessage& message : messages) prompt_chars += message.content.size();

  std::string reply;
  if (any_message_contains(messages, prompt_markers::kSummarizeTask)) {
    reply = kSummaryReply;
  } else if (any_message_contains(messages, prompt_markers::kCondenseTask)) {
    reply = kCondenseReply;
  } else {
    const ChatMessage* first_user = nullptr;
    for (const ChatMessage& message : messages) {
      if (message.role == Role::User) {
        first_user = &message;
        break;
      }
    }
    std::vector<IOPair> pairs =
        first_user ? pairs_from_prompt(first_user->content) : std::vector<IOPair>{};

    std::optional<std::string> program;
    if (!pairs.empty()) {
      try {
        program = dsl::enumerate_solve(pairs, max_stages_, node_budget_);
      } catch (const MarcoError&) {
        program.reset();
      }
    }
    if (program) {
      reply = "```\n" + *program + "\n```";
    } else {
      reply = "I could not find a consistent program for these examples.";
    }
  }

  ProviderResponse response;
  response.text = reply;
  response.usage.prompt_tokens = approx_tokens(prompt_chars);
  response.usage.completion_tokens = approx_tokens(reply.size());
  response.latency_seconds = 0.0;
  return response;
}

}  // namespace marco
