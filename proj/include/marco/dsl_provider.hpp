#pragma once

#include <string>
#include <vector>

#include "marco/providers.hpp"

namespace marco {

// Offline stand-in for a chat model, strong enough to drive full benchmark
// runs: it reads the example pairs out of an induction prompt and answers
// with a program found by bottom-up enumeration. Reflection and condensation
// prompts get fixed canned replies so knowledge plumbing stays exercised.
// Deterministic by construction, which the reproducibility tests rely on.
class EnumeratorProvider : public ChatProvider {
 public:
  EnumeratorProvider(int max_stages, long long node_budget);

  ProviderResponse chat(const std::vector<ChatMessage>& messages,
                        const ChatSettings& settings) override;

 private:
  int max_stages_;
  long long node_budget_;
};

}  // namespace marco
