#pragma once

#include <string>
#include <vector>

#include "marco/domain.hpp"
#include "marco/providers.hpp"

namespace marco {

// Asks the agent for one transferable takeaway from its finished path. The
// completion is whitespace-trimmed and truncated to caps.summary_chars.
// Raises EmptySummary when the completion trims to nothing; provider errors
// propagate. Callers skip the agent's entry on either. When `usage` is given
// it receives the call's token counts.
Summary summarize(ChatProvider& agent, const ChatSettings& settings, const ReasoningPath& path,
                  const Feedback& final_feedback, const PromptCaps& caps,
                  TokenUsage* usage = nullptr);

// Returns a bank with the problem's summaries appended in agent-index order
// and problems_seen advanced by 1. The problem_id is explicit so a problem
// whose summaries were all skipped still advances the counter. Raises
// DuplicateProblem when the bank already holds entries for problem_id, Config
// when a summary is tagged with a different problem.
KnowledgeBank append_summaries(const KnowledgeBank& bank, const std::string& problem_id,
                               std::vector<Summary> summaries);

// True iff problems_seen is a positive multiple of condense_period.
bool should_condense(int problems_seen, int condense_period);

// Distills prior condensed text plus all raw entries into one fresh condensed
// block (version incremented, raw cleared, problems_seen unchanged). Provider
// errors propagate; an empty completion raises EmptySummary. The caller keeps
// the original bank on failure and retries at the next boundary.
KnowledgeBank condense(ChatProvider& condenser, const ChatSettings& settings,
                       const KnowledgeBank& bank, const PromptCaps& caps,
                       TokenUsage* usage = nullptr);

}  // namespace marco
