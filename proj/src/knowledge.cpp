#include "marco/knowledge.hpp"

#include <algorithm>

#include "marco/errors.hpp"
#include "marco/prompts.hpp"
#include "marco/util.hpp"

namespace marco {

Summary summarize(ChatProvider& agent, const ChatSettings& settings, const ReasoningPath& path,
                  const Feedback& final_feedback, const PromptCaps& caps, TokenUsage* usage) {
  std::vector<ChatMessage> prompt = build_summarize_prompt(path, final_feedback);
  ProviderResponse response = agent.chat(prompt, settings);
  if (usage) *usage += response.usage;
  std::string text = util::trim(response.text);
  if (text.empty()) {
    raise(ErrorKind::EmptySummary,
          "agent " + std::to_string(path.agent_index) + " produced an empty takeaway");
  }
  Summary summary;
  summary.problem_id = path.problem_id;
  summary.agent_index = path.agent_index;
  summary.text = util::truncate_head(text, caps.summary_chars);
  return summary;
}

KnowledgeBank append_summaries(const KnowledgeBank& bank, const std::string& problem_id,
                               std::vector<Summary> summaries) {
  if (problem_id.empty()) raise(ErrorKind::Config, "append_summaries needs a problem id");
  for (const Summary& existing : bank.raw) {
    if (existing.problem_id == problem_id) {
      raise(ErrorKind::DuplicateProblem,
            "bank already holds summaries for '" + problem_id + "'");
    }
  }
  for (const Summary& summary : summaries) {
    if (summary.problem_id != problem_id) {
      raise(ErrorKind::Config, "summary tagged '" + summary.problem_id +
                                   "' appended under '" + problem_id + "'");
    }
  }
  std::stable_sort(summaries.begin(), summaries.end(),
                   [](const Summary& a, const Summary& b) {
                     return a.agent_index < b.agent_index;
                   });

  KnowledgeBank next = bank;
  for (Summary& summary : summaries) next.raw.push_back(std::move(summary));
  next.problems_seen = bank.problems_seen + 1;
  return next;
}

bool should_condense(int problems_seen, int condense_period) {
  if (condense_period < 1) raise(ErrorKind::Config, "condense period must be at least 1");
  return problems_seen > 0 && problems_seen % condense_period == 0;
}

KnowledgeBank condense(ChatProvider& condenser, const ChatSettings& settings,
                       const KnowledgeBank& bank, const PromptCaps& caps, TokenUsage* usage) {
  std::vector<ChatMessage> prompt = build_condense_prompt(bank, caps.condense_max_items);
  ProviderResponse response = condenser.chat(prompt, settings);
  if (usage) *usage += response.usage;
  std::string text = util::trim(response.text);
  if (text.empty()) {
    raise(ErrorKind::EmptySummary, "condenser produced an empty distillation");
  }

  KnowledgeBank next;
  CondensedKnowledge condensed;
  condensed.text = std::move(text);
  condensed.covering_problems = bank.problems_seen;
  condensed.version = bank.condensed ? bank.condensed->version + 1 : 1;
  next.condensed = std::move(condensed);
  next.raw.clear();
  next.problems_seen = bank.problems_seen;
  return next;
}

}  // namespace marco
