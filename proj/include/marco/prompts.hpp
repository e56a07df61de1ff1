#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "marco/domain.hpp"
#include "marco/providers.hpp"

namespace marco {

// Fixed ASCII section markers. Scripted transcripts and tests match on these,
// so they are part of the module's contract.
namespace prompt_markers {
inline constexpr std::string_view kKnowledgeBegin = "=== ACCUMULATED KNOWLEDGE ===";
inline constexpr std::string_view kKnowledgeEnd = "=== END ACCUMULATED KNOWLEDGE ===";
inline constexpr std::string_view kLessonsBegin = "=== LESSONS FROM PEER AGENTS ===";
inline constexpr std::string_view kLessonsEnd = "=== END LESSONS FROM PEER AGENTS ===";
inline constexpr std::string_view kLessonHeader = "--- LESSON FROM AGENT ";
inline constexpr std::string_view kSummarizeTask = "Write one transferable takeaway";
inline constexpr std::string_view kCondenseTask = "Condense all guidance above";
}  // namespace prompt_markers

// Problem rendering shared by the prompt builders. Induction serializes the
// visible pairs only; deduction shows function + input; abduction shows
// function + output.
std::string render_problem(const Problem& problem);

// First-iteration prompt: sub-task contract in the system message, problem
// rendering (plus the knowledge section when knowledge_text is non-empty) in
// the user message.
std::vector<ChatMessage> build_initial_prompt(const Problem& problem,
                                              const std::string& knowledge_text, TaskKind kind);

// Revision prompt: replays the agent's own proposals and feedback as chat
// history; the final user message carries the latest feedback, the peer
// lessons, the knowledge section, and the revise instruction. Empty lesson
// list and empty knowledge_text produce no such sections (static mode).
std::vector<ChatMessage> build_revision_prompt(const Problem& problem, const ReasoningPath& path,
                                               const std::vector<Lesson>& lessons,
                                               const std::string& knowledge_text,
                                               const PromptCaps& caps = PromptCaps{});

// End-of-problem reflection prompt asking for one transferable takeaway.
std::vector<ChatMessage> build_summarize_prompt(const ReasoningPath& path,
                                                const Feedback& final_feedback);

// Bank-condensation prompt over the existing condensed text plus raw
// takeaways.
std::vector<ChatMessage> build_condense_prompt(const KnowledgeBank& bank, int max_items = 10);

// Guards every builder: raises HiddenLeak when a hidden pair's rendered block
// (induction), the ground-truth output (deduction), or the ground-truth input
// (abduction) appears in any message. Public so tests can drive it directly.
void assert_prompt_hides(const std::vector<ChatMessage>& messages, const Problem& problem);

}  // namespace marco
