#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace marco {

// ---------------------------------------------------------------------------
// Task model. A problem asks for one element of the <input, function, output>
// triple given the other two.
// ---------------------------------------------------------------------------

enum class TaskKind { Induction, Deduction, Abduction };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& token);

enum class CodeLanguage { General, ListDsl, StringDsl };

std::string to_string(CodeLanguage language);
CodeLanguage code_language_from_string(const std::string& token);

// One input/output example. Values are stored as source-text expressions in
// the task's code language; equality is decided by the executor, never by
// string comparison.
struct IOPair {
  std::string input;
  std::string output;
  bool visible = false;
};

struct Problem {
  std::string id;
  TaskKind kind = TaskKind::Induction;
  // Present for deduction/abduction, absent for induction.
  std::optional<std::string> function_source;
  // >= 2 pairs for induction; exactly 1 for deduction/abduction.
  std::vector<IOPair> pairs;
  CodeLanguage language = CodeLanguage::General;
  // Required entry-point name for induction candidates.
  std::string entry = "f";
  // Opt-in numeric comparison tolerance; exact equality when absent.
  std::optional<double> tolerance;
};

// One proposal from one agent at one iteration. `core` is the extracted code
// or value expression (the last fenced block of raw_text).
struct Solution {
  int agent_index = 0;  // 1-based
  int iteration = 0;    // 1-based
  std::string raw_text;
  std::string core;
};

enum class FeedbackKind { PerIteration, FinalBinary };

struct CheckRecord {
  int index = 0;  // 1-based check (pair) index
  bool passed = false;
  std::string error_class;
  std::string message;
};

struct Feedback {
  FeedbackKind kind = FeedbackKind::PerIteration;
  bool passed = false;
  std::vector<CheckRecord> detail;
  std::string rendered;
};

struct PathEntry {
  Solution solution;
  Feedback feedback;
};

// Alternating (solution, feedback) sequence of one agent on one problem.
struct ReasoningPath {
  std::string problem_id;
  int agent_index = 0;
  std::vector<PathEntry> entries;

  bool empty() const { return entries.empty(); }
  int last_iteration() const {
    return entries.empty() ? 0 : entries.back().solution.iteration;
  }
};

// Peer experience exchanged between agents: the extracted code core of a
// proposal plus the interpreter's verdict on it.
struct Lesson {
  int from_agent = 0;
  int iteration = 0;
  std::string code_core;
  Feedback feedback;
};

// One transferable takeaway from one agent's work on one problem.
struct Summary {
  std::string problem_id;
  int agent_index = 0;
  std::string text;
};

struct CondensedKnowledge {
  std::string text;
  int covering_problems = 0;
  int version = 0;  // increments by 1 per condensation
};

// Accumulated takeaways. At most one condensed block; raw holds entries since
// the last condensation. Initially condensed is absent and raw is empty.
struct KnowledgeBank {
  std::optional<CondensedKnowledge> condensed;
  std::vector<Summary> raw;
  int problems_seen = 0;
};

// ---------------------------------------------------------------------------
// Run configuration.
// ---------------------------------------------------------------------------

struct SandboxLimits {
  double cpu_seconds = 5.0;
  double wall_seconds = 10.0;
  std::uint64_t memory_bytes = 256ull * 1024 * 1024;
  std::uint64_t output_bytes = 64ull * 1024;
};

struct PromptCaps {
  std::size_t feedback_chars = 2000;  // rendered feedback, marker included
  std::size_t lesson_chars = 1500;    // peer lesson code core
  std::size_t summary_chars = 800;    // takeaway text before the marker
  int condense_max_items = 10;        // numbered sentences the condenser may emit
};

struct RetryPolicy {
  int max_attempts = 3;
  double base_delay_seconds = 0.5;
  double max_delay_seconds = 8.0;
};

// Per-agent provider settings. `kind` selects the implementation:
//   "openai"   live chat-completions endpoint
//   "scripted" deterministic transcript replay (entries in `script`)
//   "dsl_enum" enumerative DSL solver standing in for a model
struct AgentConfig {
  std::string kind = "openai";
  std::string model = "gpt-4o-mini";
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "MARCO_API_KEY";
  double temperature = 0.7;
  int max_tokens = 2048;
  int depth = 2;  // dsl_enum only: enumeration stage cap
  nlohmann::json script;  // scripted only: [{"match": str|[str], "reply": str}]
};

struct RunConfig {
  int num_agents = 3;      // M: concurrent proposal agents
  int max_iterations = 2;  // T
  int condense_period = 8; // T_c
  bool static_mode = false;
  std::uint64_t seed = 0;

  std::vector<AgentConfig> agents;  // size M after normalization
  AgentConfig condenser;

  SandboxLimits limits;
  PromptCaps caps;
  RetryPolicy retry;
  double request_timeout_seconds = 120.0;
  double reflection_temperature = 0.2;  // SUMMARIZE / CONDENSE calls

  long long enum_node_budget = 200000;  // dsl_enum agents
  std::optional<int> stop_after;  // stop after this many problems (resume testing)

  void validate() const;  // throws Config on bad values
};

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

// Returns a new path extended by [solution, feedback]; prior entries are
// unchanged. Throws IterationGap unless solution.iteration continues the
// path's iteration sequence by exactly 1.
ReasoningPath path_append(const ReasoningPath& path, Solution solution,
                          Feedback feedback);

// Condensed text (if present) followed by raw summaries in insertion order,
// newline-separated. Deterministic; empty bank renders as "".
std::string render_knowledge(const KnowledgeBank& bank);

}  // namespace marco
