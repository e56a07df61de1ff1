#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "marco/domain.hpp"
#include "marco/executor.hpp"
#include "marco/providers.hpp"

namespace marco {

// Verdict for one dataset pair when the selected solution is scored after the
// proposal loop. index is 1-based over all of the problem's pairs in dataset
// order, visible copies the pair's split flag.
struct PairScore {
  int index = 0;
  bool visible = false;
  bool passed = false;
  std::string error_class;
};

struct ProblemResult {
  std::string problem_id;
  bool solved_visible = false;
  std::vector<ReasoningPath> paths;  // one per agent, agent-index order
  std::optional<std::pair<int, Solution>> selected;
  int iterations_used = 0;
  std::vector<Feedback> final_feedback;  // one per agent, FinalBinary
  std::vector<PairScore> scored;         // all pairs, scored post-loop
  std::string error;                     // non-empty when the problem errored out
  TokenUsage tokens;
  // Wall time is kept out of the persisted result so scripted runs stay
  // byte-identical; sinks receive it through the problem_end event.
  double wall_seconds = 0.0;
};

struct RunReport {
  std::vector<ProblemResult> results;
  KnowledgeBank bank;
  std::vector<CondensedKnowledge> condensations;
  TokenUsage tokens;
};

// A provider plus the settings its proposal calls use.
struct AgentHandle {
  std::shared_ptr<ChatProvider> provider;
  ChatSettings settings;
};

// Receives run events and per-problem checkpoints. on_problem_complete must
// persist before returning; crash-safe resume depends on it.
class RunSink {
 public:
  virtual ~RunSink() = default;
  virtual void on_event(const nlohmann::json& event) = 0;
  virtual void on_problem_complete(const ProblemResult& result, const KnowledgeBank& bank,
                                   const std::vector<CondensedKnowledge>& condensations) = 0;
};

// Checkpoint carried into run_benchmark when resuming: the bank and
// condensation history as of `completed` persisted problems.
struct RunState {
  KnowledgeBank bank;
  std::vector<CondensedKnowledge> condensations;
  int completed = 0;
};

// Runs the proposal-feedback loop for one problem: up to T iterations of M
// concurrent proposals, each extracted and checked in the sandbox; the loop
// stops early once any agent passes every visible check. From iteration 2 on,
// each agent sees the other agents' latest code and verdicts as lessons;
// static_mode suppresses both lessons and the knowledge section. Provider
// transport trouble and missing code blocks become failed proposals for that
// agent-iteration; SandboxError, Auth, TranscriptMismatch, ScriptExhausted,
// and DatasetDefect propagate.
ProblemResult solve_problem(const Problem& problem, std::vector<AgentHandle>& agents,
                            const std::string& knowledge_snapshot, const RunConfig& config,
                            const Executor& executor, RunSink* sink = nullptr);

// Picks the proposal passing the most visible checks; ties prefer the earlier
// iteration, then the lower agent index. Proposals without an extractable
// core are never selected; absent when none qualifies.
std::optional<std::pair<int, Solution>> select_final_solution(
    const std::vector<ReasoningPath>& paths);

// Scores solution `core` against every pair of the problem (visible and
// hidden). An empty optional scores every pair as failed.
std::vector<PairScore> score_all_pairs(const Problem& problem,
                                       const std::optional<std::pair<int, Solution>>& selected,
                                       const Executor& executor);

// Sequential benchmark loop: snapshot knowledge, solve, score all pairs,
// reflect, append, condense on period boundaries, checkpoint, advance.
// Resumes from state.completed; config.stop_after caps the total number of
// completed problems. Returns results for the problems run by THIS call plus
// the final bank and full condensation history.
RunReport run_benchmark(const std::vector<Problem>& problems, const RunConfig& config,
                        std::vector<AgentHandle>& agents, AgentHandle* condenser,
                        const Executor& executor, RunSink* sink, RunState state = RunState{});

struct HalfDeltas {
  double first_half_delta = 0.0;
  double second_half_delta = 0.0;
};

// Splits both runs' shared problem sequence at ceil(N/2) and reports the
// pair-level accuracy difference (a minus b) within each half. Raises
// MismatchedRuns unless the runs cover identical problem id sequences.
HalfDeltas half_improvement(const RunReport& a, const RunReport& b);

}  // namespace marco
