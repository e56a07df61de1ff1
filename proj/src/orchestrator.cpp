#include "marco/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <future>

#include "marco/errors.hpp"
#include "marco/knowledge.hpp"
#include "marco/prompts.hpp"

namespace marco {

namespace {

constexpr const char* kNoCodeNote = "no runnable code produced";
constexpr const char* kAllWrong = "All your answers are wrong for the given examples.";

// Failures that mean "this proposal is lost, keep going": transport trouble
// after retries, rate limiting, unparseable replies, and replies without a
// code block. Everything else signals broken infrastructure or a broken test
// scenario and must surface.
bool is_soft_provider_error(ErrorKind kind) {
  return kind == ErrorKind::Transport || kind == ErrorKind::RateLimited ||
         kind == ErrorKind::MalformedResponse || kind == ErrorKind::NoCodeBlock;
}

bool is_hard_reflection_error(ErrorKind kind) {
  return kind == ErrorKind::SandboxError || kind == ErrorKind::Auth ||
         kind == ErrorKind::TranscriptMismatch || kind == ErrorKind::ScriptExhausted;
}

Feedback no_code_feedback() {
  Feedback feedback;
  feedback.kind = FeedbackKind::PerIteration;
  feedback.passed = false;
  feedback.rendered = kNoCodeNote;
  return feedback;
}

std::vector<IOPair> visible_pairs(const Problem& problem) {
  std::vector<IOPair> visible;
  for (const IOPair& pair : problem.pairs) {
    if (pair.visible) visible.push_back(pair);
  }
  return visible;
}

// Checks an extracted proposal against the visible side of the problem only;
// hidden pairs stay untouched until post-loop scoring.
Feedback check_proposal(const Problem& problem, const std::string& core, const RunConfig& config,
                        const Executor& executor) {
  switch (problem.kind) {
    case TaskKind::Induction: {
      std::vector<CheckRecord> records = executor.check_induction(
          core, visible_pairs(problem), problem.language, problem.entry, problem.tolerance);
      return make_feedback(records, FeedbackKind::PerIteration, config.caps);
    }
    case TaskKind::Deduction: {
      bool ok = executor.check_deduction(core, *problem.function_source,
                                         problem.pairs.at(0).input, problem.language,
                                         problem.tolerance);
      CheckRecord record;
      record.index = 1;
      record.passed = ok;
      if (!ok) record.message = "the predicted output does not match the function's result";
      return make_feedback({record}, FeedbackKind::PerIteration, config.caps);
    }
    case TaskKind::Abduction: {
      bool ok = executor.check_abduction(core, *problem.function_source,
                                         problem.pairs.at(0).output, problem.language,
                                         problem.tolerance);
      CheckRecord record;
      record.index = 1;
      record.passed = ok;
      if (!ok) record.message = "the function does not produce the expected output on this input";
      return make_feedback({record}, FeedbackKind::PerIteration, config.caps);
    }
  }
  raise(ErrorKind::Config, "unknown task kind");
}

struct ProposalOutcome {
  Solution solution;
  Feedback feedback;
  TokenUsage usage;
  std::exception_ptr hard_error;
};

ProposalOutcome propose(const Problem& problem, AgentHandle& agent, int agent_index,
                        int iteration, const ReasoningPath& path,
                        const std::vector<Lesson>& lessons, const std::string& knowledge,
                        const RunConfig& config, const Executor& executor) {
  ProposalOutcome outcome;
  outcome.solution.agent_index = agent_index;
  outcome.solution.iteration = iteration;
  try {
    std::vector<ChatMessage> prompt =
        iteration == 1 ? build_initial_prompt(problem, knowledge, problem.kind)
                       : build_revision_prompt(problem, path, lessons, knowledge, config.caps);
    ProviderResponse response = agent.provider->chat(prompt, agent.settings);
    outcome.usage = response.usage;
    outcome.solution.raw_text = response.text;
    outcome.solution.core = extract_code(response.text);
  } catch (const MarcoError& e) {
    if (is_soft_provider_error(e.kind())) {
      outcome.solution.core.clear();
      outcome.feedback = no_code_feedback();
      return outcome;
    }
    outcome.hard_error = std::current_exception();
    return outcome;
  }
  try {
    outcome.feedback = check_proposal(problem, outcome.solution.core, config, executor);
  } catch (...) {
    outcome.hard_error = std::current_exception();
  }
  return outcome;
}

}  // namespace

ProblemResult solve_problem(const Problem& problem, std::vector<AgentHandle>& agents,
                            const std::string& knowledge_snapshot, const RunConfig& config,
                            const Executor& executor, RunSink* sink) {
  if (static_cast<int>(agents.size()) != config.num_agents) {
    raise(ErrorKind::Config, "expected " + std::to_string(config.num_agents) +
                                 " agent handles, got " + std::to_string(agents.size()));
  }
  const int num_agents = config.num_agents;
  const std::string knowledge = config.static_mode ? std::string{} : knowledge_snapshot;

  ProblemResult result;
  result.problem_id = problem.id;
  result.paths.resize(num_agents);
  for (int j = 0; j < num_agents; ++j) {
    result.paths[j].problem_id = problem.id;
    result.paths[j].agent_index = j + 1;
  }

  const auto started = std::chrono::steady_clock::now();

  for (int t = 1; t <= config.max_iterations && !result.solved_visible; ++t) {
    std::vector<std::vector<Lesson>> lessons_for(num_agents);
    if (t > 1 && !config.static_mode) {
      for (int j = 0; j < num_agents; ++j) {
        for (int i = 0; i < num_agents; ++i) {
          if (i == j) continue;
          const PathEntry& last = result.paths[i].entries.back();
          Lesson lesson;
          lesson.from_agent = i + 1;
          lesson.iteration = t - 1;
          lesson.code_core = last.solution.core;
          lesson.feedback = last.feedback;
          lessons_for[j].push_back(std::move(lesson));
        }
      }
    }

    std::vector<std::future<ProposalOutcome>> futures;
    futures.reserve(num_agents);
    for (int j = 0; j < num_agents; ++j) {
      futures.push_back(std::async(std::launch::async, [&, j, t] {
        return propose(problem, agents[j], j + 1, t, result.paths[j], lessons_for[j], knowledge,
                       config, executor);
      }));
    }
    std::vector<ProposalOutcome> outcomes;
    outcomes.reserve(num_agents);
    for (auto& future : futures) outcomes.push_back(future.get());

    for (const ProposalOutcome& outcome : outcomes) {
      if (outcome.hard_error) std::rethrow_exception(outcome.hard_error);
    }

    for (int j = 0; j < num_agents; ++j) {
      result.tokens += outcomes[j].usage;
      result.paths[j] =
          path_append(result.paths[j], outcomes[j].solution, outcomes[j].feedback);
      if (outcomes[j].feedback.passed) result.solved_visible = true;
    }
    result.iterations_used = t;
    if (sink) {
      sink->on_event({{"event", "iteration"},
                      {"problem_id", problem.id},
                      {"iteration", t},
                      {"solved_visible", result.solved_visible}});
    }
  }

  for (int j = 0; j < num_agents; ++j) {
    const PathEntry& last = result.paths[j].entries.back();
    if (last.feedback.detail.empty()) {
      Feedback fin;
      fin.kind = FeedbackKind::FinalBinary;
      fin.passed = false;
      fin.rendered = kAllWrong;
      result.final_feedback.push_back(std::move(fin));
    } else {
      result.final_feedback.push_back(
          make_feedback(last.feedback.detail, FeedbackKind::FinalBinary, config.caps));
    }
  }

  result.selected = select_final_solution(result.paths);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::optional<std::pair<int, Solution>> select_final_solution(
    const std::vector<ReasoningPath>& paths) {
  std::optional<std::pair<int, Solution>> best;
  int best_passes = -1;
  int best_iteration = 0;
  int best_agent = 0;
  for (const ReasoningPath& path : paths) {
    for (const PathEntry& entry : path.entries) {
      if (entry.solution.core.empty()) continue;
      int passes = 0;
      for (const CheckRecord& record : entry.feedback.detail) {
        if (record.passed) ++passes;
      }
      bool better;
      if (passes != best_passes) {
        better = passes > best_passes;
      } else if (entry.solution.iteration != best_iteration) {
        better = entry.solution.iteration < best_iteration;
      } else {
        better = entry.solution.agent_index < best_agent;
      }
      if (better) {
        best = std::make_pair(entry.solution.agent_index, entry.solution);
        best_passes = passes;
        best_iteration = entry.solution.iteration;
        best_agent = entry.solution.agent_index;
      }
    }
  }
  return best;
}

std::vector<PairScore> score_all_pairs(const Problem& problem,
                                       const std::optional<std::pair<int, Solution>>& selected,
                                       const Executor& executor) {
  std::vector<PairScore> scored;
  scored.reserve(problem.pairs.size());
  if (!selected) {
    int index = 0;
    for (const IOPair& pair : problem.pairs) {
      PairScore score;
      score.index = ++index;
      score.visible = pair.visible;
      scored.push_back(std::move(score));
    }
    return scored;
  }

  const std::string& core = selected->second.core;
  switch (problem.kind) {
    case TaskKind::Induction: {
      std::vector<CheckRecord> records = executor.check_induction(
          core, problem.pairs, problem.language, problem.entry, problem.tolerance);
      for (std::size_t i = 0; i < records.size(); ++i) {
        PairScore score;
        score.index = records[i].index;
        score.visible = problem.pairs[i].visible;
        score.passed = records[i].passed;
        score.error_class = records[i].error_class;
        scored.push_back(std::move(score));
      }
      break;
    }
    case TaskKind::Deduction: {
      PairScore score;
      score.index = 1;
      score.visible = problem.pairs.at(0).visible;
      score.passed = executor.check_deduction(core, *problem.function_source,
                                              problem.pairs.at(0).input, problem.language,
                                              problem.tolerance);
      scored.push_back(std::move(score));
      break;
    }
    case TaskKind::Abduction: {
      PairScore score;
      score.index = 1;
      score.visible = problem.pairs.at(0).visible;
      score.passed = executor.check_abduction(core, *problem.function_source,
                                              problem.pairs.at(0).output, problem.language,
                                              problem.tolerance);
      scored.push_back(std::move(score));
      break;
    }
  }
  return scored;
}

RunReport run_benchmark(const std::vector<Problem>& problems, const RunConfig& config,
                        std::vector<AgentHandle>& agents, AgentHandle* condenser,
                        const Executor& executor, RunSink* sink, RunState state) {
  config.validate();
  if (static_cast<int>(agents.size()) != config.num_agents) {
    raise(ErrorKind::Config, "expected " + std::to_string(config.num_agents) +
                                 " agent handles, got " + std::to_string(agents.size()));
  }
  if (state.completed < 0 || state.completed > static_cast<int>(problems.size())) {
    raise(ErrorKind::Config, "resume offset " + std::to_string(state.completed) +
                                 " outside the dataset of " + std::to_string(problems.size()));
  }

  RunReport report;
  report.condensations = std::move(state.condensations);
  KnowledgeBank bank = std::move(state.bank);

  int limit = static_cast<int>(problems.size());
  if (config.stop_after) limit = std::min(limit, *config.stop_after);

  for (int i = state.completed; i < limit; ++i) {
    const Problem& problem = problems[i];
    const std::string snapshot = config.static_mode ? std::string{} : render_knowledge(bank);
    if (sink) {
      sink->on_event(
          {{"event", "problem_start"}, {"ordinal", i + 1}, {"problem_id", problem.id}});
    }

    ProblemResult result;
    bool errored = false;
    try {
      result = solve_problem(problem, agents, snapshot, config, executor, sink);
      result.scored = score_all_pairs(problem, result.selected, executor);
    } catch (const MarcoError& e) {
      if (e.kind() != ErrorKind::DatasetDefect) throw;
      errored = true;
      result = ProblemResult{};
      result.problem_id = problem.id;
      result.error = e.what();
      result.scored = score_all_pairs(problem, std::nullopt, executor);
      if (sink) {
        sink->on_event(
            {{"event", "problem_error"}, {"problem_id", problem.id}, {"error", e.what()}});
      }
    }

    if (!config.static_mode) {
      std::vector<Summary> summaries;
      if (!errored) {
        for (int j = 0; j < config.num_agents; ++j) {
          const ReasoningPath& path = result.paths[j];
          if (path.empty()) continue;
          try {
            ChatSettings settings = agents[j].settings;
            settings.temperature = config.reflection_temperature;
            TokenUsage usage;
            Summary summary = summarize(*agents[j].provider, settings, path,
                                        result.final_feedback[j], config.caps, &usage);
            result.tokens += usage;
            summaries.push_back(std::move(summary));
          } catch (const MarcoError& e) {
            if (is_hard_reflection_error(e.kind())) throw;
            if (sink) {
              sink->on_event({{"event", "summary_skipped"},
                              {"problem_id", problem.id},
                              {"agent", j + 1},
                              {"reason", e.what()}});
            }
          }
        }
      }
      bank = append_summaries(bank, problem.id, std::move(summaries));

      if (condenser && should_condense(bank.problems_seen, config.condense_period)) {
        try {
          ChatSettings settings = condenser->settings;
          settings.temperature = config.reflection_temperature;
          TokenUsage usage;
          KnowledgeBank next = condense(*condenser->provider, settings, bank, config.caps, &usage);
          report.tokens += usage;
          bank = std::move(next);
          report.condensations.push_back(*bank.condensed);
          if (sink) {
            sink->on_event({{"event", "condensation"},
                            {"problem_id", problem.id},
                            {"version", bank.condensed->version},
                            {"covering_problems", bank.condensed->covering_problems}});
          }
        } catch (const MarcoError& e) {
          if (is_hard_reflection_error(e.kind())) throw;
          if (sink) {
            sink->on_event({{"event", "condense_failed"},
                            {"problem_id", problem.id},
                            {"reason", e.what()}});
          }
        }
      }
    }

    if (sink) {
      sink->on_event({{"event", "problem_end"},
                      {"ordinal", i + 1},
                      {"problem_id", problem.id},
                      {"solved_visible", result.solved_visible},
                      {"wall_seconds", result.wall_seconds},
                      {"prompt_tokens", result.tokens.prompt_tokens},
                      {"completion_tokens", result.tokens.completion_tokens}});
      sink->on_problem_complete(result, bank, report.condensations);
    }
    report.tokens += result.tokens;
    report.results.push_back(std::move(result));
  }

  report.bank = std::move(bank);
  return report;
}

HalfDeltas half_improvement(const RunReport& a, const RunReport& b) {
  if (a.results.size() != b.results.size()) {
    raise(ErrorKind::MismatchedRuns, "runs cover different problem counts");
  }
  if (a.results.empty()) {
    raise(ErrorKind::EmptyDataset, "runs contain no problems");
  }
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    if (a.results[i].problem_id != b.results[i].problem_id) {
      raise(ErrorKind::MismatchedRuns,
            "problem order differs at position " + std::to_string(i + 1));
    }
  }

  auto half_accuracy = [](const std::vector<ProblemResult>& results, std::size_t lo,
                          std::size_t hi) {
    long long passed = 0;
    long long total = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      for (const PairScore& score : results[i].scored) {
        ++total;
        if (score.passed) ++passed;
      }
    }
    if (total == 0) raise(ErrorKind::EmptyDataset, "half contains no scored pairs");
    return static_cast<double>(passed) / static_cast<double>(total);
  };

  const std::size_t n = a.results.size();
  const std::size_t mid = (n + 1) / 2;
  HalfDeltas deltas;
  deltas.first_half_delta = half_accuracy(a.results, 0, mid) - half_accuracy(b.results, 0, mid);
  deltas.second_half_delta =
      mid < n ? half_accuracy(a.results, mid, n) - half_accuracy(b.results, mid, n) : 0.0;
  return deltas;
}

}  // namespace marco
