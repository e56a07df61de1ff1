// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line; the binary exits nonzero when any criterion fails. Everything runs
// offline: scripted transcripts, the enumerative solver, and the local
// interpreter sandbox stand in for live models.
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marco/domain.hpp"
#include "marco/dsl.hpp"
#include "marco/errors.hpp"
#include "marco/executor.hpp"
#include "marco/harness.hpp"
#include "marco/knowledge.hpp"
#include "marco/orchestrator.hpp"
#include "marco/prompts.hpp"
#include "marco/providers.hpp"
#include "marco/util.hpp"

using namespace marco;
using namespace marco::prompt_markers;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct TempDir {
  TempDir() {
    path = fs::temp_directory_path() /
           ("marco-acceptance-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int value = 0;
    return value;
  }
  fs::path path;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::string fenced(const std::string& code) { return "```\n" + code + "\n```"; }

std::string flatten(const std::vector<ChatMessage>& messages) {
  std::string all;
  for (const ChatMessage& message : messages) {
    all += message.content;
    all += '\n';
  }
  return all;
}

std::vector<AgentHandle> enum_agents(int count, int depth, long long budget) {
  std::vector<AgentHandle> agents;
  AgentConfig config;
  config.kind = "dsl_enum";
  config.depth = depth;
  for (int i = 0; i < count; ++i) {
    agents.push_back(AgentHandle{make_provider(config, RetryPolicy{}, 5.0, budget),
                                 ChatSettings{}});
  }
  return agents;
}

std::vector<Problem> generated_problems(int count, std::uint64_t seed) {
  dsl::GenOptions options;
  options.family = dsl::GenOptions::Family::List;
  options.count = count;
  options.seed = seed;
  std::vector<Problem> problems;
  for (Problem& problem : dsl::generate_dsl_dataset(options)) {
    problems.push_back(split_visible(problem));
  }
  return problems;
}

// Sink double recording the bank checkpoint after every problem.
class SnapshotSink : public RunSink {
 public:
  void on_event(const json&) override {}
  void on_problem_complete(const ProblemResult&, const KnowledgeBank& bank,
                           const std::vector<CondensedKnowledge>&) override {
    snapshots.push_back(bank);
  }
  std::vector<KnowledgeBank> snapshots;
};

// ---------------------------------------------------------------------------
// Criterion 1: a 12-problem scripted run with three agents and two iterations
// per problem. Script predicates plus recorded transcripts prove that every
// revision prompt carries exactly the two peer lessons from the previous
// iteration and the knowledge snapshot frozen at problem entry, with no
// transcript mismatches.
// ---------------------------------------------------------------------------

constexpr int kProtocolProblems = 12;

std::string protocol_id(int k) {
  char buffer[8];
  std::snprintf(buffer, sizeof(buffer), "s%02d", k);
  return buffer;
}

std::vector<Problem> protocol_problems() {
  std::vector<Problem> problems;
  for (int k = 1; k <= kProtocolProblems; ++k) {
    Problem problem;
    problem.id = protocol_id(k);
    problem.kind = TaskKind::Induction;
    problem.language = CodeLanguage::ListDsl;
    const std::string a = std::to_string(k);
    const std::string b = std::to_string(k + 1);
    problem.pairs = {
        {"[" + a + "]", "[" + std::to_string(7 * k) + "]", false},
        {"[" + a + ", " + b + "]", "[" + std::to_string(7 * k) + ", 9]", false},
        {"[" + b + "]", "[" + std::to_string(7 * k + 3) + "]", false},
        {"[" + a + ", " + a + "]", "[5, " + std::to_string(k) + "]", false},
    };
    problems.push_back(split_visible(problem));
  }
  return problems;
}

void criterion_protocol_fidelity() {
  auto start = std::chrono::steady_clock::now();

  const std::array<std::string, 3> first_codes = {"Head", "Last", "Sum"};
  const std::array<std::string, 3> second_codes = {"Reverse", "Sort", "Drop(1)"};
  const std::array<std::string, 3> takeaways = {
      "agent one takeaway: re-check stage arity before proposing.",
      "agent two takeaway: test the empty list early.",
      "agent three takeaway: compare lengths before values.",
  };

  std::vector<std::shared_ptr<RecordingProvider>> recordings;
  std::vector<AgentHandle> agents;
  for (int j = 0; j < 3; ++j) {
    std::vector<ScriptEntry> entries;
    for (int k = 1; k <= kProtocolProblems; ++k) {
      ScriptEntry initial;
      initial.require = {"Problem: " + protocol_id(k)};
      initial.forbid = {std::string(kLessonsBegin)};
      if (k == 1) {
        initial.forbid.push_back(std::string(kKnowledgeBegin));
      } else {
        initial.require.push_back(std::string(kKnowledgeBegin));
        for (const std::string& takeaway : takeaways) initial.require.push_back(takeaway);
      }
      initial.reply = fenced(first_codes[j]);
      entries.push_back(initial);

      ScriptEntry revision;
      for (int other = 0; other < 3; ++other) {
        if (other == j) continue;
        revision.require.push_back(std::string(kLessonHeader) +
                                   std::to_string(other + 1) + " (iteration 1) ---");
        revision.require.push_back(first_codes[other]);
      }
      revision.require.push_back("Propose a corrected solution.");
      revision.forbid = {std::string(kLessonHeader) + std::to_string(j + 1) + " ("};
      if (k == 1) {
        revision.forbid.push_back(std::string(kKnowledgeBegin));
      } else {
        revision.require.push_back(std::string(kKnowledgeBegin));
        for (const std::string& takeaway : takeaways) revision.require.push_back(takeaway);
      }
      revision.reply = fenced(second_codes[j]);
      entries.push_back(revision);

      ScriptEntry reflect;
      reflect.require = {std::string(kSummarizeTask)};
      reflect.reply = takeaways[j];
      entries.push_back(reflect);
    }
    auto recording =
        std::make_shared<RecordingProvider>(scripted_from_transcript(entries));
    recordings.push_back(recording);
    agents.push_back(AgentHandle{recording, ChatSettings{}});
  }

  RunConfig config;
  config.num_agents = 3;
  config.max_iterations = 2;
  config.condense_period = 100;
  RunReport report = run_benchmark(protocol_problems(), config, agents, nullptr,
                                   Executor{SandboxLimits{}}, nullptr);
  require(report.results.size() == kProtocolProblems, "12 problems must complete");

  for (int j = 0; j < 3; ++j) {
    std::vector<RecordedCall> calls = recordings[j]->calls();
    require(calls.size() == 3 * kProtocolProblems,
            "each agent makes initial, revision, and reflection calls per problem");
    for (int k = 1; k <= kProtocolProblems; ++k) {
      const RecordedCall& initial = calls[3 * (k - 1)];
      const RecordedCall& revision = calls[3 * (k - 1) + 1];

      const std::string& closing = revision.messages.back().content;
      require(util::count_occurrences(closing, std::string(kLessonHeader)) == 2,
              protocol_id(k) + ": revision must carry exactly 2 peer lessons");
      require(util::count_occurrences(closing, "(iteration 1) ---") == 2,
              protocol_id(k) + ": lessons must come from the prior iteration");

      std::string expected_knowledge;
      for (int seen = 1; seen < k; ++seen) {
        for (const std::string& takeaway : takeaways) {
          if (!expected_knowledge.empty()) expected_knowledge += "\n";
          expected_knowledge += takeaway;
        }
      }
      for (const RecordedCall* call : {&initial, &revision}) {
        const std::string& text = call->messages.back().content;
        if (k == 1) {
          require(util::count_occurrences(text, std::string(kKnowledgeBegin)) == 0,
                  "no knowledge section before any problem finished");
          continue;
        }
        require(util::count_occurrences(text, std::string(kKnowledgeBegin)) == 1,
                protocol_id(k) + ": exactly one knowledge section");
        const std::string opener = std::string(kKnowledgeBegin) + "\n";
        const std::string closer = "\n" + std::string(kKnowledgeEnd);
        std::size_t begin = text.find(opener);
        std::size_t end = text.find(closer, begin);
        require(begin != std::string::npos && end != std::string::npos,
                "knowledge section must be delimited");
        std::string snapshot = text.substr(begin + opener.size(),
                                           end - begin - opener.size());
        require(snapshot == expected_knowledge,
                protocol_id(k) + ": knowledge must equal the frozen pre-problem bank");
      }
    }
  }

  require(seconds_since(start) < 10.0, "protocol scenario must finish inside 10 s");
}

// ---------------------------------------------------------------------------
// Criterion 2: the knowledge lifecycle over 24 problems with a condensation
// period of 8 shows exactly three condensations covering 8, 16, and 24
// problems, an emptied raw list after each, and a final version of 3.
// ---------------------------------------------------------------------------

void criterion_knowledge_lifecycle() {
  std::vector<Problem> problems = generated_problems(24, 42);
  RunConfig config;
  config.num_agents = 3;
  config.max_iterations = 2;
  config.condense_period = 8;
  std::vector<AgentHandle> agents = enum_agents(3, 2, config.enum_node_budget);
  AgentHandle condenser = agents[0];

  SnapshotSink sink;
  RunReport report = run_benchmark(problems, config, agents, &condenser,
                                   Executor{SandboxLimits{}}, &sink);

  require(report.condensations.size() == 3, "exactly 3 condensations over 24 problems");
  for (int i = 0; i < 3; ++i) {
    require(report.condensations[i].covering_problems == 8 * (i + 1),
            "condensation " + std::to_string(i + 1) + " covers " +
                std::to_string(8 * (i + 1)) + " problems");
    require(report.condensations[i].version == i + 1, "versions increment by one");
  }
  require(report.bank.condensed.has_value() && report.bank.condensed->version == 3,
          "final bank holds version 3");
  require(report.bank.problems_seen == 24, "bank counts all 24 problems");

  require(sink.snapshots.size() == 24, "one checkpoint per problem");
  for (int k = 1; k <= 24; ++k) {
    const KnowledgeBank& bank = sink.snapshots[k - 1];
    require(static_cast<int>(bank.raw.size()) <= 24, "raw entries never exceed 24");
    if (k % 8 == 0) {
      require(bank.raw.empty(), "raw entries are cleared by each condensation");
      require(bank.condensed.has_value() && bank.condensed->version == k / 8,
              "checkpoint after problem " + std::to_string(k) + " holds version " +
                  std::to_string(k / 8));
    } else {
      require(static_cast<int>(bank.raw.size()) == 3 * (k % 8),
              "raw grows by three takeaways per problem");
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 3: an enumerator-driven agent solves a generated 20-problem suite
// perfectly, and the same harness reports strictly lower problem accuracy
// when the enumerator's search depth is crippled, so solver quality separates.
// ---------------------------------------------------------------------------

void criterion_solver_separation() {
  auto start = std::chrono::steady_clock::now();
  std::vector<Problem> problems = generated_problems(20, 2026);

  RunConfig config;
  config.num_agents = 1;
  config.max_iterations = 2;
  config.static_mode = true;

  auto run_at_depth = [&](int depth) {
    std::vector<AgentHandle> agents = enum_agents(1, depth, config.enum_node_budget);
    RunReport report = run_benchmark(problems, config, agents, nullptr,
                                     Executor{SandboxLimits{}}, nullptr);
    return problem_accuracy(report.results);
  };

  double full_depth = run_at_depth(2);
  double crippled = run_at_depth(1);
  require(full_depth == 1.0, "depth-2 enumerator must reach problem accuracy 1.0, got " +
                                 std::to_string(full_depth));
  require(crippled < 1.0, "depth-1 enumerator must score strictly below 1.0, got " +
                              std::to_string(crippled));
  require(seconds_since(start) < 60.0, "solver separation must finish inside 60 s");
}

// ---------------------------------------------------------------------------
// Criterion 4: pair and problem accuracy agree exactly with an independent
// brute-force recount over 1000 randomized synthetic result sets.
// ---------------------------------------------------------------------------

void criterion_metric_equivalence() {
  util::Rng rng(4242);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ProblemResult> results;
    const int problems = static_cast<int>(rng.range(1, 8));
    for (int p = 0; p < problems; ++p) {
      ProblemResult result;
      result.problem_id = "r" + std::to_string(trial) + "-" + std::to_string(p);
      const int pairs = static_cast<int>(rng.range(1, 6));
      for (int q = 1; q <= pairs; ++q) {
        PairScore score;
        score.index = q;
        score.visible = q <= (pairs + 1) / 2;
        score.passed = rng.chance(0.55);
        result.scored.push_back(score);
      }
      results.push_back(result);
    }

    long long passed = 0, total = 0, solved = 0;
    for (const ProblemResult& result : results) {
      bool all = !result.scored.empty();
      for (const PairScore& score : result.scored) {
        ++total;
        if (score.passed) {
          ++passed;
        } else {
          all = false;
        }
      }
      if (all) ++solved;
    }
    const double expected_accuracy =
        static_cast<double>(passed) / static_cast<double>(total);
    const double expected_problem_accuracy =
        static_cast<double>(solved) / static_cast<double>(results.size());

    require(accuracy(results) == expected_accuracy,
            "pair accuracy must match the recount exactly");
    require(problem_accuracy(results) == expected_problem_accuracy,
            "problem accuracy must match the recount exactly");

    Metrics metrics = compute_metrics(results);
    require(metrics.accuracy == expected_accuracy &&
                metrics.problem_accuracy == expected_problem_accuracy,
            "compute_metrics must agree with the direct functions");
  }
}

// ---------------------------------------------------------------------------
// Criterion 5: 100 hostile candidates (spins, oversized allocations, raised
// exceptions) are each contained with the documented outcome and the parent
// process stays healthy throughout.
// ---------------------------------------------------------------------------

void criterion_sandbox_abuse() {
  SandboxLimits tight;
  tight.cpu_seconds = 1.0;
  tight.wall_seconds = 4.0;
  Executor spinner(tight);
  Executor executor{SandboxLimits{}};

  int contained = 0;

  for (int trial = 0; trial < 10; ++trial) {
    auto start = std::chrono::steady_clock::now();
    ExecOutcome outcome = spinner.run_candidate(
        "def f(x):\n    while True:\n        x += 1", "f(0)", CodeLanguage::General);
    require(outcome.status == ExecStatus::Timeout,
            "spin trial " + std::to_string(trial) + " must time out, got " +
                to_string(outcome.status));
    require(seconds_since(start) <= tight.cpu_seconds + 2.0,
            "timeout must land within the cpu limit plus 2 s grace");
    ++contained;
  }

  for (int trial = 0; trial < 20; ++trial) {
    ExecOutcome outcome = executor.run_candidate(
        "def f(x):\n    return len(bytearray(1 << 30))", "f(0)", CodeLanguage::General);
    require(outcome.status == ExecStatus::ResourceKilled,
            "allocation trial " + std::to_string(trial) + " must be resource-killed, got " +
                to_string(outcome.status));
    ++contained;
  }

  const std::array<std::string, 7> classes = {
      "ValueError",   "KeyError",     "IndexError",       "TypeError",
      "RuntimeError", "AttributeError", "ZeroDivisionError"};
  for (int trial = 0; trial < 70; ++trial) {
    const std::string& error_class = classes[trial % classes.size()];
    std::string code = error_class == "ZeroDivisionError"
                           ? "def f(x):\n    return 1 / 0"
                           : "def f(x):\n    raise " + error_class + "('hostile')";
    ExecOutcome outcome = executor.run_candidate(code, "f(0)", CodeLanguage::General);
    require(outcome.status == ExecStatus::Exception,
            "exception trial " + std::to_string(trial) + " must be an exception");
    require(outcome.error_class == error_class,
            "expected " + error_class + ", got " + outcome.error_class);
    ++contained;
  }

  require(contained == 100, "all 100 abuse trials must be contained");

  ExecOutcome health = executor.run_candidate("def f(x):\n    return x + 1", "f(2)",
                                              CodeLanguage::General);
  require(health.status == ExecStatus::Value && health.value_repr == "3",
          "the parent process must still run candidates normally");
}

// ---------------------------------------------------------------------------
// Criterion 6: for 200 generated (function, input) cases the deduction and
// abduction checkers accept the true values, and 200 perturbed cases are all
// rejected.
// ---------------------------------------------------------------------------

struct SoundnessCase {
  std::string code;
  long long input = 0;
  std::string truth_repr;        // repr of f(input), computed independently
  std::string perturbed_repr;    // repr of f(input + 1)
};

SoundnessCase soundness_case(int family, long long k, long long x) {
  auto repr_for = [&](long long v) -> std::string {
    switch (family) {
      case 0: return std::to_string(v + k);
      case 1: return std::to_string(v - k);
      case 2: return std::to_string(v * (k + 1));
      case 3: return std::to_string(2 * v + k);
      case 4: return std::to_string(v * v + k);
      case 5: return "[" + std::to_string(v) + ", " + std::to_string(v + k) + "]";
      default: return "(" + std::to_string(v) + ", " + std::to_string(k) + ")";
    }
  };
  SoundnessCase out;
  switch (family) {
    case 0: out.code = "def f(x):\n    return x + " + std::to_string(k); break;
    case 1: out.code = "def f(x):\n    return x - " + std::to_string(k); break;
    case 2: out.code = "def f(x):\n    return x * " + std::to_string(k + 1); break;
    case 3: out.code = "def f(x):\n    return 2 * x + " + std::to_string(k); break;
    case 4: out.code = "def f(x):\n    return x * x + " + std::to_string(k); break;
    case 5:
      out.code = "def f(x):\n    return [x, x + " + std::to_string(k) + "]";
      break;
    default:
      out.code = "def f(x):\n    return (x, " + std::to_string(k) + ")";
      break;
  }
  out.input = x;
  out.truth_repr = repr_for(x);
  out.perturbed_repr = repr_for(x + 1);
  return out;
}

void criterion_checker_soundness() {
  Executor executor{SandboxLimits{}};
  util::Rng rng(600);

  std::vector<SoundnessCase> cases;
  for (int i = 0; i < 200; ++i) {
    const int family = i % 7;
    const long long k = 1 + (i / 7) % 5;
    const long long x = rng.range(-7, 7);
    cases.push_back(soundness_case(family, k, x));
  }

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const SoundnessCase& c = cases[i];
    const std::string input_expr = std::to_string(c.input);
    require(executor.check_deduction(c.truth_repr, c.code, input_expr,
                                     CodeLanguage::General),
            "deduction case " + std::to_string(i) + " must pass");
    require(executor.check_abduction(input_expr, c.code, c.truth_repr,
                                     CodeLanguage::General),
            "abduction case " + std::to_string(i) + " must pass");
  }

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const SoundnessCase& c = cases[i];
    if (i % 2 == 0) {
      require(!executor.check_deduction(c.perturbed_repr, c.code,
                                        std::to_string(c.input), CodeLanguage::General),
              "perturbed deduction case " + std::to_string(i) + " must fail");
    } else {
      require(!executor.check_abduction(std::to_string(c.input + 1), c.code,
                                        c.truth_repr, CodeLanguage::General),
              "perturbed abduction case " + std::to_string(i) + " must fail");
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 7: identical runs produce byte-identical artifact files, and an
// interrupted run resumed from its checkpoint converges to the same bytes as
// an uninterrupted one.
// ---------------------------------------------------------------------------

void criterion_determinism_and_resume() {
  std::vector<Problem> problems = generated_problems(8, 99);

  RunConfig config;
  config.num_agents = 2;
  config.max_iterations = 2;
  config.condense_period = 4;

  auto run_into = [&](const fs::path& dir, std::optional<int> stop_after, bool resume) {
    RunConfig local = config;
    local.stop_after = stop_after;
    std::vector<AgentHandle> agents = enum_agents(2, 2, config.enum_node_budget);
    AgentHandle condenser = agents[0];

    RunState state;
    if (resume) {
      std::vector<ProblemResult> done = load_results(dir.string());
      load_knowledge_file(dir.string(), &state.bank, &state.condensations);
      state.completed = static_cast<int>(done.size());
    }
    FileRunSink sink(dir.string(), resume);
    run_benchmark(problems, local, agents, &condenser, Executor{SandboxLimits{}},
                  &sink, state);
    write_metrics_file(compute_metrics(load_results(dir.string())), dir.string());
  };

  TempDir first, second, interrupted;
  run_into(first.path, std::nullopt, false);
  run_into(second.path, std::nullopt, false);
  run_into(interrupted.path, 4, false);
  run_into(interrupted.path, std::nullopt, true);

  for (const char* name : {"results.jsonl", "knowledge.json", "metrics.json"}) {
    require(read_text(first.path / name) == read_text(second.path / name),
            std::string(name) + " must be byte-identical across repeated runs");
    require(read_text(first.path / name) == read_text(interrupted.path / name),
            std::string(name) + " must be byte-identical after an interrupted resume");
  }
}

// ---------------------------------------------------------------------------
// Criterion 8: with the baseline mode on, no prompt ever carries a knowledge
// or lesson section; and an agent configured to exploit injected knowledge
// improves over the baseline MORE on the second half of the run than on the
// first, showing accumulated knowledge, not the task mix, drives the gap.
// ---------------------------------------------------------------------------

// Model stand-in that solves a doubling task only when the accumulated
// knowledge section contains its hint; its takeaway IS the hint, so the bank
// starts paying off from the second problem on.
class HintedProvider : public ChatProvider {
 public:
  explicit HintedProvider(std::string hint) : hint_(std::move(hint)) {}

  ProviderResponse chat(const std::vector<ChatMessage>& messages,
                        const ChatSettings&) override {
    std::string all = flatten(messages);
    ProviderResponse response;
    if (util::contains(all, std::string(kSummarizeTask))) {
      response.text = hint_;
    } else if (util::contains(all, std::string(kCondenseTask))) {
      response.text = "1. " + hint_;
    } else if (util::contains(all, std::string(kKnowledgeBegin)) &&
               util::contains(all, hint_)) {
      response.text = fenced("Map(*2)");
    } else {
      response.text = fenced("Sort");
    }
    response.usage.prompt_tokens = static_cast<long long>(all.size() / 4 + 1);
    response.usage.completion_tokens =
        static_cast<long long>(response.text.size() / 4 + 1);
    return response;
  }

 private:
  std::string hint_;
};

std::vector<Problem> doubling_suite() {
  std::vector<Problem> problems;
  for (int k = 1; k <= 8; ++k) {
    Problem problem;
    problem.id = "k" + std::to_string(k);
    problem.kind = TaskKind::Induction;
    problem.language = CodeLanguage::ListDsl;
    auto list1 = [](long long a) { return "[" + std::to_string(a) + "]"; };
    auto list2 = [](long long a, long long b) {
      return "[" + std::to_string(a) + ", " + std::to_string(b) + "]";
    };
    problem.pairs = {
        {list1(k), list1(2 * k), false},
        {list2(k, k + 1), list2(2 * k, 2 * k + 2), false},
        {list1(k + 2), list1(2 * k + 4), false},
        {list2(k + 1, k + 3), list2(2 * k + 2, 2 * k + 6), false},
    };
    problems.push_back(split_visible(problem));
  }
  return problems;
}

void criterion_static_baseline() {
  const std::string hint = "doubling every element fits these examples";
  std::vector<Problem> problems = doubling_suite();
  Executor executor{SandboxLimits{}};

  RunConfig knowledge_config;
  knowledge_config.num_agents = 1;
  knowledge_config.max_iterations = 2;
  knowledge_config.condense_period = 100;
  auto knowledge_recording =
      std::make_shared<RecordingProvider>(std::make_shared<HintedProvider>(hint));
  std::vector<AgentHandle> knowledge_agents = {
      AgentHandle{knowledge_recording, ChatSettings{}}};
  RunReport knowledge_report = run_benchmark(problems, knowledge_config,
                                             knowledge_agents, nullptr, executor, nullptr);

  RunConfig static_config;
  static_config.num_agents = 2;
  static_config.max_iterations = 2;
  static_config.static_mode = true;
  auto static_recording_1 =
      std::make_shared<RecordingProvider>(std::make_shared<HintedProvider>(hint));
  auto static_recording_2 =
      std::make_shared<RecordingProvider>(std::make_shared<HintedProvider>(hint));
  std::vector<AgentHandle> static_agents = {
      AgentHandle{static_recording_1, ChatSettings{}},
      AgentHandle{static_recording_2, ChatSettings{}}};
  RunReport static_report = run_benchmark(problems, static_config, static_agents,
                                          nullptr, executor, nullptr);

  for (const auto& recording : {static_recording_1, static_recording_2}) {
    std::vector<RecordedCall> calls = recording->calls();
    require(!calls.empty(), "the baseline run must make proposal calls");
    for (const RecordedCall& call : calls) {
      for (const ChatMessage& message : call.messages) {
        require(util::count_occurrences(message.content, std::string(kKnowledgeBegin)) == 0,
                "baseline prompts must never carry a knowledge section");
        require(util::count_occurrences(message.content, std::string(kLessonsBegin)) == 0,
                "baseline prompts must never carry a lessons section");
        require(util::count_occurrences(message.content, std::string(kLessonHeader)) == 0,
                "baseline prompts must never carry lesson headers");
      }
    }
  }

  bool knowledge_section_seen = false;
  for (const RecordedCall& call : knowledge_recording->calls()) {
    if (util::contains(flatten(call.messages), std::string(kKnowledgeBegin))) {
      knowledge_section_seen = true;
    }
  }
  require(knowledge_section_seen,
          "the knowledge-driven run must inject the accumulated section");

  HalfDeltas deltas = half_improvement(knowledge_report, static_report);
  require(deltas.first_half_delta > 0.0,
          "the knowledge-driven run must already beat the baseline in the first half");
  require(deltas.second_half_delta > deltas.first_half_delta,
          "the improvement must be larger on the second half (got first " +
              std::to_string(deltas.first_half_delta) + ", second " +
              std::to_string(deltas.second_half_delta) + ")");
}

struct Criterion {
  const char* name;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"protocol fidelity", criterion_protocol_fidelity},
      {"knowledge lifecycle", criterion_knowledge_lifecycle},
      {"solver separation", criterion_solver_separation},
      {"metric equivalence", criterion_metric_equivalence},
      {"sandbox abuse containment", criterion_sandbox_abuse},
      {"checker soundness", criterion_checker_soundness},
      {"determinism and resume", criterion_determinism_and_resume},
      {"static baseline and knowledge effect", criterion_static_baseline},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    std::string verdict = "PASS";
    std::string detail;
    try {
      criteria[i].run();
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = e.what();
      ++failures;
    }
    std::printf("%s  criterion %zu (%s) [%.1fs]%s%s\n", verdict.c_str(), i + 1,
                criteria[i].name, seconds_since(start), detail.empty() ? "" : ": ",
                detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
