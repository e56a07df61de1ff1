#include <doctest.h>

#include <functional>
#include <string>
#include <vector>

#include "marco/domain.hpp"
#include "marco/errors.hpp"
#include "marco/knowledge.hpp"
#include "marco/prompts.hpp"
#include "marco/providers.hpp"
#include "marco/util.hpp"

using namespace marco;

namespace {

ReasoningPath failing_path(const std::string& problem_id, int agent_index) {
  ReasoningPath path;
  path.problem_id = problem_id;
  path.agent_index = agent_index;
  Solution solution;
  solution.agent_index = agent_index;
  solution.iteration = 1;
  solution.raw_text = "```\ndef f(s):\n    return s.upper()\n```";
  solution.core = "def f(s):\n    return s.upper()";
  Feedback feedback;
  feedback.kind = FeedbackKind::PerIteration;
  feedback.passed = false;
  feedback.rendered = "Example 1: fail (returned 'A')";
  return path_append(path, solution, feedback);
}

Feedback all_wrong() {
  Feedback feedback;
  feedback.kind = FeedbackKind::FinalBinary;
  feedback.passed = false;
  feedback.rendered = "All your answers are wrong for the given examples.";
  return feedback;
}

Summary tagged(const std::string& problem_id, int agent_index, const std::string& text) {
  Summary summary;
  summary.problem_id = problem_id;
  summary.agent_index = agent_index;
  summary.text = text;
  return summary;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const MarcoError& e) {
    return e.kind();
  }
  FAIL("expected a MarcoError");
  return ErrorKind::Config;
}

}  // namespace

TEST_CASE("summarize returns the trimmed takeaway tagged with problem and agent") {
  ScriptedProvider provider({{{"Write one transferable takeaway"},
                              {},
                              "  Always check letter cases before comparing strings.  \n"}});
  ReasoningPath path = failing_path("p7", 2);
  TokenUsage usage;
  Summary summary = summarize(provider, ChatSettings{}, path, all_wrong(),
                              PromptCaps{}, &usage);
  CHECK(summary.problem_id == "p7");
  CHECK(summary.agent_index == 2);
  CHECK(summary.text == "Always check letter cases before comparing strings.");
  CHECK(usage.prompt_tokens > 0);
  CHECK(usage.completion_tokens > 0);
}

TEST_CASE("summarize caps oversized replies at the configured length") {
  ScriptedProvider provider({{{}, {}, std::string(10000, 'k')}});
  PromptCaps caps;
  caps.summary_chars = 800;
  Summary summary =
      summarize(provider, ChatSettings{}, failing_path("p1", 1), all_wrong(), caps);
  CHECK(summary.text.size() >= 800);
  CHECK(summary.text.rfind(std::string(800, 'k'), 0) == 0);
  CHECK(summary.text.size() < 900);
}

TEST_CASE("summarize raises EmptySummary on a blank completion") {
  ScriptedProvider provider({{{}, {}, "   \n  "}});
  CHECK(kind_of([&] {
          summarize(provider, ChatSettings{}, failing_path("p1", 1), all_wrong(),
                    PromptCaps{});
        }) == ErrorKind::EmptySummary);
}

TEST_CASE("summarize propagates provider errors") {
  ScriptedProvider provider({{{"text that will not be present"}, {}, "unreachable"}});
  CHECK(kind_of([&] {
          summarize(provider, ChatSettings{}, failing_path("p1", 1), all_wrong(),
                    PromptCaps{});
        }) == ErrorKind::TranscriptMismatch);
}

TEST_CASE("append_summaries adds entries in agent order and advances the counter") {
  KnowledgeBank bank;
  KnowledgeBank once = append_summaries(
      bank, "p1",
      {tagged("p1", 3, "third"), tagged("p1", 1, "first"), tagged("p1", 2, "second")});
  CHECK(once.problems_seen == 1);
  REQUIRE(once.raw.size() == 3);
  CHECK(once.raw[0].agent_index == 1);
  CHECK(once.raw[1].agent_index == 2);
  CHECK(once.raw[2].agent_index == 3);

  KnowledgeBank twice =
      append_summaries(once, "p2", {tagged("p2", 1, "fourth"), tagged("p2", 2, "fifth")});
  CHECK(twice.problems_seen == 2);
  CHECK(twice.raw.size() == 5);
  CHECK(twice.raw[3].problem_id == "p2");
  CHECK(once.raw.size() == 3);
}

TEST_CASE("append_summaries advances the counter even with no summaries") {
  KnowledgeBank bank;
  KnowledgeBank next = append_summaries(bank, "p1", {});
  CHECK(next.problems_seen == 1);
  CHECK(next.raw.empty());
}

TEST_CASE("append_summaries rejects duplicates and mistagged entries") {
  KnowledgeBank bank = append_summaries(KnowledgeBank{}, "p1", {tagged("p1", 1, "a")});
  CHECK(kind_of([&] {
          append_summaries(bank, "p1", {tagged("p1", 2, "b")});
        }) == ErrorKind::DuplicateProblem);
  CHECK(kind_of([&] {
          append_summaries(bank, "p2", {tagged("p3", 1, "c")});
        }) == ErrorKind::Config);
  CHECK(kind_of([&] { append_summaries(bank, "", {}); }) == ErrorKind::Config);
}

TEST_CASE("should_condense fires exactly on positive multiples of the period") {
  CHECK(should_condense(8, 8));
  CHECK_FALSE(should_condense(9, 8));
  CHECK(should_condense(16, 8));
  CHECK_FALSE(should_condense(0, 8));
  CHECK_FALSE(should_condense(7, 8));
  CHECK(should_condense(2, 2));
  CHECK(kind_of([] { should_condense(4, 0); }) == ErrorKind::Config);
}

TEST_CASE("condensation count over a run equals the period quotient") {
  for (int period : {2, 3, 8}) {
    for (int problems = 0; problems <= 20; ++problems) {
      int fired = 0;
      for (int seen = 1; seen <= problems; ++seen) {
        if (should_condense(seen, period)) ++fired;
      }
      CHECK(fired == problems / period);
    }
  }
}

TEST_CASE("condense replaces raw entries with a fresh condensed block") {
  ScriptedProvider provider(
      {{{"Condense all guidance above"}, {}, "1. Mind edge cases.\n2. Test empties."}});
  KnowledgeBank bank;
  bank = append_summaries(bank, "p1", {tagged("p1", 1, "watch empties")});
  bank = append_summaries(bank, "p2", {tagged("p2", 1, "mind signs")});

  TokenUsage usage;
  KnowledgeBank next = condense(provider, ChatSettings{}, bank, PromptCaps{}, &usage);
  REQUIRE(next.condensed.has_value());
  CHECK(next.condensed->text == "1. Mind edge cases.\n2. Test empties.");
  CHECK(next.condensed->version == 1);
  CHECK(next.condensed->covering_problems == 2);
  CHECK(next.raw.empty());
  CHECK(next.problems_seen == 2);
  CHECK(usage.prompt_tokens > 0);

  CHECK(bank.raw.size() == 2);
}

TEST_CASE("condense increments the version over an existing block") {
  ScriptedProvider provider({{{"Existing condensed guidance (version 1)"},
                              {},
                              "1. Merged guidance."}});
  KnowledgeBank bank;
  bank.condensed = CondensedKnowledge{"1. Old guidance.", 8, 1};
  bank.raw = {tagged("p9", 1, "new insight")};
  bank.problems_seen = 16;

  KnowledgeBank next = condense(provider, ChatSettings{}, bank, PromptCaps{});
  REQUIRE(next.condensed.has_value());
  CHECK(next.condensed->version == 2);
  CHECK(next.condensed->covering_problems == 16);
  CHECK(next.condensed->text == "1. Merged guidance.");
  CHECK(next.raw.empty());
}

TEST_CASE("condense raises EmptySummary on a blank completion and EmptyBank on nothing") {
  ScriptedProvider blank({{{}, {}, " \n "}});
  KnowledgeBank bank;
  bank.raw = {tagged("p1", 1, "something")};
  bank.problems_seen = 1;
  CHECK(kind_of([&] { condense(blank, ChatSettings{}, bank, PromptCaps{}); }) ==
        ErrorKind::EmptySummary);

  ScriptedProvider unused({{{}, {}, "reply"}});
  CHECK(kind_of([&] {
          condense(unused, ChatSettings{}, KnowledgeBank{}, PromptCaps{});
        }) == ErrorKind::EmptyBank);
}

TEST_CASE("render_knowledge layers condensed text before raw entries") {
  KnowledgeBank bank;
  CHECK(render_knowledge(bank).empty());

  bank.raw = {tagged("p1", 1, "alpha"), tagged("p1", 2, "beta")};
  CHECK(render_knowledge(bank) == "alpha\nbeta");

  bank.condensed = CondensedKnowledge{"1. Core rule.", 4, 1};
  std::string text = render_knowledge(bank);
  CHECK(text == "1. Core rule.\nalpha\nbeta");
}
