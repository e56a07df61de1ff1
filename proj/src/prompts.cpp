#include "marco/prompts.hpp"

#include "marco/errors.hpp"
#include "marco/util.hpp"

namespace marco {

namespace {

using namespace prompt_markers;

std::string language_name(CodeLanguage language) {
  switch (language) {
    case CodeLanguage::General: return "Python";
    case CodeLanguage::ListDsl: return "the list-pipeline language";
    case CodeLanguage::StringDsl: return "the string-transformation language";
  }
  return "Python";
}

std::string grammar_note(CodeLanguage language) {
  switch (language) {
    case CodeLanguage::General:
      return "";
    case CodeLanguage::ListDsl:
      return "A program is stages joined by ' | ', applied left to right to an integer list. "
             "Stages: Head, Last, Reverse, Sort, Sum, Minimum, Maximum, Take(n), Drop(n), "
             "Access(n), Map(fn) with fn in {+1, -1, *2, *3, /2, /3, *(-1), ^2}, Filter(p) and "
             "Count(p) with p in {>0, <0, even, odd}, ZipWith(op) and Scanl1(op) with op in "
             "{+, -, *, min, max}. Division rounds toward negative infinity. ZipWith combines "
             "the current list with the original input list.";
    case CodeLanguage::StringDsl:
      return "A program is Concat(e1, ..., ek) or a single expression; each expression maps the "
             "input string to a fragment. Expressions: ConstStr(\"s\"), SubStr(i, j) (1-based "
             "inclusive, negative indices from the end), GetToken(class, k) with class in "
             "{word, digits, alnum}, ToUpper(e), ToLower(e), Trim(e), Replace(\"a\", \"b\"), "
             "GetFirstChar, GetFrom(\"c\"), GetUpto(\"c\").";
  }
  return "";
}

std::string system_text(const Problem& problem, TaskKind kind) {
  std::string grammar = grammar_note(problem.language);
  switch (kind) {
    case TaskKind::Induction: {
      std::string text = "You are solving a program induction task. Study the examples and write ";
      if (problem.language == CodeLanguage::General) {
        text += "a " + language_name(problem.language) + " function named `" + problem.entry +
                "` that maps every example input to its output.";
      } else {
        text += "a program in ";
        text += language_name(problem.language);
        text += " that maps every example input to its output.";
      }
      if (!grammar.empty()) text += " " + grammar;
      text += " Reply with the complete solution in a single fenced code block.";
      return text;
    }
    case TaskKind::Deduction: {
      std::string text =
          "You are given a function and an input. Determine the exact value the function "
          "returns for that input.";
      if (!grammar.empty()) text += " " + grammar;
      text += " Reply with only that value as a single expression in one fenced code block.";
      return text;
    }
    case TaskKind::Abduction: {
      std::string text =
          "You are given a function and its output. Find any input value for which the "
          "function produces that output.";
      if (!grammar.empty()) text += " " + grammar;
      text += " Reply with only that input value as a single expression in one fenced code "
              "block.";
      return text;
    }
  }
  return "";
}

std::string pair_block(const IOPair& pair) {
  return "  Input: " + pair.input + "\n  Output: " + pair.output;
}

std::string knowledge_section(const std::string& knowledge_text) {
  if (knowledge_text.empty()) return "";
  std::string out;
  out += kKnowledgeBegin;
  out += "\n";
  out += knowledge_text;
  out += "\n";
  out += kKnowledgeEnd;
  return out;
}

std::string lesson_section(const std::vector<Lesson>& lessons, const PromptCaps& caps) {
  if (lessons.empty()) return "";
  std::string out;
  out += kLessonsBegin;
  out += "\n";
  for (const Lesson& lesson : lessons) {
    out += std::string(kLessonHeader) + std::to_string(lesson.from_agent) + " (iteration " +
           std::to_string(lesson.iteration) + ") ---\n";
    out += "Proposed code:\n";
    out += lesson.code_core.empty() ? "(no runnable code produced)"
                                    : util::truncate_within(lesson.code_core, caps.lesson_chars);
    out += "\nVerdict:\n";
    out += lesson.feedback.rendered;
    out += "\n";
  }
  out += kLessonsEnd;
  return out;
}

}  // namespace

std::string render_problem(const Problem& problem) {
  std::string out = "Problem: " + problem.id + "\n";
  switch (problem.kind) {
    case TaskKind::Induction: {
      int shown = 0;
      for (const IOPair& pair : problem.pairs) {
        if (!pair.visible) continue;
        out += "Example " + std::to_string(++shown) + ":\n" + pair_block(pair) + "\n";
      }
      if (shown == 0) {
        raise(ErrorKind::Config, "induction problem '" + problem.id + "' has no visible pairs");
      }
      break;
    }
    case TaskKind::Deduction:
      if (!problem.function_source) {
        raise(ErrorKind::Config, "deduction problem '" + problem.id + "' lacks a function");
      }
      out += "Function:\n" + *problem.function_source + "\n";
      out += "Input: " + problem.pairs.at(0).input + "\n";
      break;
    case TaskKind::Abduction:
      if (!problem.function_source) {
        raise(ErrorKind::Config, "abduction problem '" + problem.id + "' lacks a function");
      }
      out += "Function:\n" + *problem.function_source + "\n";
      out += "Output: " + problem.pairs.at(0).output + "\n";
      break;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

void assert_prompt_hides(const std::vector<ChatMessage>& messages, const Problem& problem) {
  std::string all;
  for (const ChatMessage& message : messages) {
    all += message.content;
    all += '\n';
  }
  switch (problem.kind) {
    case TaskKind::Induction:
      for (const IOPair& hidden : problem.pairs) {
        if (hidden.visible) continue;
        std::string block = pair_block(hidden);
        if (!util::contains(all, block)) continue;
        bool shadowed = false;
        for (const IOPair& visible : problem.pairs) {
          if (visible.visible && pair_block(visible) == block) shadowed = true;
        }
        if (!shadowed) {
          raise(ErrorKind::HiddenLeak,
                "hidden pair of '" + problem.id + "' appears in a prompt");
        }
      }
      break;
    case TaskKind::Deduction:
      if (util::contains(all, "Output: " + problem.pairs.at(0).output)) {
        raise(ErrorKind::HiddenLeak,
              "ground-truth output of '" + problem.id + "' appears in a prompt");
      }
      break;
    case TaskKind::Abduction:
      if (util::contains(all, "Input: " + problem.pairs.at(0).input)) {
        raise(ErrorKind::HiddenLeak,
              "ground-truth input of '" + problem.id + "' appears in a prompt");
      }
      break;
  }
}

std::vector<ChatMessage> build_initial_prompt(const Problem& problem,
                                              const std::string& knowledge_text, TaskKind kind) {
  std::string user = render_problem(problem);
  std::string knowledge = knowledge_section(knowledge_text);
  if (!knowledge.empty()) {
    user += "\n\n" + knowledge;
  }
  std::vector<ChatMessage> messages = {{Role::System, system_text(problem, kind)},
                                       {Role::User, user}};
  assert_prompt_hides(messages, problem);
  return messages;
}

std::vector<ChatMessage> build_revision_prompt(const Problem& problem, const ReasoningPath& path,
                                               const std::vector<Lesson>& lessons,
                                               const std::string& knowledge_text,
                                               const PromptCaps& caps) {
  if (path.empty()) {
    raise(ErrorKind::EmptyPath, "revision prompt needs at least one prior attempt");
  }
  for (const Lesson& lesson : lessons) {
    if (lesson.from_agent == path.agent_index) {
      raise(ErrorKind::SelfLesson, "agent " + std::to_string(path.agent_index) +
                                       " offered its own proposal as a lesson");
    }
  }

  std::vector<ChatMessage> messages = {{Role::System, system_text(problem, problem.kind)},
                                       {Role::User, render_problem(problem)}};
  for (std::size_t i = 0; i + 1 < path.entries.size(); ++i) {
    messages.push_back({Role::Assistant, path.entries[i].solution.raw_text});
    messages.push_back({Role::User, path.entries[i].feedback.rendered});
  }
  messages.push_back({Role::Assistant, path.entries.back().solution.raw_text});

  std::string closing = path.entries.back().feedback.rendered;
  std::string lessons_text = lesson_section(lessons, caps);
  if (!lessons_text.empty()) closing += "\n\n" + lessons_text;
  std::string knowledge = knowledge_section(knowledge_text);
  if (!knowledge.empty()) closing += "\n\n" + knowledge;
  closing += "\n\nPropose a corrected solution. Reply with it in a single fenced code block.";
  messages.push_back({Role::User, closing});

  assert_prompt_hides(messages, problem);
  return messages;
}

std::vector<ChatMessage> build_summarize_prompt(const ReasoningPath& path,
                                                const Feedback& final_feedback) {
  if (path.empty()) {
    raise(ErrorKind::EmptyPath, "summaries require at least one attempt");
  }
  if (final_feedback.kind != FeedbackKind::FinalBinary) {
    raise(ErrorKind::Config, "summarize expects the end-of-problem binary feedback");
  }

  std::string user = "Your attempts on this problem:\n";
  for (const PathEntry& entry : path.entries) {
    user += "--- Attempt " + std::to_string(entry.solution.iteration) + " ---\n";
    user += entry.solution.core.empty() ? "(no runnable code produced)" : entry.solution.core;
    user += "\nFeedback:\n" + entry.feedback.rendered + "\n";
  }
  user += "Final verdict: " + final_feedback.rendered + "\n\n";
  user += std::string(kSummarizeTask) +
          " that would help on future problems of this kind. It must be general: do not mention "
          "this specific problem, its values, or its id. Reply with one short paragraph.";

  return {{Role::System,
           "You review one finished problem-solving session and produce reusable guidance for "
           "future sessions."},
          {Role::User, user}};
}

std::vector<ChatMessage> build_condense_prompt(const KnowledgeBank& bank, int max_items) {
  if (!bank.condensed && bank.raw.empty()) {
    raise(ErrorKind::EmptyBank, "nothing to condense");
  }

  std::string user;
  if (bank.condensed) {
    user += "Existing condensed guidance (version " + std::to_string(bank.condensed->version) +
            "):\n" + bank.condensed->text + "\n\n";
  }
  if (!bank.raw.empty()) {
    user += "New takeaways:\n";
    for (const Summary& summary : bank.raw) {
      user += "- " + summary.text + "\n";
    }
    user += "\n";
  }
  user += std::string(kCondenseTask) + " into at most " + std::to_string(max_items) +
          " numbered, general sentences. Merge duplicates. Do not reference specific problems "
          "or ids.";

  return {{Role::System,
           "You maintain a compact bank of problem-solving guidance distilled from many past "
           "problems."},
          {Role::User, user}};
}

}  // namespace marco
