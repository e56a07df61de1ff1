#include "marco/domain.hpp"

#include "marco/errors.hpp"

namespace marco {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IterationGap: return "IterationGap";
    case ErrorKind::Transport: return "Transport";
    case ErrorKind::Auth: return "Auth";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::ScriptExhausted: return "ScriptExhausted";
    case ErrorKind::TranscriptMismatch: return "TranscriptMismatch";
    case ErrorKind::HiddenLeak: return "HiddenLeak";
    case ErrorKind::SelfLesson: return "SelfLesson";
    case ErrorKind::EmptyPath: return "EmptyPath";
    case ErrorKind::EmptyBank: return "EmptyBank";
    case ErrorKind::EmptySummary: return "EmptySummary";
    case ErrorKind::DuplicateProblem: return "DuplicateProblem";
    case ErrorKind::NoCodeBlock: return "NoCodeBlock";
    case ErrorKind::SandboxError: return "SandboxError";
    case ErrorKind::DatasetDefect: return "DatasetDefect";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::EvalError: return "EvalError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::WrongKind: return "WrongKind";
    case ErrorKind::AlreadySplit: return "AlreadySplit";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::MismatchedRuns: return "MismatchedRuns";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Induction: return "induction";
    case TaskKind::Deduction: return "deduction";
    case TaskKind::Abduction: return "abduction";
  }
  return "induction";
}

TaskKind task_kind_from_string(const std::string& token) {
  if (token == "induction") return TaskKind::Induction;
  if (token == "deduction") return TaskKind::Deduction;
  if (token == "abduction") return TaskKind::Abduction;
  raise(ErrorKind::SchemaError, "unknown task kind '" + token + "'");
}

std::string to_string(CodeLanguage language) {
  switch (language) {
    case CodeLanguage::General: return "general";
    case CodeLanguage::ListDsl: return "list_dsl";
    case CodeLanguage::StringDsl: return "string_dsl";
  }
  return "general";
}

CodeLanguage code_language_from_string(const std::string& token) {
  if (token == "general") return CodeLanguage::General;
  if (token == "list_dsl") return CodeLanguage::ListDsl;
  if (token == "string_dsl") return CodeLanguage::StringDsl;
  raise(ErrorKind::SchemaError, "unknown code language '" + token + "'");
}

void RunConfig::validate() const {
  if (num_agents < 1) raise(ErrorKind::Config, "num_agents must be >= 1");
  if (max_iterations < 1) raise(ErrorKind::Config, "max_iterations must be >= 1");
  if (condense_period < 1) raise(ErrorKind::Config, "condense_period must be >= 1");
  if (limits.cpu_seconds <= 0 || limits.wall_seconds <= 0 ||
      limits.memory_bytes == 0 || limits.output_bytes == 0) {
    raise(ErrorKind::Config, "sandbox limits must be positive");
  }
  if (caps.feedback_chars == 0 || caps.lesson_chars == 0 ||
      caps.summary_chars == 0 || caps.condense_max_items < 1) {
    raise(ErrorKind::Config, "prompt caps must be positive");
  }
  if (retry.max_attempts < 1) raise(ErrorKind::Config, "retry.max_attempts must be >= 1");
  if (!agents.empty() && static_cast<int>(agents.size()) != num_agents) {
    raise(ErrorKind::Config, "agents list must match num_agents");
  }
}

ReasoningPath path_append(const ReasoningPath& path, Solution solution,
                          Feedback feedback) {
  const int expected = path.last_iteration() + 1;
  if (solution.iteration != expected) {
    raise(ErrorKind::IterationGap,
          "expected iteration " + std::to_string(expected) + ", got " +
              std::to_string(solution.iteration));
  }
  ReasoningPath out = path;
  out.entries.push_back(PathEntry{std::move(solution), std::move(feedback)});
  return out;
}

std::string render_knowledge(const KnowledgeBank& bank) {
  std::string out;
  if (bank.condensed.has_value()) out = bank.condensed->text;
  for (const Summary& summary : bank.raw) {
    if (!out.empty()) out += '\n';
    out += summary.text;
  }
  return out;
}

}  // namespace marco
