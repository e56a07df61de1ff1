#pragma once

#include <stdexcept>
#include <string>

namespace marco {

// Every failure the framework can signal. Candidate-code failures are NOT
// errors (they are ExecOutcome values); these are contract violations and
// infrastructure faults.
enum class ErrorKind {
  // domain
  IterationGap,
  // providers
  Transport,
  Auth,
  RateLimited,
  MalformedResponse,
  ScriptExhausted,
  TranscriptMismatch,
  // prompts
  HiddenLeak,
  SelfLesson,
  EmptyPath,
  EmptyBank,
  // knowledge
  EmptySummary,
  DuplicateProblem,
  // executor
  NoCodeBlock,
  SandboxError,
  DatasetDefect,
  // dsl
  ParseError,
  TypeError,
  EvalError,
  // harness
  SchemaError,
  DuplicateId,
  WrongKind,
  AlreadySplit,
  EmptyDataset,
  MismatchedRuns,
  IoError,
  Config,
};

const char* to_string(ErrorKind kind);

class MarcoError : public std::runtime_error {
 public:
  MarcoError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw MarcoError(kind, message);
}

}  // namespace marco
