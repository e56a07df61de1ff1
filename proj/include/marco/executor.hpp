#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marco/domain.hpp"

namespace marco {

// Terminal state of one sandboxed evaluation. Candidate failures are
// outcomes; SandboxError (child could not be run at all) is raised as an
// exception by the executor instead of being returned.
enum class ExecStatus { Value, Exception, Timeout, ResourceKilled, SandboxError };

std::string to_string(ExecStatus status);

struct ExecOutcome {
  ExecStatus status = ExecStatus::SandboxError;
  std::string value_repr;   // status == Value
  std::string error_class;  // status == Exception
  std::string message;
  double cpu_seconds = 0.0;
  double wall_seconds = 0.0;
};

// Contents of the LAST fenced code block of a model response; throws
// NoCodeBlock when the text has no complete ``` fence pair.
std::string extract_code(const std::string& raw_text);

// Runs untrusted candidate code and grounds pass/fail checks. General-language
// candidates run in a separate interpreter process under cpu/wall/memory/
// output limits, cut off from the network, in a throwaway working directory.
// DSL candidates are evaluated in-process. All methods are const and safe to
// call from several threads at once; each call owns its child process.
class Executor {
 public:
  explicit Executor(SandboxLimits limits, std::string interpreter = "python3");

  // Evaluates `code` then `call_expr` and reports the printed result or the
  // failure. `entry` names the function the candidate is expected to define;
  // when the code defines exactly one function under a different name it is
  // aliased to `entry`.
  ExecOutcome run_candidate(const std::string& code, const std::string& call_expr,
                            CodeLanguage language, const std::string& entry = "f") const;

  // Structural equality of two value expressions, decided inside the sandbox
  // for the general language. An expression that fails to evaluate makes the
  // comparison false; the reason is stored in *reason when provided.
  bool values_equal(const std::string& a_expr, const std::string& b_expr,
                    CodeLanguage language, std::optional<double> tolerance = std::nullopt,
                    std::string* reason = nullptr) const;

  // Runs entry(input) against every pair in order, no early exit. Candidate
  // exceptions, timeouts, and wrong values all surface as failed records; a
  // pair whose expected output cannot be evaluated is a DatasetDefect.
  std::vector<CheckRecord> check_induction(const std::string& code,
                                           const std::vector<IOPair>& pairs,
                                           CodeLanguage language,
                                           const std::string& entry = "f",
                                           std::optional<double> tolerance = std::nullopt) const;

  // Computes f(input) as ground truth and compares the agent's predicted
  // output against it. The ground-truth value never leaves the sandbox. A
  // function that fails on its own dataset input is a DatasetDefect.
  bool check_deduction(const std::string& predicted_output,
                       const std::string& function_source, const std::string& input_expr,
                       CodeLanguage language,
                       std::optional<double> tolerance = std::nullopt) const;

  // Runs f(predicted_input) and compares with the expected output; any
  // preimage passes. Failures on the predicted input count as fail.
  bool check_abduction(const std::string& predicted_input,
                       const std::string& function_source,
                       const std::string& expected_output, CodeLanguage language,
                       std::optional<double> tolerance = std::nullopt) const;

  const SandboxLimits& limits() const { return limits_; }

 private:
  SandboxLimits limits_;
  std::string interpreter_;
};

// Renders check records into the feedback text agents see. Per-iteration
// feedback lists each check as pass/fail with truncated error detail;
// end-of-problem feedback is one of three fixed sentences.
Feedback make_feedback(const std::vector<CheckRecord>& records, FeedbackKind kind,
                       const PromptCaps& caps);

}  // namespace marco
