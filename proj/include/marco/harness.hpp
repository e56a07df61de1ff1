#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marco/domain.hpp"
#include "marco/orchestrator.hpp"

namespace marco {

// ---------------------------------------------------------------------------
// Dataset ingestion. One JSON object per line:
//   induction:  {"id", "kind": "induction", "language", "entry"?, "pairs":
//                [{"input", "output"}, ...], "tolerance"?}
//   deduction:  {"id", "kind": "deduction", "language", "code", "input",
//                "output", "tolerance"?}
//   abduction:  same fields as deduction.
// Values are source-text expressions. Rows never carry visibility; the
// visible/hidden split happens at run time.
// ---------------------------------------------------------------------------

// Problems in file order. Raises SchemaError (with line number and field),
// DuplicateId, WrongKind (when expected_kind is given and a row differs), and
// IoError when the file cannot be read.
std::vector<Problem> load_dataset(const std::string& path,
                                  std::optional<TaskKind> expected_kind = std::nullopt);

// Serializes problems back to dataset rows (visibility flags are not
// persisted). load_dataset(write_dataset(ps)) round-trips.
void write_dataset(const std::vector<Problem>& problems, const std::string& path);

nlohmann::ordered_json problem_to_row(const Problem& problem);
Problem problem_from_row(const nlohmann::json& row, int line_number);

// Marks the first ceil(n/2) pairs visible and the rest hidden. Induction
// only (WrongKind otherwise); raises AlreadySplit when any flag is preset.
Problem split_visible(const Problem& problem);

// ---------------------------------------------------------------------------
// Scoring. All metrics read the post-loop per-pair records.
// ---------------------------------------------------------------------------

// Correct pairs over all pairs, visible and hidden alike.
double accuracy(const std::vector<ProblemResult>& results);

// A problem counts only when every one of its pairs is correct.
double problem_accuracy(const std::vector<ProblemResult>& results);

// Correct hidden pairs over hidden pairs; absent when nothing is hidden.
std::optional<double> hidden_accuracy(const std::vector<ProblemResult>& results);

struct Metrics {
  int problems = 0;
  int pairs = 0;
  int solved_visible = 0;
  double accuracy = 0.0;
  double problem_accuracy = 0.0;
  std::optional<double> hidden_accuracy;
  double first_half_accuracy = 0.0;
  // Pair accuracy over problems after the ceil(N/2) split point; absent for
  // single-problem runs.
  std::optional<double> second_half_accuracy;
  TokenUsage tokens;
};

Metrics compute_metrics(const std::vector<ProblemResult>& results);
nlohmann::ordered_json metrics_to_json(const Metrics& metrics);

// ---------------------------------------------------------------------------
// Configuration and result serialization. ordered_json keeps field order
// stable so artifact files are byte-reproducible.
// ---------------------------------------------------------------------------

nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& spec);
RunConfig load_config(const std::string& path);

nlohmann::ordered_json problem_result_to_json(const ProblemResult& result);
ProblemResult problem_result_from_json(const nlohmann::json& spec);

nlohmann::ordered_json knowledge_to_json(const KnowledgeBank& bank,
                                         const std::vector<CondensedKnowledge>& condensations);
void knowledge_from_json(const nlohmann::json& spec, KnowledgeBank* bank,
                         std::vector<CondensedKnowledge>* condensations);

// ---------------------------------------------------------------------------
// Results directory. Artifacts:
//   results.jsonl   one ProblemResult per line, append-only
//   knowledge.json  bank + condensation history, rewritten per problem
//   metrics.json    aggregate metrics, written when a run finishes
//   run_meta.json   config, seed, resume ordinal, timestamps (the only file
//                   allowed to differ between otherwise identical runs)
//   events.jsonl    run-log event stream (may carry wall times)
// ---------------------------------------------------------------------------

class FileRunSink : public RunSink {
 public:
  // resume=false truncates results.jsonl and events.jsonl; resume=true
  // appends after the already-persisted problems.
  FileRunSink(std::string results_dir, bool resume);

  void on_event(const nlohmann::json& event) override;
  void on_problem_complete(const ProblemResult& result, const KnowledgeBank& bank,
                           const std::vector<CondensedKnowledge>& condensations) override;

 private:
  std::string dir_;
  std::ofstream results_;
  std::ofstream events_;
};

// Parses results.jsonl; missing file raises IoError, an unparseable line
// SchemaError.
std::vector<ProblemResult> load_results(const std::string& results_dir);

// Restores the bank checkpoint; missing knowledge.json yields an empty bank.
void load_knowledge_file(const std::string& results_dir, KnowledgeBank* bank,
                         std::vector<CondensedKnowledge>* condensations);

// One-shot persistence of a completed in-memory run: results.jsonl,
// knowledge.json, metrics.json. Byte-identical to what the incremental sink
// plus a final metrics write produce for the same report.
void write_results(const RunReport& report, const std::string& results_dir);

void write_metrics_file(const Metrics& metrics, const std::string& results_dir);

void write_run_meta(const nlohmann::ordered_json& meta, const std::string& results_dir);
nlohmann::json load_run_meta(const std::string& results_dir);

}  // namespace marco
