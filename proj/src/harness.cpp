#include "marco/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "marco/errors.hpp"

namespace marco {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void schema_fail(int line_number, const std::string& detail) {
  raise(ErrorKind::SchemaError, "line " + std::to_string(line_number) + ": " + detail);
}

std::string require_string(const nlohmann::json& row, const char* field, int line_number,
                           bool allow_empty = false) {
  if (!row.contains(field)) schema_fail(line_number, std::string("missing field '") + field + "'");
  const nlohmann::json& value = row.at(field);
  if (!value.is_string()) schema_fail(line_number, std::string("field '") + field + "' must be a string");
  std::string text = value.get<std::string>();
  if (text.empty() && !allow_empty) {
    schema_fail(line_number, std::string("field '") + field + "' must not be empty");
  }
  return text;
}

void reject_unknown_fields(const nlohmann::json& row, const std::set<std::string>& allowed,
                           int line_number) {
  for (const auto& item : row.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      schema_fail(line_number, "unexpected field '" + item.key() + "'");
    }
  }
}

std::string feedback_kind_token(FeedbackKind kind) {
  return kind == FeedbackKind::PerIteration ? "per_iteration" : "final_binary";
}

FeedbackKind feedback_kind_from_token(const std::string& token) {
  if (token == "per_iteration") return FeedbackKind::PerIteration;
  if (token == "final_binary") return FeedbackKind::FinalBinary;
  raise(ErrorKind::SchemaError, "unknown feedback kind '" + token + "'");
}

ordered_json feedback_to_json(const Feedback& feedback) {
  ordered_json detail = ordered_json::array();
  for (const CheckRecord& record : feedback.detail) {
    detail.push_back({{"index", record.index},
                      {"passed", record.passed},
                      {"error_class", record.error_class},
                      {"message", record.message}});
  }
  return {{"kind", feedback_kind_token(feedback.kind)},
          {"passed", feedback.passed},
          {"rendered", feedback.rendered},
          {"detail", std::move(detail)}};
}

Feedback feedback_from_json(const nlohmann::json& spec) {
  Feedback feedback;
  feedback.kind = feedback_kind_from_token(spec.at("kind").get<std::string>());
  feedback.passed = spec.at("passed").get<bool>();
  feedback.rendered = spec.at("rendered").get<std::string>();
  for (const nlohmann::json& item : spec.at("detail")) {
    CheckRecord record;
    record.index = item.at("index").get<int>();
    record.passed = item.at("passed").get<bool>();
    record.error_class = item.at("error_class").get<std::string>();
    record.message = item.at("message").get<std::string>();
    feedback.detail.push_back(std::move(record));
  }
  return feedback;
}

ordered_json solution_to_json(const Solution& solution) {
  return {{"agent_index", solution.agent_index},
          {"iteration", solution.iteration},
          {"raw_text", solution.raw_text},
          {"core", solution.core}};
}

Solution solution_from_json(const nlohmann::json& spec) {
  Solution solution;
  solution.agent_index = spec.at("agent_index").get<int>();
  solution.iteration = spec.at("iteration").get<int>();
  solution.raw_text = spec.at("raw_text").get<std::string>();
  solution.core = spec.at("core").get<std::string>();
  return solution;
}

ordered_json limits_to_json(const SandboxLimits& limits) {
  return {{"cpu_seconds", limits.cpu_seconds},
          {"wall_seconds", limits.wall_seconds},
          {"memory_bytes", limits.memory_bytes},
          {"output_bytes", limits.output_bytes}};
}

ordered_json caps_to_json(const PromptCaps& caps) {
  return {{"feedback_chars", caps.feedback_chars},
          {"lesson_chars", caps.lesson_chars},
          {"summary_chars", caps.summary_chars},
          {"condense_max_items", caps.condense_max_items}};
}

ordered_json retry_to_json(const RetryPolicy& retry) {
  return {{"max_attempts", retry.max_attempts},
          {"base_delay_seconds", retry.base_delay_seconds},
          {"max_delay_seconds", retry.max_delay_seconds}};
}

ordered_json agent_to_json(const AgentConfig& agent) {
  ordered_json out = {{"kind", agent.kind},
                      {"model", agent.model},
                      {"base_url", agent.base_url},
                      {"api_key_env", agent.api_key_env},
                      {"temperature", agent.temperature},
                      {"max_tokens", agent.max_tokens},
                      {"depth", agent.depth}};
  if (!agent.script.is_null()) out["script"] = agent.script;
  return out;
}

template <typename T>
void read_if_present(const nlohmann::json& obj, const char* key, T* out) {
  if (obj.contains(key)) *out = obj.at(key).get<T>();
}

AgentConfig agent_from_json(const nlohmann::json& spec) {
  static const std::set<std::string> allowed = {"kind",        "model", "base_url",
                                                "api_key_env", "temperature",
                                                "max_tokens",  "depth", "script"};
  for (const auto& item : spec.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      raise(ErrorKind::Config, "unknown agent config field '" + item.key() + "'");
    }
  }
  AgentConfig agent;
  read_if_present(spec, "kind", &agent.kind);
  read_if_present(spec, "model", &agent.model);
  read_if_present(spec, "base_url", &agent.base_url);
  read_if_present(spec, "api_key_env", &agent.api_key_env);
  read_if_present(spec, "temperature", &agent.temperature);
  read_if_present(spec, "max_tokens", &agent.max_tokens);
  read_if_present(spec, "depth", &agent.depth);
  if (spec.contains("script")) agent.script = spec.at("script");
  return agent;
}

ordered_json condensed_to_json(const CondensedKnowledge& condensed) {
  return {{"text", condensed.text},
          {"covering_problems", condensed.covering_problems},
          {"version", condensed.version}};
}

CondensedKnowledge condensed_from_json(const nlohmann::json& spec) {
  CondensedKnowledge condensed;
  condensed.text = spec.at("text").get<std::string>();
  condensed.covering_problems = spec.at("covering_problems").get<int>();
  condensed.version = spec.at("version").get<int>();
  return condensed;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) raise(ErrorKind::IoError, "cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) raise(ErrorKind::IoError, "short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    raise(ErrorKind::IoError, "cannot replace " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

double pair_accuracy_over(const std::vector<ProblemResult>& results, std::size_t lo,
                          std::size_t hi) {
  long long passed = 0;
  long long total = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    for (const PairScore& score : results[i].scored) {
      ++total;
      if (score.passed) ++passed;
    }
  }
  if (total == 0) raise(ErrorKind::EmptyDataset, "no scored pairs");
  return static_cast<double>(passed) / static_cast<double>(total);
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Problem problem_from_row(const nlohmann::json& row, int line_number) {
  if (!row.is_object()) schema_fail(line_number, "row must be a JSON object");

  Problem problem;
  problem.id = require_string(row, "id", line_number);

  const std::string kind = require_string(row, "kind", line_number);
  if (kind == "induction") {
    problem.kind = TaskKind::Induction;
  } else if (kind == "deduction") {
    problem.kind = TaskKind::Deduction;
  } else if (kind == "abduction") {
    problem.kind = TaskKind::Abduction;
  } else {
    schema_fail(line_number, "unknown kind '" + kind + "'");
  }

  const std::string language = require_string(row, "language", line_number);
  if (language == "general") {
    problem.language = CodeLanguage::General;
  } else if (language == "list_dsl") {
    problem.language = CodeLanguage::ListDsl;
  } else if (language == "string_dsl") {
    problem.language = CodeLanguage::StringDsl;
  } else {
    schema_fail(line_number, "unknown language '" + language + "'");
  }

  if (row.contains("tolerance")) {
    if (!row.at("tolerance").is_number()) {
      schema_fail(line_number, "field 'tolerance' must be a number");
    }
    double tolerance = row.at("tolerance").get<double>();
    if (tolerance < 0) schema_fail(line_number, "field 'tolerance' must be non-negative");
    problem.tolerance = tolerance;
  }

  if (problem.kind == TaskKind::Induction) {
    reject_unknown_fields(row, {"id", "kind", "language", "entry", "pairs", "tolerance"},
                          line_number);
    if (row.contains("entry")) problem.entry = require_string(row, "entry", line_number);
    if (!row.contains("pairs")) schema_fail(line_number, "missing field 'pairs'");
    const nlohmann::json& pairs = row.at("pairs");
    if (!pairs.is_array()) schema_fail(line_number, "field 'pairs' must be an array");
    if (pairs.size() < 2) schema_fail(line_number, "induction rows need at least 2 pairs");
    for (const nlohmann::json& item : pairs) {
      if (!item.is_object()) schema_fail(line_number, "each pair must be an object");
      reject_unknown_fields(item, {"input", "output"}, line_number);
      IOPair pair;
      pair.input = require_string(item, "input", line_number, true);
      pair.output = require_string(item, "output", line_number, true);
      problem.pairs.push_back(std::move(pair));
    }
  } else {
    reject_unknown_fields(row, {"id", "kind", "language", "code", "input", "output", "tolerance"},
                          line_number);
    problem.function_source = require_string(row, "code", line_number);
    IOPair pair;
    pair.input = require_string(row, "input", line_number, true);
    pair.output = require_string(row, "output", line_number, true);
    problem.pairs.push_back(std::move(pair));
  }
  return problem;
}

std::vector<Problem> load_dataset(const std::string& path,
                                  std::optional<TaskKind> expected_kind) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read dataset " + path);

  std::vector<Problem> problems;
  std::set<std::string> seen_ids;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) continue;

    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      schema_fail(line_number, std::string("invalid JSON: ") + e.what());
    }
    Problem problem = problem_from_row(row, line_number);
    if (!seen_ids.insert(problem.id).second) {
      raise(ErrorKind::DuplicateId,
            "line " + std::to_string(line_number) + ": duplicate id '" + problem.id + "'");
    }
    if (expected_kind && problem.kind != *expected_kind) {
      raise(ErrorKind::WrongKind, "line " + std::to_string(line_number) + ": expected " +
                                      to_string(*expected_kind) + ", got " +
                                      to_string(problem.kind));
    }
    problems.push_back(std::move(problem));
  }
  if (problems.empty()) raise(ErrorKind::EmptyDataset, "dataset " + path + " has no rows");
  return problems;
}

nlohmann::ordered_json problem_to_row(const Problem& problem) {
  ordered_json row;
  row["id"] = problem.id;
  row["kind"] = to_string(problem.kind);
  row["language"] = to_string(problem.language);
  if (problem.kind == TaskKind::Induction) {
    row["entry"] = problem.entry;
    ordered_json pairs = ordered_json::array();
    for (const IOPair& pair : problem.pairs) {
      pairs.push_back({{"input", pair.input}, {"output", pair.output}});
    }
    row["pairs"] = std::move(pairs);
  } else {
    row["code"] = problem.function_source.value_or("");
    row["input"] = problem.pairs.at(0).input;
    row["output"] = problem.pairs.at(0).output;
  }
  if (problem.tolerance) row["tolerance"] = *problem.tolerance;
  return row;
}

void write_dataset(const std::vector<Problem>& problems, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot write dataset " + path);
  for (const Problem& problem : problems) {
    out << problem_to_row(problem).dump() << '\n';
  }
  out.flush();
  if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

Problem split_visible(const Problem& problem) {
  if (problem.kind != TaskKind::Induction) {
    raise(ErrorKind::WrongKind, "split_visible expects an induction problem");
  }
  if (problem.pairs.size() < 2) {
    raise(ErrorKind::Config, "problem '" + problem.id + "' has fewer than 2 pairs");
  }
  for (const IOPair& pair : problem.pairs) {
    if (pair.visible) {
      raise(ErrorKind::AlreadySplit, "problem '" + problem.id + "' is already split");
    }
  }
  Problem split = problem;
  const std::size_t visible_count = (split.pairs.size() + 1) / 2;
  for (std::size_t i = 0; i < split.pairs.size(); ++i) {
    split.pairs[i].visible = i < visible_count;
  }
  return split;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double accuracy(const std::vector<ProblemResult>& results) {
  if (results.empty()) raise(ErrorKind::EmptyDataset, "no results to score");
  return pair_accuracy_over(results, 0, results.size());
}

double problem_accuracy(const std::vector<ProblemResult>& results) {
  if (results.empty()) raise(ErrorKind::EmptyDataset, "no results to score");
  long long solved = 0;
  for (const ProblemResult& result : results) {
    bool all = !result.scored.empty();
    for (const PairScore& score : result.scored) {
      if (!score.passed) all = false;
    }
    if (all) ++solved;
  }
  return static_cast<double>(solved) / static_cast<double>(results.size());
}

std::optional<double> hidden_accuracy(const std::vector<ProblemResult>& results) {
  if (results.empty()) raise(ErrorKind::EmptyDataset, "no results to score");
  long long passed = 0;
  long long total = 0;
  for (const ProblemResult& result : results) {
    for (const PairScore& score : result.scored) {
      if (score.visible) continue;
      ++total;
      if (score.passed) ++passed;
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(passed) / static_cast<double>(total);
}

Metrics compute_metrics(const std::vector<ProblemResult>& results) {
  Metrics metrics;
  metrics.problems = static_cast<int>(results.size());
  for (const ProblemResult& result : results) {
    metrics.pairs += static_cast<int>(result.scored.size());
    if (result.solved_visible) ++metrics.solved_visible;
    metrics.tokens += result.tokens;
  }
  metrics.accuracy = accuracy(results);
  metrics.problem_accuracy = problem_accuracy(results);
  metrics.hidden_accuracy = hidden_accuracy(results);
  const std::size_t n = results.size();
  const std::size_t mid = (n + 1) / 2;
  metrics.first_half_accuracy = pair_accuracy_over(results, 0, mid);
  if (mid < n) metrics.second_half_accuracy = pair_accuracy_over(results, mid, n);
  return metrics;
}

nlohmann::ordered_json metrics_to_json(const Metrics& metrics) {
  ordered_json out;
  out["problems"] = metrics.problems;
  out["pairs"] = metrics.pairs;
  out["solved_visible"] = metrics.solved_visible;
  out["accuracy"] = metrics.accuracy;
  out["problem_accuracy"] = metrics.problem_accuracy;
  out["hidden_accuracy"] =
      metrics.hidden_accuracy ? ordered_json(*metrics.hidden_accuracy) : ordered_json(nullptr);
  out["first_half_accuracy"] = metrics.first_half_accuracy;
  out["second_half_accuracy"] = metrics.second_half_accuracy
                                    ? ordered_json(*metrics.second_half_accuracy)
                                    : ordered_json(nullptr);
  out["prompt_tokens"] = metrics.tokens.prompt_tokens;
  out["completion_tokens"] = metrics.tokens.completion_tokens;
  return out;
}

// ---------------------------------------------------------------------------
// Config serialization
// ---------------------------------------------------------------------------

nlohmann::ordered_json config_to_json(const RunConfig& config) {
  ordered_json out;
  out["num_agents"] = config.num_agents;
  out["max_iterations"] = config.max_iterations;
  out["condense_period"] = config.condense_period;
  out["static_mode"] = config.static_mode;
  out["seed"] = config.seed;
  ordered_json agents = ordered_json::array();
  for (const AgentConfig& agent : config.agents) agents.push_back(agent_to_json(agent));
  out["agents"] = std::move(agents);
  out["condenser"] = agent_to_json(config.condenser);
  out["limits"] = limits_to_json(config.limits);
  out["caps"] = caps_to_json(config.caps);
  out["retry"] = retry_to_json(config.retry);
  out["request_timeout_seconds"] = config.request_timeout_seconds;
  out["reflection_temperature"] = config.reflection_temperature;
  out["enum_node_budget"] = config.enum_node_budget;
  if (config.stop_after) out["stop_after"] = *config.stop_after;
  return out;
}

RunConfig config_from_json(const nlohmann::json& spec) {
  static const std::set<std::string> allowed = {
      "num_agents",      "max_iterations",          "condense_period",
      "static_mode",     "seed",                    "agents",
      "condenser",       "limits",                  "caps",
      "retry",           "request_timeout_seconds", "reflection_temperature",
      "enum_node_budget", "stop_after"};
  if (!spec.is_object()) raise(ErrorKind::Config, "config must be a JSON object");
  for (const auto& item : spec.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      raise(ErrorKind::Config, "unknown config field '" + item.key() + "'");
    }
  }

  RunConfig config;
  try {
    read_if_present(spec, "num_agents", &config.num_agents);
    read_if_present(spec, "max_iterations", &config.max_iterations);
    read_if_present(spec, "condense_period", &config.condense_period);
    read_if_present(spec, "static_mode", &config.static_mode);
    read_if_present(spec, "seed", &config.seed);
    if (spec.contains("agents")) {
      for (const nlohmann::json& agent : spec.at("agents")) {
        config.agents.push_back(agent_from_json(agent));
      }
    }
    if (spec.contains("condenser")) config.condenser = agent_from_json(spec.at("condenser"));
    if (spec.contains("limits")) {
      const nlohmann::json& limits = spec.at("limits");
      read_if_present(limits, "cpu_seconds", &config.limits.cpu_seconds);
      read_if_present(limits, "wall_seconds", &config.limits.wall_seconds);
      read_if_present(limits, "memory_bytes", &config.limits.memory_bytes);
      read_if_present(limits, "output_bytes", &config.limits.output_bytes);
    }
    if (spec.contains("caps")) {
      const nlohmann::json& caps = spec.at("caps");
      read_if_present(caps, "feedback_chars", &config.caps.feedback_chars);
      read_if_present(caps, "lesson_chars", &config.caps.lesson_chars);
      read_if_present(caps, "summary_chars", &config.caps.summary_chars);
      read_if_present(caps, "condense_max_items", &config.caps.condense_max_items);
    }
    if (spec.contains("retry")) {
      const nlohmann::json& retry = spec.at("retry");
      read_if_present(retry, "max_attempts", &config.retry.max_attempts);
      read_if_present(retry, "base_delay_seconds", &config.retry.base_delay_seconds);
      read_if_present(retry, "max_delay_seconds", &config.retry.max_delay_seconds);
    }
    read_if_present(spec, "request_timeout_seconds", &config.request_timeout_seconds);
    read_if_present(spec, "reflection_temperature", &config.reflection_temperature);
    read_if_present(spec, "enum_node_budget", &config.enum_node_budget);
    if (spec.contains("stop_after")) config.stop_after = spec.at("stop_after").get<int>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Config, std::string("bad config value: ") + e.what());
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Config, "config " + path + " is not valid JSON: " + e.what());
  }
  RunConfig config = config_from_json(spec);
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Result serialization
// ---------------------------------------------------------------------------

nlohmann::ordered_json problem_result_to_json(const ProblemResult& result) {
  ordered_json out;
  out["problem_id"] = result.problem_id;
  out["solved_visible"] = result.solved_visible;
  out["iterations_used"] = result.iterations_used;
  if (!result.error.empty()) out["error"] = result.error;
  if (result.selected) {
    out["selected"] = solution_to_json(result.selected->second);
  } else {
    out["selected"] = nullptr;
  }
  ordered_json paths = ordered_json::array();
  for (const ReasoningPath& path : result.paths) {
    ordered_json entries = ordered_json::array();
    for (const PathEntry& entry : path.entries) {
      ordered_json item = solution_to_json(entry.solution);
      item.erase("agent_index");
      item["feedback"] = feedback_to_json(entry.feedback);
      entries.push_back(std::move(item));
    }
    paths.push_back({{"agent_index", path.agent_index}, {"entries", std::move(entries)}});
  }
  out["paths"] = std::move(paths);
  ordered_json finals = ordered_json::array();
  for (const Feedback& feedback : result.final_feedback) {
    finals.push_back(feedback_to_json(feedback));
  }
  out["final_feedback"] = std::move(finals);
  ordered_json scored = ordered_json::array();
  for (const PairScore& score : result.scored) {
    scored.push_back({{"index", score.index},
                      {"visible", score.visible},
                      {"passed", score.passed},
                      {"error_class", score.error_class}});
  }
  out["scored"] = std::move(scored);
  out["tokens"] = {{"prompt_tokens", result.tokens.prompt_tokens},
                   {"completion_tokens", result.tokens.completion_tokens}};
  return out;
}

ProblemResult problem_result_from_json(const nlohmann::json& spec) {
  ProblemResult result;
  try {
    result.problem_id = spec.at("problem_id").get<std::string>();
    result.solved_visible = spec.at("solved_visible").get<bool>();
    result.iterations_used = spec.at("iterations_used").get<int>();
    if (spec.contains("error")) result.error = spec.at("error").get<std::string>();
    if (!spec.at("selected").is_null()) {
      Solution solution = solution_from_json(spec.at("selected"));
      result.selected = std::make_pair(solution.agent_index, std::move(solution));
    }
    for (const nlohmann::json& path_spec : spec.at("paths")) {
      ReasoningPath path;
      path.problem_id = result.problem_id;
      path.agent_index = path_spec.at("agent_index").get<int>();
      for (const nlohmann::json& entry_spec : path_spec.at("entries")) {
        PathEntry entry;
        entry.solution.agent_index = path.agent_index;
        entry.solution.iteration = entry_spec.at("iteration").get<int>();
        entry.solution.raw_text = entry_spec.at("raw_text").get<std::string>();
        entry.solution.core = entry_spec.at("core").get<std::string>();
        entry.feedback = feedback_from_json(entry_spec.at("feedback"));
        path.entries.push_back(std::move(entry));
      }
      result.paths.push_back(std::move(path));
    }
    for (const nlohmann::json& feedback_spec : spec.at("final_feedback")) {
      result.final_feedback.push_back(feedback_from_json(feedback_spec));
    }
    for (const nlohmann::json& score_spec : spec.at("scored")) {
      PairScore score;
      score.index = score_spec.at("index").get<int>();
      score.visible = score_spec.at("visible").get<bool>();
      score.passed = score_spec.at("passed").get<bool>();
      score.error_class = score_spec.at("error_class").get<std::string>();
      result.scored.push_back(std::move(score));
    }
    result.tokens.prompt_tokens = spec.at("tokens").at("prompt_tokens").get<long long>();
    result.tokens.completion_tokens = spec.at("tokens").at("completion_tokens").get<long long>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::SchemaError, std::string("bad result record: ") + e.what());
  }
  return result;
}

nlohmann::ordered_json knowledge_to_json(const KnowledgeBank& bank,
                                         const std::vector<CondensedKnowledge>& condensations) {
  ordered_json bank_json;
  bank_json["condensed"] =
      bank.condensed ? condensed_to_json(*bank.condensed) : ordered_json(nullptr);
  ordered_json raw = ordered_json::array();
  for (const Summary& summary : bank.raw) {
    raw.push_back({{"problem_id", summary.problem_id},
                   {"agent_index", summary.agent_index},
                   {"text", summary.text}});
  }
  bank_json["raw"] = std::move(raw);
  bank_json["problems_seen"] = bank.problems_seen;

  ordered_json history = ordered_json::array();
  for (const CondensedKnowledge& condensed : condensations) {
    history.push_back(condensed_to_json(condensed));
  }
  return {{"bank", std::move(bank_json)}, {"condensations", std::move(history)}};
}

void knowledge_from_json(const nlohmann::json& spec, KnowledgeBank* bank,
                         std::vector<CondensedKnowledge>* condensations) {
  try {
    const nlohmann::json& bank_spec = spec.at("bank");
    bank->condensed.reset();
    if (!bank_spec.at("condensed").is_null()) {
      bank->condensed = condensed_from_json(bank_spec.at("condensed"));
    }
    bank->raw.clear();
    for (const nlohmann::json& item : bank_spec.at("raw")) {
      Summary summary;
      summary.problem_id = item.at("problem_id").get<std::string>();
      summary.agent_index = item.at("agent_index").get<int>();
      summary.text = item.at("text").get<std::string>();
      bank->raw.push_back(std::move(summary));
    }
    bank->problems_seen = bank_spec.at("problems_seen").get<int>();
    condensations->clear();
    for (const nlohmann::json& item : spec.at("condensations")) {
      condensations->push_back(condensed_from_json(item));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::SchemaError, std::string("bad knowledge record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Results directory
// ---------------------------------------------------------------------------

FileRunSink::FileRunSink(std::string results_dir, bool resume) : dir_(std::move(results_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + dir_ + ": " + ec.message());

  const auto mode = resume ? std::ios::app : std::ios::trunc;
  results_.open(dir_ + "/results.jsonl", mode);
  if (!results_) raise(ErrorKind::IoError, "cannot open " + dir_ + "/results.jsonl");
  events_.open(dir_ + "/events.jsonl", mode);
  if (!events_) raise(ErrorKind::IoError, "cannot open " + dir_ + "/events.jsonl");
}

void FileRunSink::on_event(const nlohmann::json& event) {
  events_ << event.dump() << '\n';
  events_.flush();
}

void FileRunSink::on_problem_complete(const ProblemResult& result, const KnowledgeBank& bank,
                                      const std::vector<CondensedKnowledge>& condensations) {
  results_ << problem_result_to_json(result).dump() << '\n';
  results_.flush();
  if (!results_) raise(ErrorKind::IoError, "short write to " + dir_ + "/results.jsonl");
  atomic_write_file(dir_ + "/knowledge.json",
                    knowledge_to_json(bank, condensations).dump(2) + "\n");
}

std::vector<ProblemResult> load_results(const std::string& results_dir) {
  const std::string path = results_dir + "/results.jsonl";
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read " + path);
  std::vector<ProblemResult> results;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json spec;
    try {
      spec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      schema_fail(line_number, std::string("invalid JSON: ") + e.what());
    }
    results.push_back(problem_result_from_json(spec));
  }
  return results;
}

void load_knowledge_file(const std::string& results_dir, KnowledgeBank* bank,
                         std::vector<CondensedKnowledge>* condensations) {
  const std::string path = results_dir + "/knowledge.json";
  std::ifstream in(path);
  if (!in) {
    *bank = KnowledgeBank{};
    condensations->clear();
    return;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::SchemaError, path + " is not valid JSON: " + e.what());
  }
  knowledge_from_json(spec, bank, condensations);
}

void write_results(const RunReport& report, const std::string& results_dir) {
  std::error_code ec;
  std::filesystem::create_directories(results_dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + results_dir + ": " + ec.message());

  std::string lines;
  for (const ProblemResult& result : report.results) {
    lines += problem_result_to_json(result).dump();
    lines += '\n';
  }
  atomic_write_file(results_dir + "/results.jsonl", lines);
  atomic_write_file(results_dir + "/knowledge.json",
                    knowledge_to_json(report.bank, report.condensations).dump(2) + "\n");
  write_metrics_file(compute_metrics(report.results), results_dir);
}

void write_metrics_file(const Metrics& metrics, const std::string& results_dir) {
  atomic_write_file(results_dir + "/metrics.json", metrics_to_json(metrics).dump(2) + "\n");
}

void write_run_meta(const nlohmann::ordered_json& meta, const std::string& results_dir) {
  atomic_write_file(results_dir + "/run_meta.json", meta.dump(2) + "\n");
}

nlohmann::json load_run_meta(const std::string& results_dir) {
  const std::string path = results_dir + "/run_meta.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::SchemaError, path + " is not valid JSON: " + e.what());
  }
  return meta;
}

}  // namespace marco
