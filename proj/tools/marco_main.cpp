#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marco/dsl.hpp"
#include "marco/errors.hpp"
#include "marco/executor.hpp"
#include "marco/harness.hpp"
#include "marco/orchestrator.hpp"
#include "marco/providers.hpp"

namespace {

using namespace marco;

std::string iso_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Auth:
      return 3;
    case ErrorKind::SandboxError:
      return 4;
    case ErrorKind::SchemaError:
    case ErrorKind::DuplicateId:
    case ErrorKind::WrongKind:
    case ErrorKind::AlreadySplit:
    case ErrorKind::EmptyDataset:
    case ErrorKind::MismatchedRuns:
    case ErrorKind::ParseError:
    case ErrorKind::Config:
      return 2;
    default:
      return 1;
  }
}

AgentHandle make_handle(const AgentConfig& agent, const RunConfig& config) {
  AgentHandle handle;
  handle.provider = make_provider(agent, config.retry, config.request_timeout_seconds,
                                  config.enum_node_budget);
  handle.settings.model = agent.model;
  handle.settings.temperature = agent.temperature;
  handle.settings.max_tokens = agent.max_tokens;
  return handle;
}

int cmd_run(const std::string& config_path, const std::string& dataset_path,
            const std::string& out_dir, bool resume, bool static_mode) {
  RunConfig config = load_config(config_path);
  if (static_mode) config.static_mode = true;

  std::vector<Problem> problems;
  for (const Problem& problem : load_dataset(dataset_path)) {
    problems.push_back(problem.kind == TaskKind::Induction ? split_visible(problem) : problem);
  }

  if (config.agents.empty()) config.agents.assign(config.num_agents, AgentConfig{});
  config.validate();

  std::vector<AgentHandle> agents;
  for (const AgentConfig& agent : config.agents) agents.push_back(make_handle(agent, config));
  AgentHandle condenser = make_handle(config.condenser, config);

  RunState state;
  const bool resuming = resume && std::filesystem::exists(out_dir + "/results.jsonl");
  if (resuming) {
    std::vector<ProblemResult> done = load_results(out_dir);
    if (done.size() > problems.size()) {
      raise(ErrorKind::Config, "results dir holds more problems than the dataset");
    }
    for (std::size_t i = 0; i < done.size(); ++i) {
      if (done[i].problem_id != problems[i].id) {
        raise(ErrorKind::Config, "existing results do not match the dataset at position " +
                                     std::to_string(i + 1));
      }
    }
    state.completed = static_cast<int>(done.size());
    load_knowledge_file(out_dir, &state.bank, &state.condensations);
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + out_dir + ": " + ec.message());

  nlohmann::ordered_json meta;
  meta["config"] = config_to_json(config);
  meta["dataset"] = dataset_path;
  meta["seed"] = config.seed;
  meta["resumed_from"] = state.completed;
  meta["started_at"] = iso_now();
  meta["finished_at"] = nullptr;
  write_run_meta(meta, out_dir);

  Executor executor(config.limits);
  FileRunSink sink(out_dir, resuming);
  run_benchmark(problems, config, agents, &condenser, executor, &sink, std::move(state));

  std::vector<ProblemResult> all = load_results(out_dir);
  Metrics metrics = compute_metrics(all);
  write_metrics_file(metrics, out_dir);

  meta["finished_at"] = iso_now();
  meta["completed"] = static_cast<int>(all.size());
  write_run_meta(meta, out_dir);

  std::cout << "completed " << all.size() << " problems"
            << " | accuracy " << metrics.accuracy
            << " | problem accuracy " << metrics.problem_accuracy << "\n";
  return 0;
}

int cmd_score(const std::string& results_dir) {
  Metrics metrics = compute_metrics(load_results(results_dir));
  write_metrics_file(metrics, results_dir);
  std::cout << metrics_to_json(metrics).dump(2) << "\n";
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b) {
  RunReport a;
  a.results = load_results(dir_a);
  RunReport b;
  b.results = load_results(dir_b);
  HalfDeltas deltas = half_improvement(a, b);
  nlohmann::ordered_json out;
  out["accuracy_a"] = accuracy(a.results);
  out["accuracy_b"] = accuracy(b.results);
  out["first_half_delta"] = deltas.first_half_delta;
  out["second_half_delta"] = deltas.second_half_delta;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_gen_dsl(const std::string& family, int count, std::uint64_t seed, int max_stages,
                int pairs_per_problem, const std::string& out_path) {
  dsl::GenOptions options;
  if (family == "list") {
    options.family = dsl::GenOptions::Family::List;
  } else if (family == "string") {
    options.family = dsl::GenOptions::Family::Str;
  } else {
    raise(ErrorKind::Config, "family must be 'list' or 'string'");
  }
  options.count = count;
  options.seed = seed;
  options.max_stages = max_stages;
  options.pairs_per_problem = pairs_per_problem;

  std::vector<Problem> problems = dsl::generate_dsl_dataset(options);
  if (out_path == "-") {
    for (const Problem& problem : problems) {
      std::cout << problem_to_row(problem).dump() << "\n";
    }
  } else {
    write_dataset(problems, out_path);
    std::cout << "wrote " << problems.size() << " problems to " << out_path << "\n";
  }
  return 0;
}

int cmd_inspect_knowledge(const std::string& results_dir) {
  KnowledgeBank bank;
  std::vector<CondensedKnowledge> condensations;
  load_knowledge_file(results_dir, &bank, &condensations);
  if (condensations.empty()) {
    std::cout << "no condensations recorded\n";
  }
  for (const CondensedKnowledge& condensed : condensations) {
    std::cout << "condensation v" << condensed.version << " (covering "
              << condensed.covering_problems << " problems):\n"
              << condensed.text << "\n\n";
  }
  std::cout << "bank: problems_seen " << bank.problems_seen << ", raw entries "
            << bank.raw.size() << ", condensed "
            << (bank.condensed ? "v" + std::to_string(bank.condensed->version) : "none") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent code-reasoning benchmark runner"};
  app.require_subcommand(1);

  std::string config_path, dataset_path, out_dir;
  bool resume = false;
  bool static_mode = false;
  CLI::App* run = app.add_subcommand("run", "run the benchmark loop over a dataset");
  run->add_option("--config", config_path, "run configuration JSON")->required();
  run->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  run->add_option("--out", out_dir, "results directory")->required();
  run->add_flag("--resume", resume, "continue after the last persisted problem");
  run->add_flag("--static-mode", static_mode, "disable knowledge and lesson sharing");

  std::string score_dir;
  CLI::App* score = app.add_subcommand("score", "recompute metrics for a results directory");
  score->add_option("--results", score_dir, "results directory")->required();

  std::string dir_a, dir_b;
  CLI::App* compare = app.add_subcommand("compare", "first/second-half accuracy deltas of two runs");
  compare->add_option("--a", dir_a, "results directory A")->required();
  compare->add_option("--b", dir_b, "results directory B")->required();

  std::string family = "list";
  int count = 20;
  std::uint64_t seed = 0;
  int max_stages = 2;
  int pairs_per_problem = 5;
  std::string gen_out = "-";
  CLI::App* gen = app.add_subcommand("gen-dsl", "generate a synthetic DSL dataset");
  gen->add_option("--family", family, "list or string")->required();
  gen->add_option("--count", count, "number of problems");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--max-stages", max_stages, "deepest program to target");
  gen->add_option("--pairs", pairs_per_problem, "pairs per problem");
  gen->add_option("--out", gen_out, "output path ('-' for stdout)");

  std::string inspect_dir;
  CLI::App* inspect = app.add_subcommand("inspect-knowledge", "print the condensation history");
  inspect->add_option("--results", inspect_dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, dataset_path, out_dir, resume, static_mode);
    if (score->parsed()) return cmd_score(score_dir);
    if (compare->parsed()) return cmd_compare(dir_a, dir_b);
    if (gen->parsed()) {
      return cmd_gen_dsl(family, count, seed, max_stages, pairs_per_problem, gen_out);
    }
    if (inspect->parsed()) return cmd_inspect_knowledge(inspect_dir);
  } catch (const MarcoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
