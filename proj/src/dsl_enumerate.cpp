#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "marco/dsl.hpp"
#include "marco/errors.hpp"

namespace marco::dsl {

namespace {

// ---------------------------------------------------------------------------
// List-family search.
// ---------------------------------------------------------------------------

std::vector<Stage> list_stage_pool() {
  std::vector<Stage> pool;
  auto plain = [&pool](StageOp op) {
    Stage s;
    s.op = op;
    pool.push_back(s);
  };
  plain(StageOp::Head);
  plain(StageOp::Last);
  plain(StageOp::Reverse);
  plain(StageOp::Sort);
  plain(StageOp::Sum);
  plain(StageOp::Minimum);
  plain(StageOp::Maximum);
  for (StageOp op : {StageOp::Take, StageOp::Drop, StageOp::Access}) {
    for (int n = 1; n <= 3; ++n) {
      Stage s;
      s.op = op;
      s.n = n;
      pool.push_back(s);
    }
  }
  for (UnaryFn fn : {UnaryFn::Plus1, UnaryFn::Minus1, UnaryFn::Times2, UnaryFn::Times3,
                     UnaryFn::Div2, UnaryFn::Div3, UnaryFn::Negate, UnaryFn::Square}) {
    Stage s;
    s.op = StageOp::Map;
    s.fn = fn;
    pool.push_back(s);
  }
  for (Pred pred : {Pred::Gt0, Pred::Lt0, Pred::Even, Pred::Odd}) {
    Stage s;
    s.op = StageOp::Filter;
    s.pred = pred;
    pool.push_back(s);
  }
  for (Pred pred : {Pred::Gt0, Pred::Lt0, Pred::Even, Pred::Odd}) {
    Stage s;
    s.op = StageOp::Count;
    s.pred = pred;
    pool.push_back(s);
  }
  for (BinFn bin : {BinFn::Add, BinFn::Sub, BinFn::Mul, BinFn::Min, BinFn::Max}) {
    Stage s;
    s.op = StageOp::ZipWith;
    s.bin = bin;
    pool.push_back(s);
  }
  for (BinFn bin : {BinFn::Add, BinFn::Sub, BinFn::Mul, BinFn::Min, BinFn::Max}) {
    Stage s;
    s.op = StageOp::Scanl1;
    s.bin = bin;
    pool.push_back(s);
  }
  return pool;
}

std::string outcome_key(const std::vector<EvalResult>& outcomes) {
  std::string key;
  for (const EvalResult& r : outcomes) {
    key += r.ok ? "V" + to_source(r.value) : std::string("E");
    key += '\x1f';
  }
  return key;
}

std::optional<std::string> solve_list(const std::vector<std::vector<Int>>& inputs,
                                      const std::vector<Value>& expected, int max_stages,
                                      long long& budget, const std::atomic<bool>* cancel) {
  const std::vector<Stage> pool = list_stage_pool();
  std::vector<ListProgram> frontier;
  frontier.push_back(ListProgram{});  // empty pipeline; extended below
  std::set<std::string> seen;

  for (int depth = 1; depth <= max_stages; ++depth) {
    std::vector<ListProgram> next;
    for (const ListProgram& base : frontier) {
      DslType in_type = DslType::IntList;
      for (const Stage& stage : base.stages) in_type = stage_output_type(in_type, stage);
      if (in_type != DslType::IntList) continue;

      for (const Stage& stage : pool) {
        if (cancel && cancel->load()) return std::nullopt;
        ListProgram candidate = base;
        candidate.stages.push_back(stage);

        std::vector<EvalResult> outcomes;
        outcomes.reserve(inputs.size());
        bool consistent = true;
        for (std::size_t p = 0; p < inputs.size(); ++p) {
          if (--budget < 0) return std::nullopt;
          outcomes.push_back(try_eval_list_dsl(candidate, inputs[p]));
          const EvalResult& r = outcomes.back();
          if (!r.ok || r.value != expected[p]) consistent = false;
        }
        if (consistent) return pretty(candidate);
        if (!seen.insert(outcome_key(outcomes)).second) continue;

        bool extendable =
            std::all_of(outcomes.begin(), outcomes.end(), [](const EvalResult& r) {
              return r.ok && r.value.type == Value::Type::List;
            });
        if (extendable && depth < max_stages) next.push_back(std::move(candidate));
      }
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// String-family search. Atoms are single expressions; programs concatenate up
// to max_stages of them. Search walks per-pair output prefixes breadth-first.
// ---------------------------------------------------------------------------

StrExpr substr_expr(int i, int j) {
  StrExpr e;
  e.op = StrOp::SubStr;
  e.i = i;
  e.j = j;
  return e;
}

StrExpr token_expr(TokenClass cls, int k) {
  StrExpr e;
  e.op = StrOp::GetToken;
  e.cls = cls;
  e.k = k;
  return e;
}

StrExpr wrap_expr(StrOp op, const StrExpr& inner) {
  StrExpr e;
  e.op = op;
  e.inner = std::make_shared<StrExpr>(inner);
  return e;
}

StrExpr const_expr(std::string s) {
  StrExpr e;
  e.op = StrOp::ConstStr;
  e.s = std::move(s);
  return e;
}

// Distinct characters of `s` in first-occurrence order.
std::string distinct_chars(const std::string& s, std::size_t cap) {
  std::string out;
  for (char ch : s) {
    if (out.find(ch) == std::string::npos) {
      out += ch;
      if (out.size() >= cap) break;
    }
  }
  return out;
}

struct Atom {
  StrExpr expr;
  std::vector<std::string> outputs;  // one per pair, all successful
};

std::vector<Atom> build_atoms(const std::vector<std::string>& inputs,
                              const std::vector<std::string>& expected, long long& budget) {
  std::vector<StrExpr> raw;
  static const int kSubstrPairs[][2] = {{1, 1},  {1, 2},  {1, 3},   {2, 2},
                                        {2, 3},  {3, 3},  {1, -1},  {2, -1},
                                        {-2, -1}, {-1, -1}, {-3, -1}};
  for (const auto& ij : kSubstrPairs) raw.push_back(substr_expr(ij[0], ij[1]));
  for (TokenClass cls : {TokenClass::Word, TokenClass::Digits, TokenClass::Alnum}) {
    for (int k = 1; k <= 3; ++k) raw.push_back(token_expr(cls, k));
  }
  {
    StrExpr e;
    e.op = StrOp::GetFirstChar;
    raw.push_back(e);
  }
  std::string chars = distinct_chars(inputs.empty() ? "" : inputs[0], 16);
  for (char ch : chars) {
    for (StrOp op : {StrOp::GetFrom, StrOp::GetUpto}) {
      StrExpr e;
      e.op = op;
      e.c = ch;
      raw.push_back(e);
    }
  }
  for (char ch : distinct_chars(inputs.empty() ? "" : inputs[0], 8)) {
    for (const char* repl : {"", "-", "_", " "}) {
      StrExpr e;
      e.op = StrOp::Replace;
      e.s = std::string(1, ch);
      e.s2 = repl;
      raw.push_back(e);
    }
  }
  // Case/space wrappers around every input-derived atom (depth 1).
  std::size_t base_count = raw.size();
  for (StrOp op : {StrOp::ToUpper, StrOp::ToLower, StrOp::Trim}) {
    for (std::size_t i = 0; i < base_count; ++i) raw.push_back(wrap_expr(op, raw[i]));
  }
  // Constants drawn from the first expected output, shortest-first at each
  // position; tried after every input-derived atom.
  if (!expected.empty()) {
    std::set<std::string> seen_consts;
    std::size_t emitted = 0;
    const std::string& first = expected[0];
    for (std::size_t pos = 0; pos < first.size() && emitted < 60; ++pos) {
      for (std::size_t len = 1; len <= 3 && pos + len <= first.size() && emitted < 60; ++len) {
        std::string sub = first.substr(pos, len);
        if (seen_consts.insert(sub).second) {
          raw.push_back(const_expr(sub));
          ++emitted;
        }
      }
    }
  }

  std::vector<Atom> atoms;
  std::set<std::string> seen_outputs;
  for (const StrExpr& expr : raw) {
    StringProgram probe{{expr}};
    std::vector<std::string> outs;
    outs.reserve(inputs.size());
    bool ok = true;
    for (const std::string& input : inputs) {
      if (--budget < 0) return atoms;
      StrEvalResult r = try_eval_string_dsl(probe, input);
      if (!r.ok) {
        ok = false;
        break;
      }
      outs.push_back(std::move(r.value));
    }
    if (!ok) continue;
    std::string key;
    for (const std::string& o : outs) {
      key += o;
      key += '\x1f';
    }
    if (!seen_outputs.insert(key).second) continue;
    atoms.push_back(Atom{expr, std::move(outs)});
  }
  return atoms;
}

std::optional<std::string> solve_string(const std::vector<std::string>& inputs,
                                        const std::vector<std::string>& expected,
                                        int max_stages, long long& budget,
                                        const std::atomic<bool>* cancel) {
  if (std::all_of(expected.begin(), expected.end(),
                  [](const std::string& s) { return s.empty(); })) {
    return pretty(StringProgram{{const_expr("")}});
  }
  std::vector<Atom> atoms = build_atoms(inputs, expected, budget);
  if (budget < 0) return std::nullopt;

  struct State {
    std::vector<std::size_t> lens;  // matched prefix length per pair
    std::vector<std::size_t> path;  // atom indices
  };
  std::deque<State> queue;
  std::set<std::vector<std::size_t>> visited;
  State start;
  start.lens.assign(expected.size(), 0);
  visited.insert(start.lens);
  queue.push_back(std::move(start));

  while (!queue.empty()) {
    State state = std::move(queue.front());
    queue.pop_front();
    if (cancel && cancel->load()) return std::nullopt;
    if (static_cast<int>(state.path.size()) >= max_stages) continue;

    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (--budget < 0) return std::nullopt;
      const Atom& atom = atoms[a];
      std::vector<std::size_t> lens = state.lens;
      bool fits = true;
      bool done = true;
      for (std::size_t p = 0; p < expected.size(); ++p) {
        const std::string& out = atom.outputs[p];
        if (expected[p].compare(lens[p], out.size(), out) != 0) {
          fits = false;
          break;
        }
        lens[p] += out.size();
        if (lens[p] != expected[p].size()) done = false;
      }
      if (!fits) continue;
      std::vector<std::size_t> path = state.path;
      path.push_back(a);
      if (done) {
        StringProgram program;
        for (std::size_t idx : path) program.exprs.push_back(atoms[idx].expr);
        return pretty(program);
      }
      if (visited.insert(lens).second) {
        queue.push_back(State{std::move(lens), std::move(path)});
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> enumerate_solve(const std::vector<IOPair>& pairs, int max_stages,
                                           long long node_budget,
                                           const std::atomic<bool>* cancel) {
  if (pairs.empty()) raise(ErrorKind::EmptyDataset, "enumerate_solve requires at least one pair");
  if (max_stages < 1) raise(ErrorKind::Config, "max_stages must be >= 1");

  std::vector<Value> in_values, out_values;
  in_values.reserve(pairs.size());
  out_values.reserve(pairs.size());
  for (const IOPair& pair : pairs) {
    in_values.push_back(parse_value(pair.input));
    out_values.push_back(parse_value(pair.output));
  }

  long long budget = node_budget;
  bool string_family = in_values[0].type == Value::Type::Str;
  if (string_family) {
    std::vector<std::string> inputs, expected;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      if (in_values[p].type != Value::Type::Str || out_values[p].type != Value::Type::Str) {
        raise(ErrorKind::ParseError, "mixed DSL families in example pairs");
      }
      inputs.push_back(in_values[p].str);
      expected.push_back(out_values[p].str);
    }
    return solve_string(inputs, expected, max_stages, budget, cancel);
  }

  std::vector<std::vector<Int>> inputs;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (in_values[p].type != Value::Type::List || out_values[p].type == Value::Type::Str) {
      raise(ErrorKind::ParseError, "mixed DSL families in example pairs");
    }
    inputs.push_back(in_values[p].list);
  }
  return solve_list(inputs, out_values, max_stages, budget, cancel);
}

}  // namespace marco::dsl
