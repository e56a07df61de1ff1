#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marco/dsl.hpp"
#include "marco/errors.hpp"
#include "marco/util.hpp"

namespace marco::dsl {

namespace {

using util::Rng;

constexpr long long kVerifyBudget = 2'000'000;

std::string padded_id(const char* prefix, int ordinal) {
  std::ostringstream out;
  out << prefix << '-';
  std::string digits = std::to_string(ordinal);
  for (std::size_t i = digits.size(); i < 4; ++i) out << '0';
  out << digits;
  return out.str();
}

// Checks that `source` parses in the problem's family and reproduces every
// pair, visible and hidden alike.
bool program_covers_all(const std::string& source, const std::vector<IOPair>& pairs,
                        bool string_family) {
  if (string_family) {
    StringProgram program = parse_string_dsl(source);
    for (const IOPair& pair : pairs) {
      StrEvalResult r = try_eval_string_dsl(program, parse_value(pair.input).str);
      if (!r.ok || r.value != parse_value(pair.output).str) return false;
    }
    return true;
  }
  ListProgram program = parse_list_dsl(source);
  for (const IOPair& pair : pairs) {
    EvalResult r = try_eval_list_dsl(program, parse_value(pair.input).list);
    if (!r.ok || r.value != parse_value(pair.output)) return false;
  }
  return true;
}

// The emitted problem must be solvable by the enumerator from its future
// visible half, and multi-stage problems must not fall to a depth-1 search.
bool verify_problem(const std::vector<IOPair>& pairs, int stage_count, int max_stages,
                    bool string_family) {
  std::size_t visible = (pairs.size() + 1) / 2;
  std::vector<IOPair> head(pairs.begin(), pairs.begin() + visible);

  std::optional<std::string> found = enumerate_solve(head, max_stages, kVerifyBudget);
  if (!found || !program_covers_all(*found, pairs, string_family)) return false;

  if (stage_count >= 2) {
    std::optional<std::string> shallow = enumerate_solve(head, 1, kVerifyBudget);
    if (shallow && program_covers_all(*shallow, pairs, string_family)) return false;
  }
  return true;
}

bool outputs_distinct(const std::vector<IOPair>& pairs) {
  std::set<std::string> outs;
  for (const IOPair& pair : pairs) outs.insert(pair.output);
  return outs.size() >= 2;
}

// ---------------------------------------------------------------------------
// List family.
// ---------------------------------------------------------------------------

Stage random_stage(Rng& rng, bool must_keep_list) {
  while (true) {
    switch (rng.range(0, 8)) {
      case 0: {
        StageOp ops[] = {StageOp::Head, StageOp::Last, StageOp::Sum, StageOp::Minimum,
                         StageOp::Maximum};
        if (must_keep_list) continue;
        Stage s;
        s.op = ops[rng.range(0, 4)];
        return s;
      }
      case 1: {
        Stage s;
        s.op = rng.chance(0.5) ? StageOp::Reverse : StageOp::Sort;
        return s;
      }
      case 2: {
        Stage s;
        s.op = rng.chance(0.5) ? StageOp::Take : StageOp::Drop;
        s.n = static_cast<int>(rng.range(1, 3));
        return s;
      }
      case 3: {
        if (must_keep_list) continue;
        Stage s;
        s.op = StageOp::Access;
        s.n = static_cast<int>(rng.range(1, 3));
        return s;
      }
      case 4: {
        UnaryFn fns[] = {UnaryFn::Plus1, UnaryFn::Minus1, UnaryFn::Times2, UnaryFn::Times3,
                         UnaryFn::Div2, UnaryFn::Div3, UnaryFn::Negate, UnaryFn::Square};
        Stage s;
        s.op = StageOp::Map;
        s.fn = fns[rng.range(0, 7)];
        return s;
      }
      case 5: {
        Pred preds[] = {Pred::Gt0, Pred::Lt0, Pred::Even, Pred::Odd};
        Stage s;
        s.op = StageOp::Filter;
        s.pred = preds[rng.range(0, 3)];
        return s;
      }
      case 6: {
        if (must_keep_list) continue;
        Pred preds[] = {Pred::Gt0, Pred::Lt0, Pred::Even, Pred::Odd};
        Stage s;
        s.op = StageOp::Count;
        s.pred = preds[rng.range(0, 3)];
        return s;
      }
      case 7: {
        BinFn fns[] = {BinFn::Add, BinFn::Sub, BinFn::Mul, BinFn::Min, BinFn::Max};
        Stage s;
        s.op = StageOp::ZipWith;
        s.bin = fns[rng.range(0, 4)];
        return s;
      }
      default: {
        BinFn fns[] = {BinFn::Add, BinFn::Sub, BinFn::Mul, BinFn::Min, BinFn::Max};
        Stage s;
        s.op = StageOp::Scanl1;
        s.bin = fns[rng.range(0, 4)];
        return s;
      }
    }
  }
}

std::vector<Int> random_list(Rng& rng) {
  std::vector<Int> out(rng.range(0, 6));
  for (Int& v : out) v = rng.range(-9, 9);
  return out;
}

std::optional<std::vector<IOPair>> sample_list_pairs(Rng& rng, const ListProgram& target,
                                                     int pairs_n) {
  std::vector<IOPair> pairs;
  std::set<std::string> seen_inputs;
  for (int p = 0; p < pairs_n; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
      std::vector<Int> input = random_list(rng);
      std::string input_src = to_source(Value::of_list(input));
      if (!seen_inputs.insert(input_src).second) continue;
      EvalResult r = try_eval_list_dsl(target, input);
      if (!r.ok) {
        seen_inputs.erase(input_src);
        continue;
      }
      pairs.push_back(IOPair{input_src, to_source(r.value), false});
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  return pairs;
}

Problem make_list_problem(Rng& rng, int ordinal, int stage_count, const GenOptions& options) {
  for (int attempt = 0; attempt < 400; ++attempt) {
    ListProgram target;
    for (int s = 0; s < stage_count; ++s) {
      target.stages.push_back(random_stage(rng, s + 1 < stage_count));
    }
    std::optional<std::vector<IOPair>> pairs =
        sample_list_pairs(rng, target, options.pairs_per_problem);
    if (!pairs || !outputs_distinct(*pairs)) continue;
    if (!verify_problem(*pairs, stage_count, options.max_stages, false)) continue;

    Problem problem;
    problem.id = padded_id("list", ordinal);
    problem.kind = TaskKind::Induction;
    problem.pairs = std::move(*pairs);
    problem.language = CodeLanguage::ListDsl;
    return problem;
  }
  raise(ErrorKind::Config, "list dataset generation failed to converge for " +
                               padded_id("list", ordinal));
}

// ---------------------------------------------------------------------------
// String family.
// ---------------------------------------------------------------------------

std::string random_word(Rng& rng, bool capitalized) {
  std::string out(rng.range(3, 6), 'a');
  for (char& ch : out) ch = static_cast<char>('a' + rng.range(0, 25));
  if (capitalized) out[0] = static_cast<char>(std::toupper(out[0]));
  return out;
}

std::string random_digits(Rng& rng) {
  std::string out(rng.range(1, 3), '0');
  for (char& ch : out) ch = static_cast<char>('0' + rng.range(0, 9));
  return out;
}

// Input shapes: every input of one problem shares a shape and separator so
// token- and separator-based targets behave uniformly.
std::string random_input(Rng& rng, int shape, char sep) {
  switch (shape) {
    case 0: return random_word(rng, false) + sep + random_word(rng, false);
    case 1: return random_word(rng, true) + sep + random_word(rng, false);
    case 2: return random_word(rng, false) + sep + random_digits(rng);
    case 3: return random_word(rng, false) + sep + random_word(rng, false) + sep +
                   random_digits(rng);
    default: return random_word(rng, true) + sep + random_word(rng, true);
  }
}

StrExpr str_atom(StrOp op) {
  StrExpr e;
  e.op = op;
  return e;
}

StrExpr str_const(std::string s) {
  StrExpr e;
  e.op = StrOp::ConstStr;
  e.s = std::move(s);
  return e;
}

StrExpr str_substr(int i, int j) {
  StrExpr e;
  e.op = StrOp::SubStr;
  e.i = i;
  e.j = j;
  return e;
}

StrExpr str_token(TokenClass cls, int k) {
  StrExpr e;
  e.op = StrOp::GetToken;
  e.cls = cls;
  e.k = k;
  return e;
}

StrExpr str_wrap(StrOp op, StrExpr inner) {
  StrExpr e;
  e.op = op;
  e.inner = std::make_shared<StrExpr>(std::move(inner));
  return e;
}

StrExpr str_char_op(StrOp op, char c) {
  StrExpr e;
  e.op = op;
  e.c = c;
  return e;
}

StrExpr random_str_atom(Rng& rng, char sep) {
  switch (rng.range(0, 11)) {
    case 0: return str_token(TokenClass::Word, static_cast<int>(rng.range(1, 2)));
    case 1: return str_token(TokenClass::Alnum, static_cast<int>(rng.range(1, 2)));
    case 2: return str_token(TokenClass::Digits, 1);
    case 3: return str_wrap(StrOp::ToUpper, str_token(TokenClass::Word, 1));
    case 4: return str_substr(1, static_cast<int>(rng.range(2, 3)));
    case 5: return str_substr(-2, -1);
    case 6: return str_wrap(StrOp::ToUpper, str_substr(1, 3));
    case 7: return str_atom(StrOp::GetFirstChar);
    case 8: return str_char_op(StrOp::GetUpto, sep);
    case 9: return str_char_op(StrOp::GetFrom, sep);
    case 10: {
      StrExpr e;
      e.op = StrOp::Replace;
      e.s = std::string(1, sep);
      e.s2 = sep == '-' ? "_" : "-";
      return e;
    }
    default: return str_wrap(StrOp::ToLower, str_token(TokenClass::Word, 1));
  }
}

StringProgram random_str_target(Rng& rng, int stage_count, char sep) {
  StringProgram target;
  if (stage_count == 1) {
    target.exprs.push_back(random_str_atom(rng, sep));
    return target;
  }
  // Two-fragment programs lean on a constant or a second extraction.
  switch (rng.range(0, 4)) {
    case 0:
      target.exprs.push_back(random_str_atom(rng, sep));
      target.exprs.push_back(str_const(rng.chance(0.5) ? "!" : "."));
      break;
    case 1:
      target.exprs.push_back(str_const(rng.chance(0.5) ? "id:" : ">>"));
      target.exprs.push_back(random_str_atom(rng, sep));
      break;
    case 2:
      target.exprs.push_back(str_wrap(StrOp::ToUpper, str_atom(StrOp::GetFirstChar)));
      target.exprs.push_back(str_char_op(StrOp::GetFrom, sep));
      break;
    default:
      target.exprs.push_back(random_str_atom(rng, sep));
      target.exprs.push_back(random_str_atom(rng, sep));
      break;
  }
  return target;
}

std::optional<std::vector<IOPair>> sample_str_pairs(Rng& rng, const StringProgram& target,
                                                    int shape, char sep, int pairs_n) {
  std::vector<IOPair> pairs;
  std::set<std::string> seen_inputs;
  for (int p = 0; p < pairs_n; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
      std::string input = random_input(rng, shape, sep);
      if (!seen_inputs.insert(input).second) continue;
      StrEvalResult r = try_eval_string_dsl(target, input);
      if (!r.ok || r.value.empty()) {
        seen_inputs.erase(input);
        continue;
      }
      pairs.push_back(IOPair{to_source(Value::of_str(input)),
                             to_source(Value::of_str(r.value)), false});
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  return pairs;
}

Problem make_string_problem(Rng& rng, int ordinal, int stage_count, const GenOptions& options) {
  const char seps[] = {'-', '_', ' ', ':'};
  for (int attempt = 0; attempt < 400; ++attempt) {
    char sep = seps[rng.range(0, 3)];
    int shape = static_cast<int>(rng.range(0, 4));
    StringProgram target = random_str_target(rng, stage_count, sep);
    std::optional<std::vector<IOPair>> pairs =
        sample_str_pairs(rng, target, shape, sep, options.pairs_per_problem);
    if (!pairs || !outputs_distinct(*pairs)) continue;
    if (!verify_problem(*pairs, stage_count, options.max_stages, true)) continue;

    Problem problem;
    problem.id = padded_id("string", ordinal);
    problem.kind = TaskKind::Induction;
    problem.pairs = std::move(*pairs);
    problem.language = CodeLanguage::StringDsl;
    return problem;
  }
  raise(ErrorKind::Config, "string dataset generation failed to converge for " +
                               padded_id("string", ordinal));
}

}  // namespace

std::vector<Problem> generate_dsl_dataset(const GenOptions& options) {
  if (options.count < 1) raise(ErrorKind::Config, "count must be >= 1");
  if (options.pairs_per_problem < 2) raise(ErrorKind::Config, "pairs_per_problem must be >= 2");
  if (options.max_stages < 1) raise(ErrorKind::Config, "max_stages must be >= 1");

  Rng rng(options.seed ^ (options.family == GenOptions::Family::List ? 0x4c495354ULL
                                                                     : 0x53545234ULL));
  std::vector<Problem> out;
  out.reserve(options.count);
  for (int i = 0; i < options.count; ++i) {
    // Alternate single-stage and two-stage targets so a shallow search can
    // solve some problems but not all of them.
    int stage_count = (options.max_stages >= 2 && i % 2 == 1) ? 2 : 1;
    if (options.family == GenOptions::Family::List) {
      out.push_back(make_list_problem(rng, i + 1, stage_count, options));
    } else {
      out.push_back(make_string_problem(rng, i + 1, stage_count, options));
    }
  }
  return out;
}

}  // namespace marco::dsl
