#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "marco/domain.hpp"

// Self-contained list-manipulation and string-transformation DSLs plus a
// bottom-up enumerative solver. DSL source text is the exchange format; the
// evaluators run in-process (no sandbox needed for DSL candidates).
namespace marco::dsl {

using Int = long long;

// A DSL value: an integer, an integer list, or a string.
struct Value {
  enum class Type { Int, List, Str };
  Type type = Type::Int;
  Int i = 0;
  std::vector<Int> list;
  std::string str;

  static Value of_int(Int v);
  static Value of_list(std::vector<Int> v);
  static Value of_str(std::string v);

  bool operator==(const Value& other) const;
  bool operator!=(const Value& other) const { return !(*this == other); }
};

// Literal syntax: ints `-3`, lists `[1, -2, 3]`, strings `"ab\ncd"`.
std::string to_source(const Value& value);
Value parse_value(const std::string& src);  // throws ParseError
std::optional<Value> try_parse_value(const std::string& src);

// ---------------------------------------------------------------------------
// List DSL. A program is a pipeline `Stage | Stage | ...` applied to an int
// list. Stages type-check along the pipeline (int vs int-list).
// ---------------------------------------------------------------------------

enum class StageOp {
  Head, Last, Reverse, Sort, Sum, Minimum, Maximum,
  Take, Drop, Access,          // carry an int parameter
  Map, Filter, Count, ZipWith, Scanl1,
};

enum class UnaryFn { Plus1, Minus1, Times2, Times3, Div2, Div3, Negate, Square };
enum class Pred { Gt0, Lt0, Even, Odd };
enum class BinFn { Add, Sub, Mul, Min, Max };

struct Stage {
  StageOp op = StageOp::Head;
  int n = 0;          // Take/Drop/Access
  UnaryFn fn = UnaryFn::Plus1;   // Map
  Pred pred = Pred::Gt0;         // Filter/Count
  BinFn bin = BinFn::Add;        // ZipWith/Scanl1

  bool operator==(const Stage& other) const;
};

struct ListProgram {
  std::vector<Stage> stages;
  bool operator==(const ListProgram& other) const { return stages == other.stages; }
};

enum class DslType { Int, IntList };

// Output type of `stage` on input type `in`; throws TypeError when the stage
// cannot accept `in` (every stage consumes a list).
DslType stage_output_type(DslType in, const Stage& stage);

ListProgram parse_list_dsl(const std::string& src);  // ParseError / TypeError
std::string pretty(const ListProgram& program);

// Left-to-right stage application. Integer division uses floor semantics
// (-3 / 2 == -2). Head/Last/Access/Minimum/Maximum on empty or short lists
// throw EvalError; ZipWith pairs the pipeline value with the original input,
// truncated to the shorter length.
Value eval_list_dsl(const ListProgram& program, const std::vector<Int>& input);

// Non-throwing evaluation for the enumerator's inner loop.
struct EvalResult {
  bool ok = false;
  Value value;
  std::string error;  // set when !ok
};
EvalResult try_eval_list_dsl(const ListProgram& program, const std::vector<Int>& input);

// ---------------------------------------------------------------------------
// String DSL. A program is `Concat(e1, ..., ek)` (or a bare expression); each
// expression maps the input string to a fragment and the program yields the
// concatenation.
// ---------------------------------------------------------------------------

enum class StrOp {
  ConstStr,      // literal
  SubStr,        // 1-based inclusive [i, j]; negative indices count from the end
  GetToken,      // k-th token of a class
  ToUpper, ToLower, Trim,  // wrap an inner expression
  Replace,       // replace all occurrences of `s` with `s2` in the input
  GetFirstChar,
  GetFrom,       // suffix strictly after the first occurrence of a character
  GetUpto,       // prefix up to and including the first occurrence
};

enum class TokenClass { Word, Digits, Alnum };

struct StrExpr {
  StrOp op = StrOp::ConstStr;
  std::string s;   // ConstStr literal / Replace pattern
  std::string s2;  // Replace replacement
  int i = 0, j = 0;             // SubStr bounds (non-zero)
  int k = 0;                    // GetToken index (>= 1)
  TokenClass cls = TokenClass::Word;
  char c = '\0';                // GetFrom/GetUpto character
  std::shared_ptr<const StrExpr> inner;  // ToUpper/ToLower/Trim operand

  bool operator==(const StrExpr& other) const;
};

struct StringProgram {
  std::vector<StrExpr> exprs;
  bool operator==(const StringProgram& other) const { return exprs == other.exprs; }
};

StringProgram parse_string_dsl(const std::string& src);  // ParseError
std::string pretty(const StringProgram& program);

std::string eval_string_dsl(const StringProgram& program, const std::string& input);

struct StrEvalResult {
  bool ok = false;
  std::string value;
  std::string error;
};
StrEvalResult try_eval_string_dsl(const StringProgram& program, const std::string& input);

// ---------------------------------------------------------------------------
// Enumerative solver: bottom-up search by stage count with observational-
// equivalence pruning. Returns the source of the first program (by stage
// count, then enumeration order) consistent with ALL pairs, or nullopt when
// the node budget is exhausted or no program fits. Pairs must all belong to
// one DSL family (int/list values or string values).
// ---------------------------------------------------------------------------

std::optional<std::string> enumerate_solve(const std::vector<IOPair>& pairs,
                                           int max_stages, long long node_budget,
                                           const std::atomic<bool>* cancel = nullptr);

// ---------------------------------------------------------------------------
// Synthetic dataset generation. Every emitted problem is guaranteed to be
// solved end-to-end by enumerate_solve at `max_stages` from its visible half
// (first ceil(n/2) pairs); two-stage targets are additionally guaranteed to
// defeat a depth-1 enumerator.
// ---------------------------------------------------------------------------

struct GenOptions {
  enum class Family { List, Str };
  Family family = Family::List;
  int count = 20;
  std::uint64_t seed = 0;
  int max_stages = 2;
  int pairs_per_problem = 5;
};

std::vector<Problem> generate_dsl_dataset(const GenOptions& options);

}  // namespace marco::dsl
