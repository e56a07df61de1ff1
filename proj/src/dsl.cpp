#include "marco/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

#include "marco/errors.hpp"

namespace marco::dsl {

namespace {

// Floor division; divisor is positive in the grammar.
Int floor_div(Int a, Int b) {
  Int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Int apply_unary(UnaryFn fn, Int x) {
  switch (fn) {
    case UnaryFn::Plus1: return x + 1;
    case UnaryFn::Minus1: return x - 1;
    case UnaryFn::Times2: return x * 2;
    case UnaryFn::Times3: return x * 3;
    case UnaryFn::Div2: return floor_div(x, 2);
    case UnaryFn::Div3: return floor_div(x, 3);
    case UnaryFn::Negate: return -x;
    case UnaryFn::Square: return x * x;
  }
  return x;
}

bool apply_pred(Pred pred, Int x) {
  switch (pred) {
    case Pred::Gt0: return x > 0;
    case Pred::Lt0: return x < 0;
    case Pred::Even: return x % 2 == 0;
    case Pred::Odd: return x % 2 != 0;
  }
  return false;
}

Int apply_bin(BinFn fn, Int a, Int b) {
  switch (fn) {
    case BinFn::Add: return a + b;
    case BinFn::Sub: return a - b;
    case BinFn::Mul: return a * b;
    case BinFn::Min: return std::min(a, b);
    case BinFn::Max: return std::max(a, b);
  }
  return a;
}

const char* unary_token(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Plus1: return "+1";
    case UnaryFn::Minus1: return "-1";
    case UnaryFn::Times2: return "*2";
    case UnaryFn::Times3: return "*3";
    case UnaryFn::Div2: return "/2";
    case UnaryFn::Div3: return "/3";
    case UnaryFn::Negate: return "*(-1)";
    case UnaryFn::Square: return "^2";
  }
  return "+1";
}

const char* pred_token(Pred pred) {
  switch (pred) {
    case Pred::Gt0: return ">0";
    case Pred::Lt0: return "<0";
    case Pred::Even: return "even";
    case Pred::Odd: return "odd";
  }
  return ">0";
}

const char* bin_token(BinFn fn) {
  switch (fn) {
    case BinFn::Add: return "+";
    case BinFn::Sub: return "-";
    case BinFn::Mul: return "*";
    case BinFn::Min: return "min";
    case BinFn::Max: return "max";
  }
  return "+";
}

const char* token_class_token(TokenClass cls) {
  switch (cls) {
    case TokenClass::Word: return "word";
    case TokenClass::Digits: return "digits";
    case TokenClass::Alnum: return "alnum";
  }
  return "word";
}

}  // namespace

// ---------------------------------------------------------------------------
// Values.
// ---------------------------------------------------------------------------

Value Value::of_int(Int v) {
  Value out;
  out.type = Type::Int;
  out.i = v;
  return out;
}

Value Value::of_list(std::vector<Int> v) {
  Value out;
  out.type = Type::List;
  out.list = std::move(v);
  return out;
}

Value Value::of_str(std::string v) {
  Value out;
  out.type = Type::Str;
  out.str = std::move(v);
  return out;
}

bool Value::operator==(const Value& other) const {
  if (type != other.type) return false;
  switch (type) {
    case Type::Int: return i == other.i;
    case Type::List: return list == other.list;
    case Type::Str: return str == other.str;
  }
  return false;
}

std::string to_source(const Value& value) {
  switch (value.type) {
    case Value::Type::Int:
      return std::to_string(value.i);
    case Value::Type::List: {
      std::string out = "[";
      for (std::size_t i = 0; i < value.list.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(value.list[i]);
      }
      out += "]";
      return out;
    }
    case Value::Type::Str: {
      std::string out = "\"";
      for (char ch : value.str) {
        switch (ch) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          default: out += ch; break;
        }
      }
      out += "\"";
      return out;
    }
  }
  return "";
}

namespace {

struct ValueCursor {
  const std::string& src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= src.size();
  }
  char peek() { return pos < src.size() ? src[pos] : '\0'; }
  [[noreturn]] void fail(const std::string& what) {
    raise(ErrorKind::ParseError, what + " at position " + std::to_string(pos));
  }

  Int parse_int() {
    skip_ws();
    std::size_t start = pos;
    if (peek() == '-' || peek() == '+') ++pos;
    if (pos >= src.size() || !std::isdigit(static_cast<unsigned char>(src[pos]))) {
      fail("expected integer");
    }
    while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
    return std::stoll(src.substr(start, pos - start));
  }

  Value parse() {
    skip_ws();
    if (pos >= src.size()) fail("empty value");
    char ch = src[pos];
    if (ch == '[') {
      ++pos;
      std::vector<Int> items;
      skip_ws();
      if (peek() == ']') {
        ++pos;
        return Value::of_list(std::move(items));
      }
      while (true) {
        items.push_back(parse_int());
        skip_ws();
        if (peek() == ',') {
          ++pos;
          continue;
        }
        if (peek() == ']') {
          ++pos;
          return Value::of_list(std::move(items));
        }
        fail("expected ',' or ']'");
      }
    }
    if (ch == '"') {
      ++pos;
      std::string out;
      while (pos < src.size() && src[pos] != '"') {
        char cur = src[pos];
        if (cur == '\\') {
          ++pos;
          if (pos >= src.size()) fail("dangling escape");
          switch (src[pos]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            default: fail("unknown escape");
          }
        } else {
          out += cur;
        }
        ++pos;
      }
      if (pos >= src.size()) fail("unterminated string");
      ++pos;
      return Value::of_str(std::move(out));
    }
    return Value::of_int(parse_int());
  }
};

}  // namespace

Value parse_value(const std::string& src) {
  ValueCursor cursor{src};
  Value value = cursor.parse();
  if (!cursor.done()) cursor.fail("trailing characters after value");
  return value;
}

std::optional<Value> try_parse_value(const std::string& src) {
  try {
    return parse_value(src);
  } catch (const MarcoError&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// List DSL.
// ---------------------------------------------------------------------------

bool Stage::operator==(const Stage& other) const {
  if (op != other.op) return false;
  switch (op) {
    case StageOp::Take:
    case StageOp::Drop:
    case StageOp::Access:
      return n == other.n;
    case StageOp::Map:
      return fn == other.fn;
    case StageOp::Filter:
    case StageOp::Count:
      return pred == other.pred;
    case StageOp::ZipWith:
    case StageOp::Scanl1:
      return bin == other.bin;
    default:
      return true;
  }
}

DslType stage_output_type(DslType in, const Stage& stage) {
  if (in != DslType::IntList) {
    raise(ErrorKind::TypeError, "stage '" + pretty(ListProgram{{stage}}) +
                                    "' requires an int-list input");
  }
  switch (stage.op) {
    case StageOp::Head:
    case StageOp::Last:
    case StageOp::Sum:
    case StageOp::Minimum:
    case StageOp::Maximum:
    case StageOp::Access:
    case StageOp::Count:
      return DslType::Int;
    default:
      return DslType::IntList;
  }
}

std::string pretty(const ListProgram& program) {
  std::vector<std::string> parts;
  parts.reserve(program.stages.size());
  for (const Stage& stage : program.stages) {
    switch (stage.op) {
      case StageOp::Head: parts.emplace_back("Head"); break;
      case StageOp::Last: parts.emplace_back("Last"); break;
      case StageOp::Reverse: parts.emplace_back("Reverse"); break;
      case StageOp::Sort: parts.emplace_back("Sort"); break;
      case StageOp::Sum: parts.emplace_back("Sum"); break;
      case StageOp::Minimum: parts.emplace_back("Minimum"); break;
      case StageOp::Maximum: parts.emplace_back("Maximum"); break;
      case StageOp::Take: parts.emplace_back("Take(" + std::to_string(stage.n) + ")"); break;
      case StageOp::Drop: parts.emplace_back("Drop(" + std::to_string(stage.n) + ")"); break;
      case StageOp::Access: parts.emplace_back("Access(" + std::to_string(stage.n) + ")"); break;
      case StageOp::Map: parts.emplace_back(std::string("Map(") + unary_token(stage.fn) + ")"); break;
      case StageOp::Filter: parts.emplace_back(std::string("Filter(") + pred_token(stage.pred) + ")"); break;
      case StageOp::Count: parts.emplace_back(std::string("Count(") + pred_token(stage.pred) + ")"); break;
      case StageOp::ZipWith: parts.emplace_back(std::string("ZipWith(") + bin_token(stage.bin) + ")"); break;
      case StageOp::Scanl1: parts.emplace_back(std::string("Scanl1(") + bin_token(stage.bin) + ")"); break;
    }
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += " | ";
    out += parts[i];
  }
  return out;
}

namespace {

struct ListParser {
  const std::string& src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  [[noreturn]] void fail(const std::string& what) {
    raise(ErrorKind::ParseError, what + " at position " + std::to_string(pos));
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < src.size() && std::isalnum(static_cast<unsigned char>(src[pos]))) ++pos;
    if (start == pos) fail("expected stage name");
    return src.substr(start, pos - start);
  }

  std::string arg() {
    skip_ws();
    if (pos >= src.size() || src[pos] != '(') fail("expected '('");
    ++pos;
    std::size_t start = pos;
    int depth = 1;
    while (pos < src.size() && depth > 0) {
      if (src[pos] == '(') ++depth;
      if (src[pos] == ')') --depth;
      ++pos;
    }
    if (depth != 0) fail("unbalanced parentheses");
    std::string inner = src.substr(start, pos - start - 1);
    // trim
    std::size_t b = inner.find_first_not_of(" \t");
    std::size_t e = inner.find_last_not_of(" \t");
    if (b == std::string::npos) fail("empty argument");
    return inner.substr(b, e - b + 1);
  }

  int int_arg(const std::string& raw, int min_value) {
    try {
      std::size_t used = 0;
      long v = std::stol(raw, &used);
      if (used != raw.size()) fail("bad integer argument '" + raw + "'");
      if (v < min_value) fail("argument '" + raw + "' below minimum " + std::to_string(min_value));
      return static_cast<int>(v);
    } catch (const MarcoError&) {
      throw;
    } catch (...) {
      fail("bad integer argument '" + raw + "'");
    }
  }

  UnaryFn unary_arg(const std::string& raw) {
    for (UnaryFn fn : {UnaryFn::Plus1, UnaryFn::Minus1, UnaryFn::Times2, UnaryFn::Times3,
                       UnaryFn::Div2, UnaryFn::Div3, UnaryFn::Negate, UnaryFn::Square}) {
      if (raw == unary_token(fn)) return fn;
    }
    fail("unknown map function '" + raw + "'");
  }

  Pred pred_arg(const std::string& raw) {
    for (Pred pred : {Pred::Gt0, Pred::Lt0, Pred::Even, Pred::Odd}) {
      if (raw == pred_token(pred)) return pred;
    }
    fail("unknown predicate '" + raw + "'");
  }

  BinFn bin_arg(const std::string& raw) {
    for (BinFn fn : {BinFn::Add, BinFn::Sub, BinFn::Mul, BinFn::Min, BinFn::Max}) {
      if (raw == bin_token(fn)) return fn;
    }
    fail("unknown binary function '" + raw + "'");
  }

  Stage stage() {
    std::string name = ident();
    Stage out;
    if (name == "Head") { out.op = StageOp::Head; return out; }
    if (name == "Last") { out.op = StageOp::Last; return out; }
    if (name == "Reverse") { out.op = StageOp::Reverse; return out; }
    if (name == "Sort") { out.op = StageOp::Sort; return out; }
    if (name == "Sum") { out.op = StageOp::Sum; return out; }
    if (name == "Minimum") { out.op = StageOp::Minimum; return out; }
    if (name == "Maximum") { out.op = StageOp::Maximum; return out; }
    if (name == "Take") { out.op = StageOp::Take; out.n = int_arg(arg(), 0); return out; }
    if (name == "Drop") { out.op = StageOp::Drop; out.n = int_arg(arg(), 0); return out; }
    if (name == "Access") { out.op = StageOp::Access; out.n = int_arg(arg(), 1); return out; }
    if (name == "Map") { out.op = StageOp::Map; out.fn = unary_arg(arg()); return out; }
    if (name == "Filter") { out.op = StageOp::Filter; out.pred = pred_arg(arg()); return out; }
    if (name == "Count") { out.op = StageOp::Count; out.pred = pred_arg(arg()); return out; }
    if (name == "ZipWith") { out.op = StageOp::ZipWith; out.bin = bin_arg(arg()); return out; }
    if (name == "Scanl1") { out.op = StageOp::Scanl1; out.bin = bin_arg(arg()); return out; }
    fail("unknown stage '" + name + "'");
  }
};

}  // namespace

ListProgram parse_list_dsl(const std::string& src) {
  ListParser parser{src};
  ListProgram program;
  while (true) {
    program.stages.push_back(parser.stage());
    parser.skip_ws();
    if (parser.pos >= src.size()) break;
    if (src[parser.pos] != '|') parser.fail("expected '|' between stages");
    ++parser.pos;
  }
  // Arity check along the pipeline.
  DslType current = DslType::IntList;
  for (const Stage& stage : program.stages) {
    current = stage_output_type(current, stage);
  }
  return program;
}

EvalResult try_eval_list_dsl(const ListProgram& program, const std::vector<Int>& input) {
  Value current = Value::of_list(input);
  for (const Stage& stage : program.stages) {
    if (current.type != Value::Type::List) {
      return {false, {}, "stage applied to non-list value"};
    }
    const std::vector<Int>& xs = current.list;
    switch (stage.op) {
      case StageOp::Head:
        if (xs.empty()) return {false, {}, "Head on empty list"};
        current = Value::of_int(xs.front());
        break;
      case StageOp::Last:
        if (xs.empty()) return {false, {}, "Last on empty list"};
        current = Value::of_int(xs.back());
        break;
      case StageOp::Reverse: {
        std::vector<Int> out(xs.rbegin(), xs.rend());
        current = Value::of_list(std::move(out));
        break;
      }
      case StageOp::Sort: {
        std::vector<Int> out = xs;
        std::sort(out.begin(), out.end());
        current = Value::of_list(std::move(out));
        break;
      }
      case StageOp::Sum:
        current = Value::of_int(std::accumulate(xs.begin(), xs.end(), Int{0}));
        break;
      case StageOp::Minimum:
        if (xs.empty()) return {false, {}, "Minimum on empty list"};
        current = Value::of_int(*std::min_element(xs.begin(), xs.end()));
        break;
      case StageOp::Maximum:
        if (xs.empty()) return {false, {}, "Maximum on empty list"};
        current = Value::of_int(*std::max_element(xs.begin(), xs.end()));
        break;
      case StageOp::Take: {
        std::size_t n = std::min<std::size_t>(stage.n, xs.size());
        current = Value::of_list(std::vector<Int>(xs.begin(), xs.begin() + n));
        break;
      }
      case StageOp::Drop: {
        std::size_t n = std::min<std::size_t>(stage.n, xs.size());
        current = Value::of_list(std::vector<Int>(xs.begin() + n, xs.end()));
        break;
      }
      case StageOp::Access:
        if (static_cast<std::size_t>(stage.n) > xs.size()) {
          return {false, {}, "Access(" + std::to_string(stage.n) + ") beyond list length"};
        }
        current = Value::of_int(xs[stage.n - 1]);
        break;
      case StageOp::Map: {
        std::vector<Int> out;
        out.reserve(xs.size());
        for (Int x : xs) out.push_back(apply_unary(stage.fn, x));
        current = Value::of_list(std::move(out));
        break;
      }
      case StageOp::Filter: {
        std::vector<Int> out;
        for (Int x : xs) {
          if (apply_pred(stage.pred, x)) out.push_back(x);
        }
        current = Value::of_list(std::move(out));
        break;
      }
      case StageOp::Count: {
        Int count = 0;
        for (Int x : xs) {
          if (apply_pred(stage.pred, x)) ++count;
        }
        current = Value::of_int(count);
        break;
      }
      case StageOp::ZipWith: {
        std::size_t n = std::min(xs.size(), input.size());
        std::vector<Int> out;
        out.reserve(n);
        for (std::size_t idx = 0; idx < n; ++idx) {
          out.push_back(apply_bin(stage.bin, xs[idx], input[idx]));
        }
        current = Value::of_list(std::move(out));
        break;
      }
      case StageOp::Scanl1: {
        std::vector<Int> out;
        out.reserve(xs.size());
        for (std::size_t idx = 0; idx < xs.size(); ++idx) {
          out.push_back(idx == 0 ? xs[0] : apply_bin(stage.bin, out.back(), xs[idx]));
        }
        current = Value::of_list(std::move(out));
        break;
      }
    }
  }
  return {true, std::move(current), ""};
}

Value eval_list_dsl(const ListProgram& program, const std::vector<Int>& input) {
  EvalResult result = try_eval_list_dsl(program, input);
  if (!result.ok) raise(ErrorKind::EvalError, result.error);
  return std::move(result.value);
}

// ---------------------------------------------------------------------------
// String DSL.
// ---------------------------------------------------------------------------

bool StrExpr::operator==(const StrExpr& other) const {
  if (op != other.op) return false;
  switch (op) {
    case StrOp::ConstStr: return s == other.s;
    case StrOp::SubStr: return i == other.i && j == other.j;
    case StrOp::GetToken: return cls == other.cls && k == other.k;
    case StrOp::ToUpper:
    case StrOp::ToLower:
    case StrOp::Trim:
      return (inner && other.inner) ? *inner == *other.inner : inner == other.inner;
    case StrOp::Replace: return s == other.s && s2 == other.s2;
    case StrOp::GetFirstChar: return true;
    case StrOp::GetFrom:
    case StrOp::GetUpto:
      return c == other.c;
  }
  return false;
}

namespace {

std::string quote(const std::string& s) {
  return to_source(Value::of_str(s));
}

void pretty_expr(const StrExpr& expr, std::string& out) {
  switch (expr.op) {
    case StrOp::ConstStr:
      out += "ConstStr(" + quote(expr.s) + ")";
      break;
    case StrOp::SubStr:
      out += "SubStr(" + std::to_string(expr.i) + ", " + std::to_string(expr.j) + ")";
      break;
    case StrOp::GetToken:
      out += std::string("GetToken(") + token_class_token(expr.cls) + ", " +
             std::to_string(expr.k) + ")";
      break;
    case StrOp::ToUpper:
      out += "ToUpper(";
      pretty_expr(*expr.inner, out);
      out += ")";
      break;
    case StrOp::ToLower:
      out += "ToLower(";
      pretty_expr(*expr.inner, out);
      out += ")";
      break;
    case StrOp::Trim:
      out += "Trim(";
      pretty_expr(*expr.inner, out);
      out += ")";
      break;
    case StrOp::Replace:
      out += "Replace(" + quote(expr.s) + ", " + quote(expr.s2) + ")";
      break;
    case StrOp::GetFirstChar:
      out += "GetFirstChar";
      break;
    case StrOp::GetFrom:
      out += "GetFrom(" + quote(std::string(1, expr.c)) + ")";
      break;
    case StrOp::GetUpto:
      out += "GetUpto(" + quote(std::string(1, expr.c)) + ")";
      break;
  }
}

struct StrParser {
  const std::string& src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  [[noreturn]] void fail(const std::string& what) {
    raise(ErrorKind::ParseError, what + " at position " + std::to_string(pos));
  }
  bool eat(char ch) {
    skip_ws();
    if (pos < src.size() && src[pos] == ch) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char ch) {
    if (!eat(ch)) fail(std::string("expected '") + ch + "'");
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < src.size() && std::isalpha(static_cast<unsigned char>(src[pos]))) ++pos;
    if (start == pos) fail("expected expression name");
    return src.substr(start, pos - start);
  }

  std::string string_lit() {
    skip_ws();
    if (pos >= src.size() || src[pos] != '"') fail("expected string literal");
    std::size_t start = pos;
    ++pos;
    while (pos < src.size() && src[pos] != '"') {
      if (src[pos] == '\\') ++pos;
      ++pos;
    }
    if (pos >= src.size()) fail("unterminated string literal");
    ++pos;
    Value v = parse_value(src.substr(start, pos - start));
    return v.str;
  }

  int int_lit() {
    skip_ws();
    std::size_t start = pos;
    if (pos < src.size() && (src[pos] == '-' || src[pos] == '+')) ++pos;
    while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
    if (start == pos) fail("expected integer literal");
    return std::stoi(src.substr(start, pos - start));
  }

  StrExpr expr() {
    std::string name = ident();
    StrExpr out;
    if (name == "ConstStr") {
      out.op = StrOp::ConstStr;
      expect('(');
      out.s = string_lit();
      expect(')');
      return out;
    }
    if (name == "SubStr") {
      out.op = StrOp::SubStr;
      expect('(');
      out.i = int_lit();
      expect(',');
      out.j = int_lit();
      expect(')');
      if (out.i == 0 || out.j == 0) fail("SubStr indices are 1-based and non-zero");
      return out;
    }
    if (name == "GetToken") {
      out.op = StrOp::GetToken;
      expect('(');
      std::string cls = ident();
      if (cls == "word") out.cls = TokenClass::Word;
      else if (cls == "digits") out.cls = TokenClass::Digits;
      else if (cls == "alnum") out.cls = TokenClass::Alnum;
      else fail("unknown token class '" + cls + "'");
      expect(',');
      out.k = int_lit();
      expect(')');
      if (out.k < 1) fail("token index must be >= 1");
      return out;
    }
    if (name == "ToUpper" || name == "ToLower" || name == "Trim") {
      out.op = name == "ToUpper" ? StrOp::ToUpper
             : name == "ToLower" ? StrOp::ToLower
                                 : StrOp::Trim;
      expect('(');
      out.inner = std::make_shared<StrExpr>(expr());
      expect(')');
      return out;
    }
    if (name == "Replace") {
      out.op = StrOp::Replace;
      expect('(');
      out.s = string_lit();
      expect(',');
      out.s2 = string_lit();
      expect(')');
      if (out.s.empty()) fail("Replace pattern must be non-empty");
      return out;
    }
    if (name == "GetFirstChar") {
      out.op = StrOp::GetFirstChar;
      return out;
    }
    if (name == "GetFrom" || name == "GetUpto") {
      out.op = name == "GetFrom" ? StrOp::GetFrom : StrOp::GetUpto;
      expect('(');
      std::string lit = string_lit();
      expect(')');
      if (lit.size() != 1) fail(name + " takes a single character");
      out.c = lit[0];
      return out;
    }
    fail("unknown expression '" + name + "'");
  }
};

std::vector<std::string> tokens_of(const std::string& input, TokenClass cls) {
  auto in_class = [cls](char ch) {
    unsigned char u = static_cast<unsigned char>(ch);
    switch (cls) {
      case TokenClass::Word: return std::isalpha(u) != 0;
      case TokenClass::Digits: return std::isdigit(u) != 0;
      case TokenClass::Alnum: return std::isalnum(u) != 0;
    }
    return false;
  };
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < input.size()) {
    if (!in_class(input[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < input.size() && in_class(input[i])) ++i;
    out.push_back(input.substr(start, i - start));
  }
  return out;
}

struct StrEvalFail {
  std::string reason;
};

std::string eval_expr(const StrExpr& expr, const std::string& input) {
  switch (expr.op) {
    case StrOp::ConstStr:
      return expr.s;
    case StrOp::SubStr: {
      const Int len = static_cast<Int>(input.size());
      Int i = expr.i > 0 ? expr.i : len + 1 + expr.i;
      Int j = expr.j > 0 ? expr.j : len + 1 + expr.j;
      if (i < 1 || j > len || i > j) {
        throw StrEvalFail{"SubStr(" + std::to_string(expr.i) + ", " + std::to_string(expr.j) +
                          ") out of range for length " + std::to_string(len)};
      }
      return input.substr(i - 1, j - i + 1);
    }
    case StrOp::GetToken: {
      std::vector<std::string> toks = tokens_of(input, expr.cls);
      if (static_cast<std::size_t>(expr.k) > toks.size()) {
        throw StrEvalFail{std::string("GetToken(") + token_class_token(expr.cls) + ", " +
                          std::to_string(expr.k) + ") beyond token count " +
                          std::to_string(toks.size())};
      }
      return toks[expr.k - 1];
    }
    case StrOp::ToUpper: {
      std::string out = eval_expr(*expr.inner, input);
      std::transform(out.begin(), out.end(), out.begin(),
                     [](unsigned char ch) { return std::toupper(ch); });
      return out;
    }
    case StrOp::ToLower: {
      std::string out = eval_expr(*expr.inner, input);
      std::transform(out.begin(), out.end(), out.begin(),
                     [](unsigned char ch) { return std::tolower(ch); });
      return out;
    }
    case StrOp::Trim: {
      std::string out = eval_expr(*expr.inner, input);
      std::size_t b = 0, e = out.size();
      while (b < e && std::isspace(static_cast<unsigned char>(out[b]))) ++b;
      while (e > b && std::isspace(static_cast<unsigned char>(out[e - 1]))) --e;
      return out.substr(b, e - b);
    }
    case StrOp::Replace: {
      std::string out;
      std::size_t i = 0;
      while (i < input.size()) {
        if (input.compare(i, expr.s.size(), expr.s) == 0) {
          out += expr.s2;
          i += expr.s.size();
        } else {
          out += input[i];
          ++i;
        }
      }
      return out;
    }
    case StrOp::GetFirstChar:
      if (input.empty()) throw StrEvalFail{"GetFirstChar on empty string"};
      return std::string(1, input[0]);
    case StrOp::GetFrom: {
      std::size_t at = input.find(expr.c);
      if (at == std::string::npos) {
        throw StrEvalFail{std::string("GetFrom: character '") + expr.c + "' not found"};
      }
      return input.substr(at + 1);
    }
    case StrOp::GetUpto: {
      std::size_t at = input.find(expr.c);
      if (at == std::string::npos) {
        throw StrEvalFail{std::string("GetUpto: character '") + expr.c + "' not found"};
      }
      return input.substr(0, at + 1);
    }
  }
  throw StrEvalFail{"unreachable"};
}

}  // namespace

std::string pretty(const StringProgram& program) {
  if (program.exprs.size() == 1) {
    std::string out;
    pretty_expr(program.exprs[0], out);
    return out;
  }
  std::string out = "Concat(";
  for (std::size_t i = 0; i < program.exprs.size(); ++i) {
    if (i > 0) out += ", ";
    pretty_expr(program.exprs[i], out);
  }
  out += ")";
  return out;
}

StringProgram parse_string_dsl(const std::string& src) {
  StrParser parser{src};
  parser.skip_ws();
  StringProgram program;
  // Peek for a top-level Concat; anything else is a single expression.
  if (src.compare(parser.pos, 7, "Concat(") == 0) {
    parser.pos += 6;
    parser.expect('(');
    while (true) {
      program.exprs.push_back(parser.expr());
      if (parser.eat(',')) continue;
      parser.expect(')');
      break;
    }
  } else {
    program.exprs.push_back(parser.expr());
  }
  parser.skip_ws();
  if (parser.pos != src.size()) parser.fail("trailing characters after program");
  if (program.exprs.empty()) parser.fail("empty program");
  return program;
}

StrEvalResult try_eval_string_dsl(const StringProgram& program, const std::string& input) {
  std::string out;
  try {
    for (const StrExpr& expr : program.exprs) {
      out += eval_expr(expr, input);
    }
  } catch (const StrEvalFail& fail) {
    return {false, "", fail.reason};
  }
  return {true, std::move(out), ""};
}

std::string eval_string_dsl(const StringProgram& program, const std::string& input) {
  StrEvalResult result = try_eval_string_dsl(program, input);
  if (!result.ok) raise(ErrorKind::EvalError, result.error);
  return std::move(result.value);
}

}  // namespace marco::dsl
