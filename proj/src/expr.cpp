/*
 * Copyright (c) The ksyawk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ksyawk/expr.hpp"

#include <cctype>
#include <charconv>
#include <limits>

#include "ksyawk/error.hpp"

namespace ksyawk::expr {

std::string_view op_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
    case BinaryOp::kEq: return "==";
    case BinaryOp::kNe: return "!=";
    case BinaryOp::kLt: return "<";
    case BinaryOp::kLe: return "<=";
    case BinaryOp::kGt: return ">";
    case BinaryOp::kGe: return ">=";
  }
  return "?";
}

Expr Expr::int_literal(std::int64_t value) { return Expr(std::make_shared<const ExprNode>(IntLiteral{value})); }
Expr Expr::field_ref(std::string name) { return Expr(std::make_shared<const ExprNode>(FieldRef{std::move(name)})); }
Expr Expr::last_item() { return Expr(std::make_shared<const ExprNode>(LastItem{})); }
Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(Binary{op, std::move(lhs), std::move(rhs)}));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return static_cast<const ExprNode::variant&>(*a.node_) == static_cast<const ExprNode::variant&>(*b.node_);
}

namespace {

enum class Tok { kInt, kIdent, kLast, kOp, kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t column;  // 1-based
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ == src_.size()) {
        out.push_back({Tok::kEnd, {}, pos_ + 1});
        return out;
      }
      const std::size_t start = pos_;
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        out.push_back({Tok::kInt, src_.substr(start, pos_ - start), start + 1});
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          ++pos_;
        }
        std::string_view word = src_.substr(start, pos_ - start);
        if (word == "and" || word == "or" || word == "not") {
          throw ExprSyntaxError(start + 1, "boolean connective '" + std::string(word) + "' is not supported");
        }
        if (word == "_") {
          out.push_back({Tok::kLast, word, start + 1});
        } else {
          out.push_back({Tok::kIdent, word, start + 1});
        }
      } else if (c == '(') {
        ++pos_;
        out.push_back({Tok::kLParen, "(", start + 1});
      } else if (c == ')') {
        ++pos_;
        out.push_back({Tok::kRParen, ")", start + 1});
      } else {
        out.push_back({Tok::kOp, operator_at(start), start + 1});
      }
    }
  }

 private:
  std::string_view operator_at(std::size_t start) {
    static constexpr std::string_view kTwo[] = {"==", "!=", "<=", ">="};
    for (auto op : kTwo) {
      if (src_.substr(start, 2) == op) {
        pos_ += 2;
        return op;
      }
    }
    const char c = src_[start];
    if (c == '&' || c == '|') {
      throw ExprSyntaxError(start + 1, "boolean connectives are not supported");
    }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '<' || c == '>') {
      ++pos_;
      return src_.substr(start, 1);
    }
    throw ExprSyntaxError(start + 1, std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Expr parse_all() {
    if (peek().kind == Tok::kEnd) throw ExprSyntaxError(peek().column, "empty expression");
    Expr e = compare();
    if (peek().kind != Tok::kEnd) {
      throw ExprSyntaxError(peek().column, "unexpected '" + std::string(peek().text) + "'");
    }
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_++]; }

  bool at_op(std::string_view op) const { return peek().kind == Tok::kOp && peek().text == op; }

  Expr compare() {
    Expr lhs = sum();
    while (true) {
      std::optional<BinaryOp> op;
      if (at_op("==")) op = BinaryOp::kEq;
      else if (at_op("!=")) op = BinaryOp::kNe;
      else if (at_op("<")) op = BinaryOp::kLt;
      else if (at_op("<=")) op = BinaryOp::kLe;
      else if (at_op(">")) op = BinaryOp::kGt;
      else if (at_op(">=")) op = BinaryOp::kGe;
      if (!op) return lhs;
      next();
      lhs = Expr::binary(*op, lhs, sum());
    }
  }

  Expr sum() {
    Expr lhs = product();
    while (at_op("+") || at_op("-")) {
      BinaryOp op = next().text == "+" ? BinaryOp::kAdd : BinaryOp::kSub;
      lhs = Expr::binary(op, lhs, product());
    }
    return lhs;
  }

  Expr product() {
    Expr lhs = primary();
    while (at_op("*") || at_op("/")) {
      BinaryOp op = next().text == "*" ? BinaryOp::kMul : BinaryOp::kDiv;
      lhs = Expr::binary(op, lhs, primary());
    }
    return lhs;
  }

  Expr primary() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::kInt:
        return Expr::int_literal(integer(t, false));
      case Tok::kLast:
        return Expr::last_item();
      case Tok::kIdent:
        if (t.text.front() == '_' || std::isupper(static_cast<unsigned char>(t.text.front()))) {
          throw ExprSyntaxError(t.column, "invalid identifier '" + std::string(t.text) + "'");
        }
        for (char c : t.text) {
          if (std::isupper(static_cast<unsigned char>(c))) {
            throw ExprSyntaxError(t.column, "invalid identifier '" + std::string(t.text) + "'");
          }
        }
        return Expr::field_ref(std::string(t.text));
      case Tok::kLParen: {
        Expr inner = compare();
        if (peek().kind != Tok::kRParen) throw ExprSyntaxError(peek().column, "expected ')'");
        next();
        return inner;
      }
      case Tok::kOp:
        if (t.text == "-" && peek().kind == Tok::kInt) return Expr::int_literal(integer(next(), true));
        throw ExprSyntaxError(t.column, "unexpected '" + std::string(t.text) + "'");
      case Tok::kRParen:
        throw ExprSyntaxError(t.column, "unexpected ')'");
      case Tok::kEnd:
        throw ExprSyntaxError(t.column, "unexpected end of expression");
    }
    throw ExprSyntaxError(t.column, "unexpected token");
  }

  static std::int64_t integer(const Token& t, bool negative) {
    std::string_view digits = t.text;
    int base = 10;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
      digits.remove_prefix(2);
      base = 16;
    }
    std::uint64_t magnitude = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), magnitude, base);
    if (ec == std::errc::result_out_of_range) throw ExprSyntaxError(t.column, "integer literal out of range");
    if (ec != std::errc{} || end != digits.data() + digits.size()) {
      throw ExprSyntaxError(t.column, "malformed integer '" + std::string(t.text) + "'");
    }
    constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    if (negative) {
      if (magnitude > kMax + 1) throw ExprSyntaxError(t.column, "integer literal out of range");
      return magnitude == kMax + 1 ? std::numeric_limits<std::int64_t>::min()
                                   : -static_cast<std::int64_t>(magnitude);
    }
    if (magnitude > kMax) throw ExprSyntaxError(t.column, "integer literal out of range");
    return static_cast<std::int64_t>(magnitude);
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

// ---- evaluation ---------------------------------------------------------

[[noreturn]] void mismatch(BinaryOp op, const Value& a, const Value& b) {
  throw ExprEvalError(ExprEvalError::Kind::kTypeMismatch, "cannot apply '" + std::string(op_symbol(op)) + "' to " +
                                                              describe(a) + " and " + describe(b));
}

bool is_comparison(BinaryOp op) {
  return op == BinaryOp::kEq || op == BinaryOp::kNe || op == BinaryOp::kLt || op == BinaryOp::kLe ||
         op == BinaryOp::kGt || op == BinaryOp::kGe;
}

template <typename T>
bool compare(BinaryOp op, const T& a, const T& b) {
  switch (op) {
    case BinaryOp::kEq: return a == b;
    case BinaryOp::kNe: return a != b;
    case BinaryOp::kLt: return a < b;
    case BinaryOp::kLe: return a <= b;
    case BinaryOp::kGt: return a > b;
    case BinaryOp::kGe: return a >= b;
    default: return false;
  }
}

std::int64_t integer_arith(BinaryOp op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  bool overflow = false;
  switch (op) {
    case BinaryOp::kAdd: overflow = __builtin_add_overflow(a, b, &r); break;
    case BinaryOp::kSub: overflow = __builtin_sub_overflow(a, b, &r); break;
    case BinaryOp::kMul: overflow = __builtin_mul_overflow(a, b, &r); break;
    case BinaryOp::kDiv:
      if (b == 0) throw ExprEvalError(ExprEvalError::Kind::kDivisionByZero, "division by zero");
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1) {
        overflow = true;
      } else {
        r = a / b;
      }
      break;
    default: break;
  }
  if (overflow) {
    throw ExprEvalError(ExprEvalError::Kind::kOverflow,
                        "integer overflow in " + std::to_string(a) + " " + std::string(op_symbol(op)) + " " +
                            std::to_string(b));
  }
  return r;
}

double float_arith(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::kAdd: return a + b;
    case BinaryOp::kSub: return a - b;
    case BinaryOp::kMul: return a * b;
    case BinaryOp::kDiv:
      if (b == 0.0) throw ExprEvalError(ExprEvalError::Kind::kDivisionByZero, "division by zero");
      return a / b;
    default: return 0.0;
  }
}

std::optional<double> as_number(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

Value apply(BinaryOp op, const Value& a, const Value& b) {
  if (std::holds_alternative<Composite>(a) || std::holds_alternative<Composite>(b)) mismatch(op, a, b);

  const auto* ia = std::get_if<std::int64_t>(&a);
  const auto* ib = std::get_if<std::int64_t>(&b);
  if (ia && ib) {
    if (is_comparison(op)) return compare(op, *ia, *ib);
    return integer_arith(op, *ia, *ib);
  }
  auto na = as_number(a);
  auto nb = as_number(b);
  if (na && nb) {
    if (is_comparison(op)) return compare(op, *na, *nb);
    return float_arith(op, *na, *nb);
  }
  if (!is_comparison(op) || a.index() != b.index()) mismatch(op, a, b);
  if (auto ba = std::get_if<bool>(&a)) return compare(op, *ba, std::get<bool>(b));
  // Text: std::string ordering compares char_traits<char>, which is bytewise
  // on unsigned values.
  return compare(op, std::get<std::string>(a), std::get<std::string>(b));
}

void collect_refs(const Expr& e, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, FieldRef>) {
          for (const auto& s : out) {
            if (s == n.name) return;
          }
          out.push_back(n.name);
        } else if constexpr (std::is_same_v<N, Binary>) {
          collect_refs(n.lhs, out);
          collect_refs(n.rhs, out);
        }
      },
      static_cast<const ExprNode::variant&>(e.node()));
}

}  // namespace

std::string describe(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return "integer " + std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return "float " + std::to_string(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "boolean true" : "boolean false";
        else if constexpr (std::is_same_v<T, std::string>) return "text \"" + x + "\"";
        else return "user-type record";
      },
      v);
}

Expr parse_expr(std::string_view text) {
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.parse_all();
}

std::string render(const Expr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, IntLiteral>) return std::to_string(n.value);
        else if constexpr (std::is_same_v<N, FieldRef>) return n.name;
        else if constexpr (std::is_same_v<N, LastItem>) return "_";
        else return "(" + render(n.lhs) + " " + std::string(op_symbol(n.op)) + " " + render(n.rhs) + ")";
      },
      static_cast<const ExprNode::variant&>(e.node()));
}

Value eval_expr(const Expr& e, const Scope& scope) {
  return std::visit(
      [&](const auto& n) -> Value {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, IntLiteral>) {
          return n.value;
        } else if constexpr (std::is_same_v<N, FieldRef>) {
          if (scope.unrepresentable.count(n.name)) {
            throw ExprEvalError(ExprEvalError::Kind::kOverflow,
                                "field '" + n.name + "' holds a value outside signed 64-bit range");
          }
          auto it = scope.bindings.find(n.name);
          if (it == scope.bindings.end()) {
            throw ExprEvalError(ExprEvalError::Kind::kUnbound, "unbound field '" + n.name + "'");
          }
          return it->second;
        } else if constexpr (std::is_same_v<N, LastItem>) {
          if (!scope.last_item) throw ExprEvalError(ExprEvalError::Kind::kNoLastItem, "'_' has no binding here");
          return *scope.last_item;
        } else {
          Value lhs = eval_expr(n.lhs, scope);
          Value rhs = eval_expr(n.rhs, scope);
          return apply(n.op, lhs, rhs);
        }
      },
      static_cast<const ExprNode::variant&>(e.node()));
}

std::vector<std::string> field_refs(const Expr& e) {
  std::vector<std::string> out;
  collect_refs(e, out);
  return out;
}

bool uses_last_item(const Expr& e) {
  return std::visit(
      [](const auto& n) -> bool {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, LastItem>) return true;
        else if constexpr (std::is_same_v<N, Binary>) return uses_last_item(n.lhs) || uses_last_item(n.rhs);
        else return false;
      },
      static_cast<const ExprNode::variant&>(e.node()));
}

}  // namespace ksyawk::expr
