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

#pragma once

// Expression language for `size`, `repeat-expr` and `repeat-until`.
//
//   expr    := compare
//   compare := sum (('==' | '!=' | '<' | '<=' | '>' | '>=') sum)*
//   sum     := product (('+' | '-') product)*
//   product := primary (('*' | '/') primary)*
//   primary := integer | '-' integer | identifier | '_' | '(' expr ')'
//
// Integers are decimal or 0x-prefixed hex. All binary operators are left
// associative. There are no boolean connectives.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ksyawk::expr {

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kEq, kNe, kLt, kLe, kGt, kGe };

std::string_view op_symbol(BinaryOp op);

struct ExprNode;

/// Immutable, cheaply copyable expression tree.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  static Expr int_literal(std::int64_t value);
  static Expr field_ref(std::string name);
  static Expr last_item();
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  const ExprNode& node() const { return *node_; }
  bool empty() const { return node_ == nullptr; }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  std::shared_ptr<const ExprNode> node_;
};

struct IntLiteral {
  std::int64_t value;
  bool operator==(const IntLiteral&) const = default;
};
struct FieldRef {
  std::string name;
  bool operator==(const FieldRef&) const = default;
};
struct LastItem {
  bool operator==(const LastItem&) const = default;
};
struct Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
  bool operator==(const Binary&) const = default;
};

struct ExprNode : std::variant<IntLiteral, FieldRef, LastItem, Binary> {
  using variant::variant;
};

/// Marker for a parsed user-type record; carries nothing usable by arithmetic.
struct Composite {
  bool operator==(const Composite&) const = default;
};

using Value = std::variant<std::int64_t, double, bool, std::string, Composite>;

std::string describe(const Value& v);

struct Scope {
  std::map<std::string, Value, std::less<>> bindings;
  /// Fields that were parsed but hold an integer outside signed 64-bit range.
  std::set<std::string, std::less<>> unrepresentable;
  std::optional<Value> last_item;
};

Expr parse_expr(std::string_view text);

/// Fully parenthesized rendering; parse_expr(render(e)) == e.
std::string render(const Expr& e);

Value eval_expr(const Expr& e, const Scope& scope);

/// Every FieldRef name in `e`, in first-occurrence order.
std::vector<std::string> field_refs(const Expr& e);
bool uses_last_item(const Expr& e);

}  // namespace ksyawk::expr
