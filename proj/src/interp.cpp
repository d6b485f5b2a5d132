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

#include "ksyawk/interp.hpp"

#include <bit>
#include <fstream>
#include <limits>

#include "ksyawk/error.hpp"
#include "ksyawk/utf8.hpp"

namespace ksyawk::interp {

std::string mangle_name(std::string_view owning_type_id, std::string_view attr_id) {
  std::string out;
  out.reserve(owning_type_id.size() + 4 + attr_id.size());
  out.append(owning_type_id).append("A__Z").append(attr_id);
  return out;
}

std::span<const std::uint8_t> Cursor::take(std::size_t n, const std::string& what) {
  if (n > remaining()) {
    throw ParseError(ParseError::Kind::kTruncated, what, pos_,
                     "truncated stream: need " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                         " remaining");
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

namespace {

Scalar decode(std::span<const std::uint8_t> bytes, PrimitiveKind kind, Endian endian) {
  std::uint64_t bits = 0;
  const std::size_t w = bytes.size();
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t shift = endian == Endian::kLittle ? 8 * i : 8 * (w - 1 - i);
    bits |= std::uint64_t{bytes[i]} << shift;
  }
  if (kind == PrimitiveKind::kF4) return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)));
  if (kind == PrimitiveKind::kF8) return std::bit_cast<double>(bits);
  if (is_signed(kind)) {
    const unsigned shift = static_cast<unsigned>(64 - 8 * w);
    return static_cast<std::int64_t>(bits << shift) >> shift;
  }
  return bits;
}

Scalar read_primitive_at(Cursor& c, PrimitiveKind kind, Endian endian, const std::string& what) {
  return decode(c.take(width(kind), what), kind, endian);
}

}  // namespace

Scalar read_primitive(Cursor& c, PrimitiveKind kind, Endian endian) {
  return read_primitive_at(c, kind, endian, std::string(primitive_name(kind)));
}

// ---- compilation --------------------------------------------------------

namespace {

class Compiler {
 public:
  Compiler(const ksy::ValidatedSchema& s, NamingMode naming, LayoutPlan& plan)
      : schema_(s), naming_(naming), plan_(plan) {}

  void run() {
    layout::LayoutTree& tree = plan_.tree;
    const layout::NodeId root = tree.add_record();
    for (const auto& a : schema_.schema().seq) {
      AttrPlan p = attr(a, schema_.meta().id, a.id);
      const layout::NodeId field = p.list_node >= 0 ? p.list_node : p.value_node;
      tree.add_field(root, p.field_name, field);
      plan_.root_attrs.push_back(std::move(p));
    }
  }

 private:
  AttrPlan attr(const ksy::Attr& a, const std::string& owner, const std::string& path) {
    layout::LayoutTree& tree = plan_.tree;
    AttrPlan p;
    p.field_name = naming_ == NamingMode::kMangled ? mangle_name(owner, a.id) : a.id;
    if (ksy::is_repeated(a)) p.list_node = tree.add_list_offset();

    if (const auto* prim = std::get_if<ksy::PrimitiveType>(&a.type)) {
      p.value_node = tree.add_numeric(prim->kind);
    } else if (std::holds_alternative<ksy::StringType>(a.type)) {
      p.value_node = tree.add_string();
    } else {
      const std::string& name = std::get<ksy::UserType>(a.type).name;
      p.value_node = tree.add_record();
      for (const auto& child : schema_.type(name).seq) {
        AttrPlan c = attr(child, name, path + "." + child.id);
        tree.add_field(p.value_node, c.field_name, c.list_node >= 0 ? c.list_node : c.value_node);
        p.children.push_back(std::move(c));
      }
    }
    if (p.list_node >= 0) tree.set_content(p.list_node, p.value_node);
    plan_.attr_map[path] = p.value_node;
    return p;
  }

  const ksy::ValidatedSchema& schema_;
  NamingMode naming_;
  LayoutPlan& plan_;
};

}  // namespace

LayoutPlan compile_layout(const ksy::ValidatedSchema& s, NamingMode naming) {
  LayoutPlan plan;
  plan.naming = naming;
  Compiler(s, naming, plan).run();
  plan.tree.check();
  plan.form = layout::to_form(plan.tree);
  return plan;
}

// ---- interpretation -----------------------------------------------------

namespace {

// Upper bound on repetitions whose elements occupy no bytes; such loops
// cannot be bounded by the input size.
constexpr std::int64_t kMaxZeroWidthRepeat = std::int64_t{1} << 24;

struct Element {
  expr::Value value;
  bool unrepresentable = false;
};

class Interpreter {
 public:
  Interpreter(const LayoutPlan& plan, const ksy::ValidatedSchema& s, std::span<const std::uint8_t> raw)
      : plan_(plan), schema_(s), cursor_(raw, s.meta().endian), fl_(plan.tree) {}

  layout::FilledLayout run() && {
    parse_seq(schema_.schema().seq, plan_.root_attrs, "");
    fl_.end_record(0);
    if (!cursor_.eof()) {
      throw ParseError(ParseError::Kind::kTrailingBytes, schema_.meta().id, cursor_.pos(),
                       std::to_string(cursor_.remaining()) + " trailing bytes after the top-level seq");
    }
    return std::move(fl_);
  }

 private:
  static std::string join(const std::string& prefix, const std::string& name) {
    return prefix.empty() ? name : prefix + "." + name;
  }
  static std::string indexed(const std::string& path, std::int64_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

  expr::Value eval(const expr::Expr& e, const expr::Scope& scope, const std::string& path, const char* what) {
    try {
      return expr::eval_expr(e, scope);
    } catch (const ExprEvalError& err) {
      throw ParseError(ParseError::Kind::kExpression, path, cursor_.pos(), std::string(what) + ": " + err.what());
    }
  }

  std::int64_t eval_amount(const expr::Expr& e, const expr::Scope& scope, const std::string& path, const char* what) {
    expr::Value v = eval(e, scope, path, what);
    const auto* n = std::get_if<std::int64_t>(&v);
    if (!n) {
      throw ParseError(ParseError::Kind::kExpression, path, cursor_.pos(),
                       std::string(what) + " must be an integer, got " + expr::describe(v));
    }
    if (*n < 0) {
      throw ParseError(ParseError::Kind::kNegativeCount, path, cursor_.pos(),
                       std::string(what) + " is negative (" + std::to_string(*n) + ")");
    }
    return *n;
  }

  void parse_seq(const std::vector<ksy::Attr>& seq, const std::vector<AttrPlan>& plans, const std::string& prefix) {
    expr::Scope scope;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const ksy::Attr& a = seq[i];
      const AttrPlan& p = plans[i];
      const std::string path = join(prefix, p.field_name);

      std::visit(
          [&](const auto& rep) {
            using R = std::decay_t<decltype(rep)>;
            if constexpr (std::is_same_v<R, ksy::RepeatNone>) {
              Element e = element(a, p, scope, path);
              if (e.unrepresentable) {
                scope.unrepresentable.insert(a.id);
              } else {
                scope.bindings[a.id] = std::move(e.value);
              }
            } else if constexpr (std::is_same_v<R, ksy::RepeatEos>) {
              fl_.begin_list(p.list_node);
              for (std::int64_t k = 0; !cursor_.eof(); ++k) {
                const std::size_t start = cursor_.pos();
                element(a, p, scope, indexed(path, k));
                if (cursor_.pos() == start) {
                  throw ParseError(ParseError::Kind::kNoProgress, indexed(path, k), start,
                                   "repeat: eos element consumed no bytes");
                }
              }
              fl_.end_list(p.list_node);
            } else if constexpr (std::is_same_v<R, ksy::RepeatCount>) {
              const std::int64_t n = eval_amount(rep.count, scope, path, "repeat-expr");
              fl_.begin_list(p.list_node);
              for (std::int64_t k = 0; k < n; ++k) {
                const std::size_t start = cursor_.pos();
                element(a, p, scope, indexed(path, k));
                if (k == 0 && cursor_.pos() == start && n > kMaxZeroWidthRepeat) {
                  throw ParseError(ParseError::Kind::kNoProgress, path, start,
                                   "repeat-expr count " + std::to_string(n) + " of zero-width elements exceeds " +
                                       std::to_string(kMaxZeroWidthRepeat));
                }
              }
              fl_.end_list(p.list_node);
            } else {
              fl_.begin_list(p.list_node);
              for (std::int64_t k = 0;; ++k) {
                const std::size_t start = cursor_.pos();
                const std::string item_path = indexed(path, k);
                Element e = element(a, p, scope, item_path);
                if (e.unrepresentable) {
                  throw ParseError(ParseError::Kind::kExpression, item_path, start,
                                   "repeat-until: element is outside signed 64-bit range and cannot bind '_'");
                }
                scope.last_item = std::move(e.value);
                expr::Value done = eval(rep.condition, scope, item_path, "repeat-until");
                const bool* b = std::get_if<bool>(&done);
                if (!b) {
                  throw ParseError(ParseError::Kind::kBadCondition, item_path, cursor_.pos(),
                                   "repeat-until condition must be boolean, got " + expr::describe(done));
                }
                if (*b) break;
                if (cursor_.pos() == start) {
                  throw ParseError(ParseError::Kind::kNoProgress, item_path, start,
                                   "repeat-until element consumed no bytes and the condition stayed false");
                }
              }
              scope.last_item.reset();
              fl_.end_list(p.list_node);
            }
          },
          a.repeat);
    }
  }

  Element element(const ksy::Attr& a, const AttrPlan& p, const expr::Scope& scope, const std::string& path) {
    if (const auto* prim = std::get_if<ksy::PrimitiveType>(&a.type)) {
      const Endian endian = prim->endian_override.value_or(cursor_.default_endian());
      const Scalar v = read_primitive_at(cursor_, prim->kind, endian, path);
      fl_.append_numeric(p.value_node, v);
      if (const auto* u = std::get_if<std::uint64_t>(&v)) {
        if (*u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) return {std::int64_t{0}, true};
        return {static_cast<std::int64_t>(*u)};
      }
      if (const auto* s = std::get_if<std::int64_t>(&v)) return {*s};
      return {std::get<double>(v)};
    }

    if (std::holds_alternative<ksy::StringType>(a.type)) {
      const std::int64_t size = eval_amount(*a.size, scope, path, "size");
      const std::size_t start = cursor_.pos();
      if (static_cast<std::uint64_t>(size) > cursor_.remaining()) {
        throw ParseError(ParseError::Kind::kTruncated, path, start,
                         "truncated stream: str needs " + std::to_string(size) + " bytes, " +
                             std::to_string(cursor_.remaining()) + " remaining");
      }
      auto bytes = cursor_.take(static_cast<std::size_t>(size), path);
      std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      if (!is_valid_utf8(text)) throw ParseError(ParseError::Kind::kInvalidUtf8, path, start, "invalid UTF-8 in str");
      fl_.append_string(p.value_node, text);
      return {std::move(text)};
    }

    const ksy::TypeDef& t = schema_.type(std::get<ksy::UserType>(a.type).name);
    parse_seq(t.seq, p.children, path);
    fl_.end_record(p.value_node);
    return {expr::Composite{}};
  }

  const LayoutPlan& plan_;
  const ksy::ValidatedSchema& schema_;
  Cursor cursor_;
  layout::FilledLayout fl_;
};

}  // namespace

layout::FilledLayout parse_data(const LayoutPlan& plan, const ksy::ValidatedSchema& s,
                                std::span<const std::uint8_t> raw) {
  return Interpreter(plan, s, raw).run();
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) throw IoError(path.string(), "is a directory, not a data file");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open data file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  return bytes;
}

layout::FilledLayout parse_file(const LayoutPlan& plan, const ksy::ValidatedSchema& s,
                                const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_data(plan, s, bytes);
}

}  // namespace ksyawk::interp
