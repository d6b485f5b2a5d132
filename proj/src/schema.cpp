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

#include "ksyawk/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ksyawk/error.hpp"

namespace ksyawk::ksy {
namespace {

using Kind = SchemaError::Kind;

std::string location(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return {};
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Keys from the full KSY language that this subset deliberately refuses.
std::string unsupported_reason(const std::string& key) {
  if (key == "encoding") return "'encoding' is not supported; strings are always UTF-8";
  static const std::set<std::string> kFeatures = {
      "if",        "contents", "enum",       "enums",   "instances", "process", "terminator", "consume",
      "include",   "eos-error", "pad-right", "size-eos", "params",   "imports", "switch-on",  "doc",
      "doc-ref",   "valid",     "value",     "pos",     "io",        "-orig-id"};
  if (kFeatures.count(key)) return "unsupported KSY feature '" + key + "'";
  return "unknown key '" + key + "'";
}

class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node.IsMap()) {
      throw SchemaError(Kind::kMalformed, path_, "expected a mapping" + location(node));
    }
    std::set<std::string> seen;
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (!it->first.IsScalar()) {
        throw SchemaError(Kind::kMalformed, path_, "mapping keys must be scalars" + location(it->first));
      }
      const std::string key = it->first.Scalar();
      if (!seen.insert(key).second) {
        throw SchemaError(Kind::kMalformed, join(path_, key), "duplicate key" + location(it->first));
      }
      if (!allowed.count(key)) {
        throw SchemaError(Kind::kUnknownKey, join(path_, key), unsupported_reason(key) + location(it->first));
      }
    }
  }

  YAML::Node get(const std::string& key) const { return node_[key]; }
  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  YAML::Node require(const std::string& key) const {
    YAML::Node n = node_[key];
    if (!n) throw SchemaError(Kind::kMissingKey, join(path_, key), "missing mandatory key" + location(node_));
    return n;
  }

  std::string scalar(const std::string& key) const { return as_scalar(require(key), join(path_, key)); }

  static std::string as_scalar(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) throw SchemaError(Kind::kMalformed, path, "expected a scalar" + location(n));
    return n.Scalar();
  }

  const std::string& path() const { return path_; }

 private:
  YAML::Node node_;
  std::string path_;
};

expr::Expr parse_expression(const YAML::Node& n, const std::string& path) {
  const std::string text = MapReader::as_scalar(n, path);
  try {
    return expr::parse_expr(text);
  } catch (const ExprSyntaxError& e) {
    throw SchemaError(Kind::kExpression, path, "invalid expression '" + text + "': " + e.what() + location(n));
  }
}

TypeRef parse_type_ref(const std::string& text, const std::string& path, const YAML::Node& where) {
  if (text == "str") return StringType{};

  std::string_view base = text;
  std::optional<Endian> endian;
  if (base.size() > 2 && (base.ends_with("le") || base.ends_with("be"))) {
    endian = base.ends_with("le") ? Endian::kLittle : Endian::kBig;
    base.remove_suffix(2);
  }
  if (auto kind = primitive_from_name(base)) {
    if (endian && width(*kind) == 1) {
      throw SchemaError(Kind::kUnknownPrimitive, path,
                        "single-byte type '" + text + "' takes no endianness suffix" + location(where));
    }
    return PrimitiveType{*kind, endian};
  }
  // Anything spelled like a numeric primitive but not one of ours is a typo,
  // not a user type.
  const bool looks_primitive = !text.empty() && (text[0] == 'u' || text[0] == 's' || text[0] == 'f' || text[0] == 'b') &&
                               text.size() >= 2 && std::isdigit(static_cast<unsigned char>(text[1]));
  if (looks_primitive || text == "strz" || text == "bytes") {
    throw SchemaError(Kind::kUnknownPrimitive, path, "unrecognized primitive type '" + text + "'" + location(where));
  }
  return UserType{text};
}

Attr parse_attr(const YAML::Node& node, const std::string& path) {
  MapReader m(node, path, {"id", "type", "size", "repeat", "repeat-expr", "repeat-until"});
  Attr a;
  a.id = m.scalar("id");
  YAML::Node type_node = m.require("type");
  a.type = parse_type_ref(MapReader::as_scalar(type_node, join(path, "type")), join(path, "type"), type_node);

  if (m.has("size")) {
    if (std::holds_alternative<PrimitiveType>(a.type)) {
      throw SchemaError(Kind::kSizeMisuse, join(path, "size"),
                        "'size' is only valid on str attributes" + location(m.get("size")));
    }
    a.size = parse_expression(m.get("size"), join(path, "size"));
  } else if (std::holds_alternative<StringType>(a.type)) {
    throw SchemaError(Kind::kSizeMisuse, path, "str attribute requires 'size'" + location(node));
  }

  a.repeat = RepeatNone{};
  std::string repeat;
  if (m.has("repeat")) repeat = MapReader::as_scalar(m.get("repeat"), join(path, "repeat"));
  if (m.has("repeat-expr") && repeat != "expr") {
    throw SchemaError(Kind::kMalformed, join(path, "repeat-expr"), "'repeat-expr' requires 'repeat: expr'");
  }
  if (m.has("repeat-until") && repeat != "until") {
    throw SchemaError(Kind::kMalformed, join(path, "repeat-until"), "'repeat-until' requires 'repeat: until'");
  }
  if (repeat == "eos") {
    a.repeat = RepeatEos{};
  } else if (repeat == "expr") {
    a.repeat = RepeatCount{parse_expression(m.require("repeat-expr"), join(path, "repeat-expr"))};
  } else if (repeat == "until") {
    a.repeat = RepeatUntil{parse_expression(m.require("repeat-until"), join(path, "repeat-until"))};
  } else if (m.has("repeat")) {
    throw SchemaError(Kind::kMalformed, join(path, "repeat"),
                      "repeat must be one of eos, expr, until, got '" + repeat + "'" + location(m.get("repeat")));
  }
  return a;
}

std::vector<Attr> parse_seq(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw SchemaError(Kind::kMalformed, path, "expected a sequence" + location(node));
  std::vector<Attr> seq;
  for (std::size_t i = 0; i < node.size(); ++i) seq.push_back(parse_attr(node[i], index_path(path, i)));
  return seq;
}

// ---- validation ---------------------------------------------------------

struct SeqRef {
  std::string owner;  // empty for top level
  std::string path;   // "seq" or "types.x.seq"
  const std::vector<Attr>* seq;
};

void check_identifier(const std::string& id, const std::string& path) {
  if (!is_identifier(id)) {
    throw SchemaError(Kind::kMalformed, path, "invalid identifier '" + id + "' (expected [a-z][a-z0-9_]*)");
  }
}

void check_expr_refs(const expr::Expr& e, const std::vector<Attr>& seq, std::size_t self, bool allow_last,
                     const std::string& path) {
  if (!allow_last && expr::uses_last_item(e)) {
    throw SchemaError(Kind::kLastItemMisuse, path, "'_' is only valid inside repeat-until");
  }
  for (const auto& name : expr::field_refs(e)) {
    auto it = std::find_if(seq.begin(), seq.end(), [&](const Attr& a) { return a.id == name; });
    if (it == seq.end()) throw SchemaError(Kind::kBadReference, path, "reference to unknown field '" + name + "'");
    auto idx = static_cast<std::size_t>(it - seq.begin());
    if (idx >= self) {
      throw SchemaError(Kind::kBadReference, path,
                        "forward reference to '" + name + "', which is not parsed before '" + seq[self].id + "'");
    }
    if (is_repeated(*it)) {
      throw SchemaError(Kind::kBadReference, path, "'" + name + "' is a repeated attribute and has no scalar value");
    }
  }
}

void check_seq(const SeqRef& ref, const Schema& s) {
  if (ref.seq->empty()) throw SchemaError(Kind::kMalformed, ref.path, "seq must not be empty");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < ref.seq->size(); ++i) {
    const Attr& a = (*ref.seq)[i];
    const std::string path = index_path(ref.path, i);
    check_identifier(a.id, join(path, "id"));
    if (!ids.insert(a.id).second) throw SchemaError(Kind::kMalformed, join(path, "id"), "duplicate id '" + a.id + "'");

    if (auto u = std::get_if<UserType>(&a.type)) {
      if (!s.types.count(u->name)) {
        throw SchemaError(Kind::kUnresolvedType, join(path, "type"), "unresolved user type '" + u->name + "'");
      }
      if (a.size) {
        throw SchemaError(Kind::kSizeMisuse, join(path, "size"),
                          "'size' on user types (substreams) is not supported");
      }
    }
    if (std::holds_alternative<StringType>(a.type) != a.size.has_value()) {
      throw SchemaError(Kind::kSizeMisuse, path,
                        a.size ? "'size' is only valid on str attributes" : "str attribute requires 'size'");
    }
    if (a.size) check_expr_refs(*a.size, *ref.seq, i, false, join(path, "size"));
    if (auto c = std::get_if<RepeatCount>(&a.repeat)) {
      check_expr_refs(c->count, *ref.seq, i, false, join(path, "repeat-expr"));
    }
    if (auto u = std::get_if<RepeatUntil>(&a.repeat)) {
      check_expr_refs(u->condition, *ref.seq, i, true, join(path, "repeat-until"));
    }
  }
}

void check_cycles(const Schema& s) {
  enum class Mark { kNone, kActive, kDone };
  std::map<std::string, Mark> marks;
  std::vector<std::string> stack;

  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    Mark& m = marks[name];
    if (m == Mark::kDone) return;
    if (m == Mark::kActive) {
      auto start = std::find(stack.begin(), stack.end(), name);
      std::string cycle;
      for (auto it = start; it != stack.end(); ++it) cycle += *it + " → ";
      cycle += name;
      throw SchemaError(Kind::kTypeCycle, "types." + *start, "type cycle: " + cycle);
    }
    m = Mark::kActive;
    stack.push_back(name);
    for (const auto& a : s.types.at(name).seq) {
      if (auto u = std::get_if<UserType>(&a.type)) visit(u->name);
    }
    stack.pop_back();
    marks[name] = Mark::kDone;
  };
  for (const auto& [name, _] : s.types) visit(name);
}

// Eos is measured against the whole input, so it cannot sit underneath a
// repetition: the inner loop would swallow everything on its first pass.
void check_nested_eos(const Schema& s, const std::vector<Attr>& seq, const std::string& path, bool repeated) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Attr& a = seq[i];
    const std::string p = index_path(path, i);
    if (repeated && std::holds_alternative<RepeatEos>(a.repeat)) {
      throw SchemaError(Kind::kNestedEos, join(p, "repeat"),
                        "repeat: eos is not allowed inside a repeated user type (no substreams)");
    }
    if (auto u = std::get_if<UserType>(&a.type)) {
      check_nested_eos(s, s.types.at(u->name).seq, "types." + u->name + ".seq", repeated || is_repeated(a));
    }
  }
}

}  // namespace

bool is_identifier(std::string_view s) {
  if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

Schema parse_schema(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw SchemaError(Kind::kYaml, "",
                      "malformed YAML at line " + std::to_string(e.mark.line + 1) + ", column " +
                          std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw SchemaError(Kind::kMalformed, "", "document must be a mapping");

  MapReader top(root, "", {"meta", "seq", "types"});
  Schema s;

  MapReader meta(top.require("meta"), "meta", {"id", "endian"});
  s.meta.id = meta.scalar("id");
  if (!meta.has("endian")) {
    throw SchemaError(Kind::kMissingKey, "meta.endian", "missing mandatory key (no default byte order is assumed)");
  }
  const std::string endian = meta.scalar("endian");
  if (endian == "le") {
    s.meta.endian = Endian::kLittle;
  } else if (endian == "be") {
    s.meta.endian = Endian::kBig;
  } else {
    throw SchemaError(Kind::kMalformed, "meta.endian", "endian must be 'le' or 'be', got '" + endian + "'");
  }

  s.seq = parse_seq(top.require("seq"), "seq");

  if (top.has("types")) {
    YAML::Node types = top.get("types");
    if (!types.IsMap()) throw SchemaError(Kind::kMalformed, "types", "expected a mapping" + location(types));
    for (auto it = types.begin(); it != types.end(); ++it) {
      const std::string name = it->first.Scalar();
      const std::string path = "types." + name;
      MapReader def(it->second, path, {"seq"});
      TypeDef t;
      t.name = name;
      t.seq = parse_seq(def.require("seq"), path + ".seq");
      s.types.emplace(name, std::move(t));
    }
  }
  return s;
}

ValidatedSchema validate_schema(const Schema& s) {
  check_identifier(s.meta.id, "meta.id");
  for (const auto& [name, t] : s.types) {
    check_identifier(name, "types." + name);
    if (t.name != name) throw SchemaError(Kind::kMalformed, "types." + name, "type name mismatch '" + t.name + "'");
  }

  std::vector<SeqRef> seqs{{"", "seq", &s.seq}};
  for (const auto& [name, t] : s.types) seqs.push_back({name, "types." + name + ".seq", &t.seq});
  for (const auto& ref : seqs) check_seq(ref, s);

  check_cycles(s);
  check_nested_eos(s, s.seq, "seq", false);

  ValidatedSchema v(s);
  for (const auto& ref : seqs) {
    auto& table = v.fields_[ref.owner];
    for (std::size_t i = 0; i < ref.seq->size(); ++i) table.emplace((*ref.seq)[i].id, i);
  }
  return v;
}

std::optional<std::size_t> ValidatedSchema::field_index(const std::string& owner, const std::string& attr_id) const {
  auto seq = fields_.find(owner);
  if (seq == fields_.end()) return std::nullopt;
  auto it = seq->second.find(attr_id);
  if (it == seq->second.end()) return std::nullopt;
  return it->second;
}

ValidatedSchema load_schema(std::string_view yaml_text) { return validate_schema(parse_schema(yaml_text)); }

ValidatedSchema load_schema_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open KSY file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(path, "read failed");
  return load_schema(buf.str());
}

}  // namespace ksyawk::ksy
