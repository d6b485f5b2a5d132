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

// Data model for the supported KSY subset: `meta` (id, endian), a top-level
// `seq`, and named user types under `types`. Attributes carry `id`, `type`,
// optional `size` (strings only) and one of `repeat: eos | expr | until`.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ksyawk/expr.hpp"
#include "ksyawk/primitive.hpp"

namespace ksyawk::ksy {

struct Meta {
  std::string id;
  Endian endian = Endian::kLittle;
  bool operator==(const Meta&) const = default;
};

struct PrimitiveType {
  PrimitiveKind kind;
  std::optional<Endian> endian_override;
  bool operator==(const PrimitiveType&) const = default;
};
struct StringType {
  bool operator==(const StringType&) const = default;
};
struct UserType {
  std::string name;
  bool operator==(const UserType&) const = default;
};
using TypeRef = std::variant<PrimitiveType, StringType, UserType>;

struct RepeatNone {
  bool operator==(const RepeatNone&) const = default;
};
struct RepeatEos {
  bool operator==(const RepeatEos&) const = default;
};
struct RepeatCount {
  expr::Expr count;
  bool operator==(const RepeatCount&) const = default;
};
struct RepeatUntil {
  expr::Expr condition;
  bool operator==(const RepeatUntil&) const = default;
};
using RepeatSpec = std::variant<RepeatNone, RepeatEos, RepeatCount, RepeatUntil>;

struct Attr {
  std::string id;
  TypeRef type;
  std::optional<expr::Expr> size;
  RepeatSpec repeat;
  bool operator==(const Attr&) const = default;
};

inline bool is_repeated(const Attr& a) { return !std::holds_alternative<RepeatNone>(a.repeat); }

struct TypeDef {
  std::string name;
  std::vector<Attr> seq;
  bool operator==(const TypeDef&) const = default;
};

struct Schema {
  Meta meta;
  std::vector<Attr> seq;
  std::map<std::string, TypeDef> types;
  bool operator==(const Schema&) const = default;
};

/// Ingest a YAML document. Structural errors only; cross-references are
/// checked by validate_schema.
Schema parse_schema(std::string_view yaml_text);

/// A schema that passed every check. Only validate_schema creates one.
class ValidatedSchema {
 public:
  const Schema& schema() const { return schema_; }
  const Meta& meta() const { return schema_.meta; }
  const TypeDef& type(const std::string& name) const { return schema_.types.at(name); }

  /// Position of `attr_id` in the seq owned by `owner`: a type name, or the
  /// empty string for the top-level seq.
  std::optional<std::size_t> field_index(const std::string& owner, const std::string& attr_id) const;

  bool operator==(const ValidatedSchema& other) const { return schema_ == other.schema_; }

 private:
  friend ValidatedSchema validate_schema(const Schema& s);
  explicit ValidatedSchema(Schema s) : schema_(std::move(s)) {}

  Schema schema_;
  std::map<std::string, std::map<std::string, std::size_t>> fields_;
};

ValidatedSchema validate_schema(const Schema& s);

/// Validation entry point accepted a second time; returns an equal schema.
inline ValidatedSchema validate_schema(const ValidatedSchema& v) { return validate_schema(v.schema()); }

/// parse_schema + validate_schema.
ValidatedSchema load_schema(std::string_view yaml_text);
ValidatedSchema load_schema_file(const std::string& path);

/// `[a-z][a-z0-9_]*`
bool is_identifier(std::string_view s);

}  // namespace ksyawk::ksy
