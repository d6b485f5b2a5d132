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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ksyawk/error.hpp"
#include "ksyawk/schema.hpp"

namespace ksyawk::ksy {
namespace {

using Kind = SchemaError::Kind;
using testing::read_text;
using testing::testdata;

std::string animal_text() { return read_text(testdata("animal.ksy")); }

SchemaError::Kind parse_error_kind(const std::string& text) {
  try {
    parse_schema(text);
  } catch (const SchemaError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "document accepted:\n" << text;
  return Kind::kYaml;
}

SchemaError load_error(const std::string& text) {
  try {
    load_schema(text);
  } catch (const SchemaError& e) {
    return e;
  }
  ADD_FAILURE() << "document accepted:\n" << text;
  return SchemaError(Kind::kYaml, "", "");
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

TEST(ParseSchema, AnimalDocument) {
  Schema s = parse_schema(animal_text());
  EXPECT_EQ(s.meta, (Meta{"animal", Endian::kLittle}));
  ASSERT_EQ(s.seq.size(), 1u);
  EXPECT_EQ(s.seq[0], (Attr{"entry", UserType{"animal_entry"}, std::nullopt, RepeatEos{}}));
  ASSERT_EQ(s.types.count("animal_entry"), 1u);

  const TypeDef& t = s.types.at("animal_entry");
  std::vector<Attr> expected = {
      {"str_len", PrimitiveType{PrimitiveKind::kU1, std::nullopt}, std::nullopt, RepeatNone{}},
      {"species", StringType{}, expr::Expr::field_ref("str_len"), RepeatNone{}},
      {"age", PrimitiveType{PrimitiveKind::kU1, std::nullopt}, std::nullopt, RepeatNone{}},
      {"weight", PrimitiveType{PrimitiveKind::kU2, std::nullopt}, std::nullopt, RepeatNone{}},
  };
  EXPECT_EQ(t.seq, expected);
}

TEST(ParseSchema, MinimalDocument) {
  Schema s = parse_schema("meta: {id: x, endian: le}\nseq: [{id: a, type: u1}]\n");
  EXPECT_EQ(s.meta.id, "x");
  ASSERT_EQ(s.seq.size(), 1u);
  EXPECT_EQ(s.seq[0].type, TypeRef(PrimitiveType{PrimitiveKind::kU1, std::nullopt}));
  EXPECT_EQ(s.seq[0].repeat, RepeatSpec(RepeatNone{}));
  EXPECT_TRUE(s.types.empty());
}

TEST(ParseSchema, UnknownKeyReportsPath) {
  try {
    parse_schema("meta: {id: x, endian: le}\nseq: [{id: a, type: u1, sizee: 4}]\n");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.kind(), Kind::kUnknownKey);
    EXPECT_EQ(e.path(), "seq[0].sizee");
  }
}

TEST(ParseSchema, UnknownKeyInsideUserType) {
  std::string text = replace_once(animal_text(), "        type: u2\n", "        type: u2\n        if: age > 1\n");
  try {
    parse_schema(text);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.kind(), Kind::kUnknownKey);
    EXPECT_EQ(e.path(), "types.animal_entry.seq[3].if");
    EXPECT_NE(std::string(e.what()).find("unsupported KSY feature"), std::string::npos);
  }
}

TEST(ParseSchema, EncodingIsRejectedWithUtf8Note) {
  std::string text = replace_once(animal_text(), "        size: str_len\n", "        size: str_len\n        encoding: ASCII\n");
  try {
    parse_schema(text);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.kind(), Kind::kUnknownKey);
    EXPECT_NE(std::string(e.what()).find("UTF-8"), std::string::npos);
  }
}

TEST(ParseSchema, MalformedYamlReportsLineAndColumn) {
  try {
    parse_schema("meta:\n  id: x\n  endian: [le\nseq: []\n");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.kind(), Kind::kYaml);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
}

TEST(ParseSchema, MissingMandatoryKeys) {
  try {
    parse_schema("meta: {endian: le}\nseq: [{id: a, type: u1}]\n");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.kind(), Kind::kMissingKey);
    EXPECT_EQ(e.path(), "meta.id");
  }
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\nseq: [{type: u1}]\n"), Kind::kMissingKey);
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\nseq: [{id: a}]\n"), Kind::kMissingKey);
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\n"), Kind::kMissingKey);
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\nseq: [{id: a, type: u1, repeat: expr}]\n"),
            Kind::kMissingKey);
}

TEST(ParseSchema, EndianIsMandatory) {
  try {
    parse_schema("meta: {id: x}\nseq: [{id: a, type: u2}]\n");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.kind(), Kind::kMissingKey);
    EXPECT_EQ(e.path(), "meta.endian");
  }
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: little}\nseq: [{id: a, type: u2}]\n"), Kind::kMalformed);
}

TEST(ParseSchema, PrimitiveNamesAndOverrides) {
  Schema s = parse_schema(
      "meta: {id: x, endian: be}\n"
      "seq:\n"
      "  - {id: a, type: u2le}\n"
      "  - {id: b, type: s8be}\n"
      "  - {id: c, type: f4}\n"
      "  - {id: d, type: s1}\n");
  EXPECT_EQ(s.meta.endian, Endian::kBig);
  EXPECT_EQ(s.seq[0].type, TypeRef(PrimitiveType{PrimitiveKind::kU2, Endian::kLittle}));
  EXPECT_EQ(s.seq[1].type, TypeRef(PrimitiveType{PrimitiveKind::kS8, Endian::kBig}));
  EXPECT_EQ(s.seq[2].type, TypeRef(PrimitiveType{PrimitiveKind::kF4, std::nullopt}));
  EXPECT_EQ(s.seq[3].type, TypeRef(PrimitiveType{PrimitiveKind::kS1, std::nullopt}));

  for (const char* bad : {"u3", "u1le", "s16", "f2", "b1", "strz", "bytes", "u4xe"}) {
    std::string text = std::string("meta: {id: x, endian: le}\nseq: [{id: a, type: ") + bad + "}]\n";
    EXPECT_EQ(parse_error_kind(text), Kind::kUnknownPrimitive) << bad;
  }
}

TEST(ParseSchema, SizeRules) {
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\nseq: [{id: a, type: u1, size: 2}]\n"), Kind::kSizeMisuse);
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\nseq: [{id: a, type: str}]\n"), Kind::kSizeMisuse);
}

TEST(ParseSchema, RepeatRules) {
  auto doc = [](const std::string& attr) { return "meta: {id: x, endian: le}\nseq: [{id: a, type: u1, " + attr + "}]\n"; };
  EXPECT_EQ(parse_schema(doc("repeat: eos")).seq[0].repeat, RepeatSpec(RepeatEos{}));
  EXPECT_EQ(parse_schema(doc("repeat: expr, repeat-expr: 4")).seq[0].repeat,
            RepeatSpec(RepeatCount{expr::Expr::int_literal(4)}));
  EXPECT_EQ(parse_schema(doc("repeat: until, repeat-until: '_ == 0'")).seq[0].repeat,
            RepeatSpec(RepeatUntil{expr::parse_expr("_ == 0")}));
  EXPECT_EQ(parse_error_kind(doc("repeat: forever")), Kind::kMalformed);
  EXPECT_EQ(parse_error_kind(doc("repeat-expr: 3")), Kind::kMalformed);
  EXPECT_EQ(parse_error_kind(doc("repeat: eos, repeat-until: '_ == 0'")), Kind::kMalformed);
  EXPECT_EQ(parse_error_kind(doc("repeat: expr, repeat-expr: '3 +'")), Kind::kExpression);
}

TEST(ParseSchema, DuplicateYamlKeysRejected) {
  EXPECT_EQ(parse_error_kind("meta: {id: x, endian: le}\nseq: [{id: a, type: u1, type: u2}]\n"), Kind::kMalformed);
}

TEST(ParseSchema, Deterministic) { EXPECT_EQ(parse_schema(animal_text()), parse_schema(animal_text())); }

TEST(ValidateSchema, AnimalValidates) {
  ValidatedSchema v = validate_schema(parse_schema(animal_text()));
  EXPECT_EQ(v.schema(), parse_schema(animal_text()));
  EXPECT_EQ(v.field_index("animal_entry", "age"), std::optional<std::size_t>(2));
  EXPECT_EQ(v.field_index("", "entry"), std::optional<std::size_t>(0));
  EXPECT_EQ(v.field_index("animal_entry", "nope"), std::nullopt);
}

TEST(ValidateSchema, Idempotent) {
  ValidatedSchema once = load_schema(animal_text());
  ValidatedSchema twice = validate_schema(once);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(twice.schema(), parse_schema(animal_text()));
}

TEST(ValidateSchema, TypeCycleListsPath) {
  SchemaError e = load_error(
      "meta: {id: x, endian: le}\n"
      "seq: [{id: root, type: a}]\n"
      "types:\n"
      "  a: {seq: [{id: to_b, type: b}]}\n"
      "  b: {seq: [{id: to_a, type: a}]}\n");
  EXPECT_EQ(e.kind(), Kind::kTypeCycle);
  EXPECT_NE(std::string(e.what()).find("a → b → a"), std::string::npos) << e.what();
}

TEST(ValidateSchema, SelfCycle) {
  SchemaError e = load_error("meta: {id: x, endian: le}\nseq: [{id: r, type: n}]\ntypes:\n  n: {seq: [{id: next, type: n}]}\n");
  EXPECT_EQ(e.kind(), Kind::kTypeCycle);
  EXPECT_NE(std::string(e.what()).find("n → n"), std::string::npos);
}

TEST(ValidateSchema, UnresolvedTypeNamesIt) {
  SchemaError e = load_error(replace_once(animal_text(), "type: animal_entry", "type: animal_entri"));
  EXPECT_EQ(e.kind(), Kind::kUnresolvedType);
  EXPECT_NE(std::string(e.what()).find("animal_entri"), std::string::npos);
}

TEST(ValidateSchema, ForwardReferenceRejected) {
  SchemaError e = load_error(replace_once(animal_text(), "size: str_len", "size: weight"));
  EXPECT_EQ(e.kind(), Kind::kBadReference);
  EXPECT_NE(std::string(e.what()).find("forward reference"), std::string::npos);
  EXPECT_EQ(e.path(), "types.animal_entry.seq[1].size");
}

TEST(ValidateSchema, UnknownAndRepeatedReferencesRejected) {
  EXPECT_EQ(load_error(replace_once(animal_text(), "size: str_len", "size: length")).kind(), Kind::kBadReference);
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq:\n"
                       "  - {id: n, type: u1, repeat: expr, repeat-expr: 2}\n"
                       "  - {id: s, type: str, size: n}\n")
                .kind(),
            Kind::kBadReference);
  // Referring to itself is not "earlier".
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq: [{id: a, type: u1, repeat: until, repeat-until: 'a == 0'}]\n")
                .kind(),
            Kind::kBadReference);
}

TEST(ValidateSchema, LastItemOnlyInRepeatUntil) {
  EXPECT_EQ(load_error(replace_once(animal_text(), "size: str_len", "size: _")).kind(), Kind::kLastItemMisuse);
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq: [{id: a, type: u1, repeat: expr, repeat-expr: '_ + 1'}]\n")
                .kind(),
            Kind::kLastItemMisuse);
}

TEST(ValidateSchema, SizedUserTypeRejected) {
  SchemaError e = load_error(replace_once(animal_text(), "    repeat: eos\n", "    repeat: eos\n    size: 4\n"));
  EXPECT_EQ(e.kind(), Kind::kSizeMisuse);
  EXPECT_NE(std::string(e.what()).find("substream"), std::string::npos);
}

TEST(ValidateSchema, EosUnderRepetitionRejected) {
  SchemaError e = load_error(
      "meta: {id: x, endian: le}\n"
      "seq: [{id: items, type: item, repeat: expr, repeat-expr: 2}]\n"
      "types:\n"
      "  item: {seq: [{id: tail, type: u1, repeat: eos}]}\n");
  EXPECT_EQ(e.kind(), Kind::kNestedEos);

  // Non-repeated user type may hold an eos attribute.
  EXPECT_NO_THROW(load_schema(
      "meta: {id: x, endian: le}\n"
      "seq: [{id: body, type: item}]\n"
      "types:\n"
      "  item: {seq: [{id: tail, type: u1, repeat: eos}]}\n"));
}

TEST(ValidateSchema, IdentifierRules) {
  EXPECT_EQ(load_error("meta: {id: Animal, endian: le}\nseq: [{id: a, type: u1}]\n").kind(), Kind::kMalformed);
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq: [{id: 1a, type: u1}]\n").kind(), Kind::kMalformed);
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq: [{id: a, type: u1}, {id: a, type: u2}]\n").kind(),
            Kind::kMalformed);
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq: []\n").kind(), Kind::kMalformed);
  EXPECT_EQ(load_error("meta: {id: x, endian: le}\nseq: [{id: a, type: t}]\ntypes:\n  t: {seq: []}\n").kind(),
            Kind::kMalformed);
}

TEST(ValidateSchema, ExpressionsReferenceOnlyEarlierSiblings) {
  ValidatedSchema v = load_schema(
      "meta: {id: x, endian: le}\n"
      "seq:\n"
      "  - {id: n, type: u2}\n"
      "  - {id: m, type: u1}\n"
      "  - {id: s, type: str, size: 'n * 2 + m'}\n"
      "  - {id: v, type: s4, repeat: expr, repeat-expr: 'n - m'}\n"
      "  - {id: t, type: u1, repeat: until, repeat-until: '_ == m'}\n");
  const auto& seq = v.schema().seq;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::vector<expr::Expr> exprs;
    if (seq[i].size) exprs.push_back(*seq[i].size);
    if (auto c = std::get_if<RepeatCount>(&seq[i].repeat)) exprs.push_back(c->count);
    if (auto u = std::get_if<RepeatUntil>(&seq[i].repeat)) exprs.push_back(u->condition);
    for (const auto& e : exprs) {
      for (const auto& name : expr::field_refs(e)) {
        auto idx = v.field_index("", name);
        ASSERT_TRUE(idx.has_value());
        EXPECT_LT(*idx, i);
      }
    }
  }
}

// One-edit mutations of a valid document, one per rejection class.
struct Mutation {
  const char* from;
  const char* to;
  Kind kind;
};

TEST(ValidateSchema, RejectionCompleteness) {
  const Mutation mutations[] = {
      {"  id: animal\n", "  id: animal\n  title: x\n", Kind::kUnknownKey},
      {"  endian: le\n", "", Kind::kMissingKey},
      {"  id: animal\n", "  id: Animal\n", Kind::kMalformed},
      {"type: u2", "type: u3", Kind::kUnknownPrimitive},
      {"type: u2", "type: u2be\n        size: 2", Kind::kSizeMisuse},
      {"type: animal_entry", "type: missing_type", Kind::kUnresolvedType},
      {"type: u2", "type: animal_entry", Kind::kTypeCycle},
      {"size: str_len", "size: age", Kind::kBadReference},
      {"size: str_len", "size: _ + 1", Kind::kLastItemMisuse},
      {"size: str_len", "size: str_len +", Kind::kExpression},
      {"meta:", "meta: [", Kind::kYaml},
  };
  for (const auto& m : mutations) {
    std::string text = replace_once(animal_text(), m.from, m.to);
    try {
      load_schema(text);
      ADD_FAILURE() << "accepted mutation " << m.from << " -> " << m.to;
    } catch (const SchemaError& e) {
      EXPECT_EQ(e.kind(), m.kind) << m.to << ": " << e.what();
    }
  }
}

TEST(LoadSchemaFile, MissingFileIsIoError) { EXPECT_THROW(load_schema_file("/nonexistent/animal.ksy"), IoError); }

}  // namespace
}  // namespace ksyawk::ksy
