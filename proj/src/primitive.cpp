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

#include "ksyawk/primitive.hpp"

#include <array>

namespace ksyawk {
namespace {

struct KindInfo {
  PrimitiveKind kind;
  std::string_view name;
  std::size_t width;
};

constexpr std::array<KindInfo, 10> kKinds{{
    {PrimitiveKind::kU1, "u1", 1},
    {PrimitiveKind::kU2, "u2", 2},
    {PrimitiveKind::kU4, "u4", 4},
    {PrimitiveKind::kU8, "u8", 8},
    {PrimitiveKind::kS1, "s1", 1},
    {PrimitiveKind::kS2, "s2", 2},
    {PrimitiveKind::kS4, "s4", 4},
    {PrimitiveKind::kS8, "s8", 8},
    {PrimitiveKind::kF4, "f4", 4},
    {PrimitiveKind::kF8, "f8", 8},
}};

const KindInfo& info(PrimitiveKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

}  // namespace

std::size_t width(PrimitiveKind kind) { return info(kind).width; }

bool is_float(PrimitiveKind kind) { return kind == PrimitiveKind::kF4 || kind == PrimitiveKind::kF8; }

bool is_signed(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kS1:
    case PrimitiveKind::kS2:
    case PrimitiveKind::kS4:
    case PrimitiveKind::kS8:
      return true;
    default:
      return false;
  }
}

std::string_view primitive_name(PrimitiveKind kind) { return info(kind).name; }

std::optional<PrimitiveKind> primitive_from_name(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

}  // namespace ksyawk
