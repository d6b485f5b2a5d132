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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace ksyawk {

enum class Endian { kLittle, kBig };

enum class PrimitiveKind { kU1, kU2, kU4, kU8, kS1, kS2, kS4, kS8, kF4, kF8 };

std::size_t width(PrimitiveKind kind);
bool is_float(PrimitiveKind kind);
bool is_signed(PrimitiveKind kind);

/// "u1" .. "f8", the spelling used in KSY types and in forms.
std::string_view primitive_name(PrimitiveKind kind);
std::optional<PrimitiveKind> primitive_from_name(std::string_view name);

/// A decoded primitive. Unsigned kinds hold uint64_t, signed kinds int64_t,
/// floating kinds double (f4 widened exactly).
using Scalar = std::variant<std::int64_t, std::uint64_t, double>;

}  // namespace ksyawk
