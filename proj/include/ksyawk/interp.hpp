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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ksyawk/expr.hpp"
#include "ksyawk/layout.hpp"
#include "ksyawk/primitive.hpp"
#include "ksyawk/schema.hpp"

namespace ksyawk::interp {

enum class NamingMode { kMangled, kPlain };

/// `<owner>A__Z<attr>`; the top-level seq is owned by meta.id.
std::string mangle_name(std::string_view owning_type_id, std::string_view attr_id);

/// Read position over an immutable byte sequence.
class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> data, Endian default_endian)
      : data_(data), default_endian_(default_endian) {}

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool eof() const { return pos_ == data_.size(); }
  Endian default_endian() const { return default_endian_; }

  /// Consumes `n` bytes. Throws ParseError(kTruncated) without moving if
  /// fewer remain; `what` describes the item for the message.
  std::span<const std::uint8_t> take(std::size_t n, const std::string& what);

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  Endian default_endian_;
};

Scalar read_primitive(Cursor& c, PrimitiveKind kind, Endian endian);

/// Per-attribute node assignment, mirroring one seq instance in the tree.
struct AttrPlan {
  std::string field_name;
  layout::NodeId list_node = -1;  // set when the attribute repeats
  layout::NodeId value_node = -1;
  std::vector<AttrPlan> children;  // the user type's seq, when applicable
};

struct LayoutPlan {
  layout::LayoutTree tree;
  std::vector<AttrPlan> root_attrs;
  /// Dotted instance path (`entry.species`) -> value node id.
  std::map<std::string, layout::NodeId> attr_map;
  layout::Json form;
  NamingMode naming = NamingMode::kMangled;
};

LayoutPlan compile_layout(const ksy::ValidatedSchema& s, NamingMode naming = NamingMode::kMangled);

layout::FilledLayout parse_data(const LayoutPlan& plan, const ksy::ValidatedSchema& s,
                                std::span<const std::uint8_t> raw);

layout::FilledLayout parse_file(const LayoutPlan& plan, const ksy::ValidatedSchema& s,
                                const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace ksyawk::interp
