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

// Columnar builders. A LayoutTree is a flat, pre-order array of node
// descriptors; FilledLayout accumulates one buffer set per tree.
//
// Buffers (all little-endian):
//   node{N}-data     numeric values, or UTF-8 bytes for string nodes
//   node{N}-offsets  int64, length+1 entries, for list-offset and string nodes

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ksyawk/primitive.hpp"

namespace ksyawk::layout {

using Json = nlohmann::ordered_json;
using NodeId = std::int64_t;

enum class NodeClass { kRecord, kListOffset, kNumeric, kString };

std::string_view class_name(NodeClass c);

struct LayoutNode {
  NodeClass cls = NodeClass::kRecord;
  PrimitiveKind primitive = PrimitiveKind::kU1;  // numeric only
  std::vector<std::string> field_names;           // record only
  std::vector<NodeId> children;                   // record fields, or the single list content

  bool operator==(const LayoutNode&) const = default;
};

class LayoutTree {
 public:
  /// Node ids are handed out in call order; callers build depth-first.
  NodeId add_record();
  NodeId add_list_offset();
  NodeId add_numeric(PrimitiveKind kind);
  NodeId add_string();
  void add_field(NodeId record, std::string name, NodeId child);
  void set_content(NodeId list, NodeId child);

  const LayoutNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Structural checks: ids in pre-order from 0, one content per list,
  /// distinct record field names.
  void check() const;

  bool operator==(const LayoutTree&) const = default;

 private:
  NodeId push(LayoutNode n);
  std::vector<LayoutNode> nodes_;
};

Json to_form(const LayoutTree& tree);
LayoutTree from_form(const Json& form);
std::string form_text(const LayoutTree& tree);

struct Bundle {
  std::string form_json;
  std::map<std::string, std::vector<std::uint8_t>> buffers;

  bool operator==(const Bundle&) const = default;
};

std::string data_buffer_name(NodeId id);
std::string offsets_buffer_name(NodeId id);

class FilledLayout {
 public:
  explicit FilledLayout(LayoutTree plan);

  const LayoutTree& plan() const { return plan_; }
  std::int64_t length(NodeId id) const { return nodes_.at(index(id)).length; }

  void append_numeric(NodeId id, Scalar value);
  void append_string(NodeId id, std::string_view utf8);
  void begin_list(NodeId id);
  void end_list(NodeId id);
  /// Closes one row of a record; every field must already hold it.
  void end_record(NodeId id);

  /// Throws LayoutError naming the first inconsistent node.
  void check_consistency() const;

  const std::vector<std::uint8_t>& data(NodeId id) const { return nodes_.at(index(id)).data; }
  const std::vector<std::int64_t>& offsets(NodeId id) const { return nodes_.at(index(id)).offsets; }

 private:
  struct NodeState {
    std::vector<std::uint8_t> data;
    std::vector<std::int64_t> offsets{0};
    std::int64_t length = 0;
    bool open = false;
  };

  std::size_t index(NodeId id) const;
  const LayoutNode& expect(NodeId id, NodeClass cls, const char* op) const;

  LayoutTree plan_;
  std::vector<NodeState> nodes_;
};

Bundle export_buffers(const FilledLayout& fl);

/// Logical content: a JSON array with one element per root-record row.
Json to_nested(const FilledLayout& fl);

/// Rebuilds the logical content from a form and its buffers alone.
Json reconstruct(std::string_view form_json, const std::map<std::string, std::vector<std::uint8_t>>& buffers);

/// On-disk bundle: `form.json` plus one raw file per buffer.
void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);
Bundle read_bundle(const std::filesystem::path& dir);

}  // namespace ksyawk::layout
