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

#include "ksyawk/layout.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "ksyawk/error.hpp"
#include "ksyawk/utf8.hpp"

namespace ksyawk::layout {

std::string_view class_name(NodeClass c) {
  switch (c) {
    case NodeClass::kRecord: return "record";
    case NodeClass::kListOffset: return "listoffset";
    case NodeClass::kNumeric: return "numeric";
    case NodeClass::kString: return "string";
  }
  return "?";
}

std::string data_buffer_name(NodeId id) { return "node" + std::to_string(id) + "-data"; }
std::string offsets_buffer_name(NodeId id) { return "node" + std::to_string(id) + "-offsets"; }

// ---- LayoutTree ---------------------------------------------------------

NodeId LayoutTree::push(LayoutNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

namespace {
LayoutNode make_node(NodeClass cls, PrimitiveKind kind = PrimitiveKind::kU1) {
  LayoutNode n;
  n.cls = cls;
  n.primitive = kind;
  return n;
}
}  // namespace

NodeId LayoutTree::add_record() { return push(make_node(NodeClass::kRecord)); }
NodeId LayoutTree::add_list_offset() { return push(make_node(NodeClass::kListOffset)); }
NodeId LayoutTree::add_numeric(PrimitiveKind kind) { return push(make_node(NodeClass::kNumeric, kind)); }
NodeId LayoutTree::add_string() { return push(make_node(NodeClass::kString)); }

void LayoutTree::add_field(NodeId record, std::string name, NodeId child) {
  LayoutNode& r = nodes_.at(static_cast<std::size_t>(record));
  if (r.cls != NodeClass::kRecord) throw LayoutError(record, "add_field on a non-record node");
  r.field_names.push_back(std::move(name));
  r.children.push_back(child);
}

void LayoutTree::set_content(NodeId list, NodeId child) {
  LayoutNode& l = nodes_.at(static_cast<std::size_t>(list));
  if (l.cls != NodeClass::kListOffset) throw LayoutError(list, "set_content on a non-list node");
  l.children = {child};
}

void LayoutTree::check() const {
  if (nodes_.empty()) throw LayoutError(-1, "empty layout tree");
  NodeId expected = 0;
  auto walk = [&](auto&& self, NodeId id) -> void {
    if (id != expected) {
      throw LayoutError(id, "node ids are not in depth-first pre-order (expected " + std::to_string(expected) + ")");
    }
    ++expected;
    const LayoutNode& n = node(id);
    switch (n.cls) {
      case NodeClass::kRecord: {
        if (n.children.empty()) throw LayoutError(id, "record has no fields");
        if (n.children.size() != n.field_names.size()) throw LayoutError(id, "record field/name count mismatch");
        std::set<std::string> names(n.field_names.begin(), n.field_names.end());
        if (names.size() != n.field_names.size()) throw LayoutError(id, "duplicate record field name");
        break;
      }
      case NodeClass::kListOffset:
        if (n.children.size() != 1) throw LayoutError(id, "list-offset node needs exactly one content node");
        break;
      case NodeClass::kNumeric:
      case NodeClass::kString:
        if (!n.children.empty()) throw LayoutError(id, "leaf node has children");
        break;
    }
    for (NodeId c : n.children) {
      if (c < 0 || static_cast<std::size_t>(c) >= nodes_.size()) throw LayoutError(id, "child id out of range");
      self(self, c);
    }
  };
  walk(walk, 0);
  if (static_cast<std::size_t>(expected) != nodes_.size()) throw LayoutError(-1, "unreachable nodes in layout tree");
}

// ---- Form ---------------------------------------------------------------

namespace {

Json form_of(const LayoutTree& tree, NodeId id) {
  const LayoutNode& n = tree.node(id);
  Json j = Json::object();
  j["class"] = class_name(n.cls);
  j["node_id"] = id;
  switch (n.cls) {
    case NodeClass::kRecord: {
      Json fields = Json::object();
      for (std::size_t i = 0; i < n.children.size(); ++i) fields[n.field_names[i]] = form_of(tree, n.children[i]);
      j["fields"] = std::move(fields);
      break;
    }
    case NodeClass::kListOffset:
      j["content"] = form_of(tree, n.children.at(0));
      break;
    case NodeClass::kNumeric:
      j["primitive"] = primitive_name(n.primitive);
      break;
    case NodeClass::kString:
      break;
  }
  return j;
}

void expect_keys(const Json& j, std::initializer_list<const char*> keys, NodeId id) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) throw LayoutError(id, "malformed form: unexpected key '" + k + "'");
  }
  for (const char* k : keys) {
    if (!j.contains(k)) throw LayoutError(id, std::string("malformed form: missing key '") + k + "'");
  }
}

void build_from_form(const Json& j, LayoutTree& tree) {
  if (!j.is_object() || !j.contains("class") || !j["class"].is_string()) {
    throw LayoutError(-1, "malformed form: node must be an object with a string 'class'");
  }
  if (!j.contains("node_id") || !j["node_id"].is_number_integer()) {
    throw LayoutError(-1, "malformed form: node needs an integer 'node_id'");
  }
  const auto declared = j["node_id"].get<NodeId>();
  const auto expected = static_cast<NodeId>(tree.size());
  if (declared != expected) {
    throw LayoutError(declared, "malformed form: node_id out of pre-order (expected " + std::to_string(expected) + ")");
  }
  const std::string cls = j["class"].get<std::string>();
  if (cls == "record") {
    expect_keys(j, {"class", "node_id", "fields"}, declared);
    if (!j["fields"].is_object() || j["fields"].empty()) {
      throw LayoutError(declared, "malformed form: record 'fields' must be a nonempty object");
    }
    NodeId id = tree.add_record();
    for (const auto& [name, child] : j["fields"].items()) {
      NodeId child_id = static_cast<NodeId>(tree.size());
      build_from_form(child, tree);
      tree.add_field(id, name, child_id);
    }
  } else if (cls == "listoffset") {
    expect_keys(j, {"class", "node_id", "content"}, declared);
    NodeId id = tree.add_list_offset();
    NodeId child_id = static_cast<NodeId>(tree.size());
    build_from_form(j["content"], tree);
    tree.set_content(id, child_id);
  } else if (cls == "numeric") {
    expect_keys(j, {"class", "node_id", "primitive"}, declared);
    std::optional<PrimitiveKind> kind;
    if (j["primitive"].is_string()) kind = primitive_from_name(j["primitive"].get<std::string>());
    if (!kind) throw LayoutError(declared, "malformed form: unknown primitive " + j["primitive"].dump());
    tree.add_numeric(*kind);
  } else if (cls == "string") {
    expect_keys(j, {"class", "node_id"}, declared);
    tree.add_string();
  } else {
    throw LayoutError(declared, "malformed form: unknown class '" + cls + "'");
  }
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t bits, std::size_t w) {
  for (std::size_t i = 0; i < w; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* p, std::size_t w) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < w; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

std::vector<std::uint8_t> encode_offsets(const std::vector<std::int64_t>& offsets) {
  std::vector<std::uint8_t> out;
  out.reserve(offsets.size() * 8);
  for (std::int64_t o : offsets) put_le(out, static_cast<std::uint64_t>(o), 8);
  return out;
}

// Read-only view of a complete buffer set, shared by to_nested and
// reconstruct.
struct BufferView {
  const LayoutTree* tree;
  std::vector<const std::vector<std::uint8_t>*> data;
  std::vector<const std::vector<std::int64_t>*> offsets;
  std::vector<std::int64_t> lengths;

  Json element(NodeId id, std::int64_t i) const {
    const LayoutNode& n = tree->node(id);
    const auto idx = static_cast<std::size_t>(id);
    switch (n.cls) {
      case NodeClass::kRecord: {
        Json r = Json::object();
        for (std::size_t f = 0; f < n.children.size(); ++f) r[n.field_names[f]] = element(n.children[f], i);
        return r;
      }
      case NodeClass::kListOffset: {
        Json list = Json::array();
        const auto& off = *offsets[idx];
        for (std::int64_t k = off[i]; k < off[i + 1]; ++k) list.push_back(element(n.children[0], k));
        return list;
      }
      case NodeClass::kString: {
        const auto& off = *offsets[idx];
        const auto& bytes = *data[idx];
        return Json(std::string(reinterpret_cast<const char*>(bytes.data()) + off[i],
                                static_cast<std::size_t>(off[i + 1] - off[i])));
      }
      case NodeClass::kNumeric: {
        const std::size_t w = width(n.primitive);
        const std::uint64_t bits = get_le(data[idx]->data() + static_cast<std::size_t>(i) * w, w);
        if (n.primitive == PrimitiveKind::kF4) {
          return Json(static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits))));
        }
        if (n.primitive == PrimitiveKind::kF8) return Json(std::bit_cast<double>(bits));
        if (is_signed(n.primitive)) {
          const unsigned shift = static_cast<unsigned>(64 - 8 * w);
          return Json(static_cast<std::int64_t>(bits << shift) >> shift);
        }
        return Json(bits);
      }
    }
    return {};
  }

  Json rows() const {
    Json out = Json::array();
    for (std::int64_t i = 0; i < lengths[0]; ++i) out.push_back(element(0, i));
    return out;
  }
};

void check_offsets(NodeId id, const std::vector<std::int64_t>& off, std::int64_t content_length) {
  if (off.empty()) throw LayoutError(id, "offsets buffer is empty");
  if (off.front() != 0) throw LayoutError(id, "offsets do not start at 0");
  for (std::size_t k = 1; k < off.size(); ++k) {
    if (off[k] < off[k - 1]) throw LayoutError(id, "offsets decrease at index " + std::to_string(k));
  }
  if (off.back() != content_length) {
    throw LayoutError(id, "last offset " + std::to_string(off.back()) + " != content length " +
                              std::to_string(content_length));
  }
}

}  // namespace

Json to_form(const LayoutTree& tree) {
  tree.check();
  return form_of(tree, 0);
}

LayoutTree from_form(const Json& form) {
  LayoutTree tree;
  build_from_form(form, tree);
  tree.check();
  return tree;
}

std::string form_text(const LayoutTree& tree) { return to_form(tree).dump(2) + "\n"; }

// ---- FilledLayout -------------------------------------------------------

FilledLayout::FilledLayout(LayoutTree plan) : plan_(std::move(plan)) {
  plan_.check();
  nodes_.resize(plan_.size());
}

std::size_t FilledLayout::index(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw LayoutError(id, "no such node");
  return static_cast<std::size_t>(id);
}

const LayoutNode& FilledLayout::expect(NodeId id, NodeClass cls, const char* op) const {
  const LayoutNode& n = plan_.node(static_cast<NodeId>(index(id)));
  if (n.cls != cls) {
    throw LayoutError(id, std::string(op) + " on a " + std::string(class_name(n.cls)) + " node");
  }
  return n;
}

void FilledLayout::append_numeric(NodeId id, Scalar value) {
  const PrimitiveKind kind = expect(id, NodeClass::kNumeric, "append_numeric").primitive;
  NodeState& st = nodes_[index(id)];
  const std::size_t w = width(kind);

  if (is_float(kind)) {
    const double* d = std::get_if<double>(&value);
    if (!d) throw LayoutError(id, "kind mismatch: integer value for " + std::string(primitive_name(kind)));
    if (kind == PrimitiveKind::kF8) {
      put_le(st.data, std::bit_cast<std::uint64_t>(*d), 8);
    } else {
      if (std::isfinite(*d) && std::fabs(*d) > std::numeric_limits<float>::max()) {
        throw LayoutError(id, "value " + std::to_string(*d) + " out of range for f4");
      }
      put_le(st.data, std::bit_cast<std::uint32_t>(static_cast<float>(*d)), 4);
    }
    ++st.length;
    return;
  }

  if (std::holds_alternative<double>(value)) {
    throw LayoutError(id, "kind mismatch: float value for " + std::string(primitive_name(kind)));
  }
  const unsigned bits = static_cast<unsigned>(8 * w);
  bool fits;
  std::uint64_t raw;
  if (const auto* s = std::get_if<std::int64_t>(&value)) {
    raw = static_cast<std::uint64_t>(*s);
    if (is_signed(kind)) {
      fits = bits == 64 || (*s >= -(std::int64_t{1} << (bits - 1)) && *s < (std::int64_t{1} << (bits - 1)));
    } else {
      fits = *s >= 0 && (bits == 64 || static_cast<std::uint64_t>(*s) < (std::uint64_t{1} << bits));
    }
  } else {
    const std::uint64_t u = std::get<std::uint64_t>(value);
    raw = u;
    if (is_signed(kind)) {
      fits = u < (std::uint64_t{1} << (bits - 1));
    } else {
      fits = bits == 64 || u < (std::uint64_t{1} << bits);
    }
  }
  if (!fits) throw LayoutError(id, "value out of range for " + std::string(primitive_name(kind)));
  put_le(st.data, raw, w);
  ++st.length;
}

void FilledLayout::append_string(NodeId id, std::string_view utf8) {
  expect(id, NodeClass::kString, "append_string");
  NodeState& st = nodes_[index(id)];
  st.data.insert(st.data.end(), utf8.begin(), utf8.end());
  st.offsets.push_back(static_cast<std::int64_t>(st.data.size()));
  ++st.length;
}

void FilledLayout::begin_list(NodeId id) {
  expect(id, NodeClass::kListOffset, "begin_list");
  NodeState& st = nodes_[index(id)];
  if (st.open) throw LayoutError(id, "begin_list while a list is already open");
  st.open = true;
}

void FilledLayout::end_list(NodeId id) {
  const LayoutNode& n = expect(id, NodeClass::kListOffset, "end_list");
  NodeState& st = nodes_[index(id)];
  if (!st.open) throw LayoutError(id, "end_list without matching begin_list");
  st.open = false;
  st.offsets.push_back(nodes_[index(n.children[0])].length);
  ++st.length;
}

void FilledLayout::end_record(NodeId id) {
  const LayoutNode& n = expect(id, NodeClass::kRecord, "end_record");
  NodeState& st = nodes_[index(id)];
  const std::int64_t next = st.length + 1;
  for (std::size_t f = 0; f < n.children.size(); ++f) {
    if (nodes_[index(n.children[f])].length != next) {
      throw LayoutError(id, "field '" + n.field_names[f] + "' has " +
                                std::to_string(nodes_[index(n.children[f])].length) + " entries, record row " +
                                std::to_string(next) + " expected");
    }
  }
  st.length = next;
}

void FilledLayout::check_consistency() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    const LayoutNode& n = plan_.node(id);
    const NodeState& st = nodes_[i];
    switch (n.cls) {
      case NodeClass::kRecord:
        for (NodeId c : n.children) {
          if (nodes_[index(c)].length != st.length) {
            throw LayoutError(id, "record field node " + std::to_string(c) + " length " +
                                      std::to_string(nodes_[index(c)].length) + " != record length " +
                                      std::to_string(st.length));
          }
        }
        break;
      case NodeClass::kListOffset:
        if (st.open) throw LayoutError(id, "list left open");
        if (static_cast<std::int64_t>(st.offsets.size()) != st.length + 1) {
          throw LayoutError(id, "offsets count does not match length");
        }
        check_offsets(id, st.offsets, nodes_[index(n.children[0])].length);
        break;
      case NodeClass::kString:
        if (static_cast<std::int64_t>(st.offsets.size()) != st.length + 1) {
          throw LayoutError(id, "offsets count does not match length");
        }
        check_offsets(id, st.offsets, static_cast<std::int64_t>(st.data.size()));
        break;
      case NodeClass::kNumeric:
        if (st.data.size() != static_cast<std::size_t>(st.length) * width(n.primitive)) {
          throw LayoutError(id, "data size does not match length");
        }
        break;
    }
  }
}

Bundle export_buffers(const FilledLayout& fl) {
  fl.check_consistency();
  Bundle b;
  b.form_json = form_text(fl.plan());
  const LayoutTree& tree = fl.plan();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    switch (tree.node(id).cls) {
      case NodeClass::kRecord:
        break;
      case NodeClass::kListOffset:
        b.buffers[offsets_buffer_name(id)] = encode_offsets(fl.offsets(id));
        break;
      case NodeClass::kString:
        b.buffers[offsets_buffer_name(id)] = encode_offsets(fl.offsets(id));
        b.buffers[data_buffer_name(id)] = fl.data(id);
        break;
      case NodeClass::kNumeric:
        b.buffers[data_buffer_name(id)] = fl.data(id);
        break;
    }
  }
  return b;
}

Json to_nested(const FilledLayout& fl) {
  fl.check_consistency();
  const LayoutTree& tree = fl.plan();
  BufferView view{&tree, {}, {}, {}};
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    view.data.push_back(&fl.data(id));
    view.offsets.push_back(&fl.offsets(id));
    view.lengths.push_back(fl.length(id));
  }
  return view.rows();
}

Json reconstruct(std::string_view form_json, const std::map<std::string, std::vector<std::uint8_t>>& buffers) {
  Json form;
  try {
    form = Json::parse(form_json);
  } catch (const Json::parse_error& e) {
    throw LayoutError(-1, std::string("malformed form: ") + e.what());
  }
  const LayoutTree tree = from_form(form);

  auto find = [&](const std::string& name, NodeId id) -> const std::vector<std::uint8_t>& {
    auto it = buffers.find(name);
    if (it == buffers.end()) throw LayoutError(id, "missing buffer '" + name + "'");
    return it->second;
  };
  auto decode_offsets = [&](NodeId id) {
    const auto& raw = find(offsets_buffer_name(id), id);
    if (raw.size() % 8 != 0) throw LayoutError(id, "offsets buffer size is not a multiple of 8");
    std::vector<std::int64_t> off(raw.size() / 8);
    for (std::size_t k = 0; k < off.size(); ++k) off[k] = static_cast<std::int64_t>(get_le(raw.data() + 8 * k, 8));
    return off;
  };

  const std::size_t n = tree.size();
  static const std::vector<std::uint8_t> kNoData;
  static const std::vector<std::int64_t> kNoOffsets;
  std::vector<std::vector<std::int64_t>> offsets(n);
  BufferView view{&tree, std::vector<const std::vector<std::uint8_t>*>(n, &kNoData),
                  std::vector<const std::vector<std::int64_t>*>(n, &kNoOffsets), std::vector<std::int64_t>(n, 0)};

  // Children have larger ids than their parents, so walking ids backwards
  // sees every content length before it is needed.
  for (std::size_t i = n; i-- > 0;) {
    const auto id = static_cast<NodeId>(i);
    const LayoutNode& node = tree.node(id);
    switch (node.cls) {
      case NodeClass::kNumeric: {
        const auto& data = find(data_buffer_name(id), id);
        const std::size_t w = width(node.primitive);
        if (data.size() % w != 0) throw LayoutError(id, "data size is not a multiple of the element width");
        view.data[i] = &data;
        view.lengths[i] = static_cast<std::int64_t>(data.size() / w);
        break;
      }
      case NodeClass::kString: {
        const auto& data = find(data_buffer_name(id), id);
        offsets[i] = decode_offsets(id);
        check_offsets(id, offsets[i], static_cast<std::int64_t>(data.size()));
        if (!is_valid_utf8(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()))) {
          throw LayoutError(id, "string data is not valid UTF-8");
        }
        view.data[i] = &data;
        view.offsets[i] = &offsets[i];
        view.lengths[i] = static_cast<std::int64_t>(offsets[i].size()) - 1;
        break;
      }
      case NodeClass::kListOffset:
        offsets[i] = decode_offsets(id);
        check_offsets(id, offsets[i], view.lengths[static_cast<std::size_t>(node.children[0])]);
        view.offsets[i] = &offsets[i];
        view.lengths[i] = static_cast<std::int64_t>(offsets[i].size()) - 1;
        break;
      case NodeClass::kRecord: {
        const std::int64_t len = view.lengths[static_cast<std::size_t>(node.children[0])];
        for (NodeId c : node.children) {
          if (view.lengths[static_cast<std::size_t>(c)] != len) {
            throw LayoutError(id, "record fields have unequal lengths");
          }
        }
        view.lengths[i] = len;
        break;
      }
    }
  }
  // UTF-8 was checked per buffer; individual strings must also start on a
  // character boundary.
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.node(static_cast<NodeId>(i)).cls != NodeClass::kString) continue;
    const auto& data = *view.data[i];
    for (std::size_t k = 0; k + 1 < offsets[i].size(); ++k) {
      std::string_view piece(reinterpret_cast<const char*>(data.data()) + offsets[i][k],
                             static_cast<std::size_t>(offsets[i][k + 1] - offsets[i][k]));
      if (!is_valid_utf8(piece)) throw LayoutError(static_cast<NodeId>(i), "string splits a UTF-8 sequence");
    }
  }
  return view.rows();
}

// ---- on-disk bundles ----------------------------------------------------

namespace {

void write_file(const std::filesystem::path& p, const char* data, std::size_t size) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(p.string(), "cannot open for writing");
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw IoError(p.string(), "write failed");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError(p.string(), "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(p.string(), "read failed");
  return bytes;
}

}  // namespace

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  write_file(dir / "form.json", bundle.form_json.data(), bundle.form_json.size());
  for (const auto& [name, bytes] : bundle.buffers) {
    write_file(dir / name, reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }
}

Bundle read_bundle(const std::filesystem::path& dir) {
  Bundle b;
  const auto form = read_file(dir / "form.json");
  b.form_json.assign(form.begin(), form.end());
  static const std::regex kBufferName(R"(node[0-9]+-(data|offsets))");
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, kBufferName)) b.buffers[name] = read_file(entry.path());
  }
  if (ec) throw IoError(dir.string(), "cannot list directory: " + ec.message());
  return b;
}

}  // namespace ksyawk::layout
