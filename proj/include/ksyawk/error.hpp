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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ksyawk {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem with a KSY document: YAML syntax, unsupported keys, unresolved
/// types, cycles, illegal expression references.
class SchemaError : public Error {
 public:
  enum class Kind {
    kYaml,
    kUnknownKey,
    kMissingKey,
    kMalformed,
    kUnknownPrimitive,
    kSizeMisuse,
    kUnresolvedType,
    kTypeCycle,
    kBadReference,
    kLastItemMisuse,
    kNestedEos,
    kExpression,
  };

  SchemaError(Kind kind, std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message),
        kind_(kind),
        path_(std::move(path)) {}

  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

/// Expression syntax error. `column` is 1-based.
class ExprSyntaxError : public Error {
 public:
  ExprSyntaxError(std::size_t column, const std::string& message)
      : Error("column " + std::to_string(column) + ": " + message),
        column_(column),
        detail_(message) {}

  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t column_;
  std::string detail_;
};

class ExprEvalError : public Error {
 public:
  enum class Kind { kUnbound, kTypeMismatch, kDivisionByZero, kOverflow, kNoLastItem };

  ExprEvalError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Builder misuse or an inconsistent buffer set.
class LayoutError : public Error {
 public:
  LayoutError(std::int64_t node_id, const std::string& message)
      : Error(node_id < 0 ? message : "node " + std::to_string(node_id) + ": " + message),
        node_id_(node_id) {}

  std::int64_t node_id() const { return node_id_; }

 private:
  std::int64_t node_id_;
};

/// Failure while interpreting raw bytes against a schema.
class ParseError : public Error {
 public:
  enum class Kind {
    kTruncated,
    kTrailingBytes,
    kNegativeCount,
    kBadCondition,
    kInvalidUtf8,
    kExpression,
    kNoProgress,
    kLayout,
  };

  ParseError(Kind kind, std::string attr_path, std::size_t offset, const std::string& detail)
      : Error(attr_path + " at offset " + std::to_string(offset) + ": " + detail),
        kind_(kind),
        attr_path_(std::move(attr_path)),
        offset_(offset) {}

  Kind kind() const { return kind_; }
  const std::string& attr_path() const { return attr_path_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::string attr_path_;
  std::size_t offset_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace ksyawk
