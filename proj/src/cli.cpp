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

#include "ksyawk/cli.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "ksyawk/error.hpp"
#include "ksyawk/interp.hpp"
#include "ksyawk/layout.hpp"
#include "ksyawk/schema.hpp"

namespace ksyawk::cli {
namespace {

namespace fs = std::filesystem;

struct Config {
  std::string ksy_path;
  std::string data_path;
  std::string format = "json";
  std::string out_path;
  std::string naming = "mangled";
};

std::string_view kind_tag(SchemaError::Kind k) {
  using K = SchemaError::Kind;
  switch (k) {
    case K::kYaml: return "yaml";
    case K::kUnknownKey: return "unknown-key";
    case K::kMissingKey: return "missing-key";
    case K::kMalformed: return "malformed";
    case K::kUnknownPrimitive: return "unknown-primitive";
    case K::kSizeMisuse: return "size";
    case K::kUnresolvedType: return "unresolved-type";
    case K::kTypeCycle: return "type-cycle";
    case K::kBadReference: return "bad-reference";
    case K::kLastItemMisuse: return "last-item";
    case K::kNestedEos: return "nested-eos";
    case K::kExpression: return "expression";
  }
  return "schema";
}

std::string_view kind_tag(ParseError::Kind k) {
  using K = ParseError::Kind;
  switch (k) {
    case K::kTruncated: return "truncated";
    case K::kTrailingBytes: return "trailing-bytes";
    case K::kNegativeCount: return "negative-count";
    case K::kBadCondition: return "bad-condition";
    case K::kInvalidUtf8: return "invalid-utf8";
    case K::kExpression: return "expression";
    case K::kNoProgress: return "no-progress";
    case K::kLayout: return "layout";
  }
  return "data";
}

interp::NamingMode naming_mode(const std::string& s) {
  return s == "plain" ? interp::NamingMode::kPlain : interp::NamingMode::kMangled;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(p.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(p.string(), "write failed");
}

int cmd_validate(const Config& cfg, std::ostream& out) {
  const auto schema = ksy::load_schema_file(cfg.ksy_path);
  const auto plan = interp::compile_layout(schema, naming_mode(cfg.naming));
  out << "OK\n";
  out << "nodes: " << plan.tree.size() << "\n";
  out << "form:\n" << layout::form_text(plan.tree);
  return kOk;
}

int cmd_parse(const Config& cfg, std::ostream& out) {
  const auto schema = ksy::load_schema_file(cfg.ksy_path);
  const auto plan = interp::compile_layout(schema, naming_mode(cfg.naming));
  const auto filled = interp::parse_file(plan, schema, cfg.data_path);
  if (cfg.format == "buffers") {
    layout::write_bundle(cfg.out_path, layout::export_buffers(filled));
    return kOk;
  }
  const std::string text = layout::to_nested(filled).dump() + "\n";
  if (cfg.out_path.empty()) {
    out << text;
  } else {
    write_text(cfg.out_path, text);
  }
  return kOk;
}

int cmd_dump_form(const Config& cfg, std::ostream& out) {
  const auto schema = ksy::load_schema_file(cfg.ksy_path);
  const auto plan = interp::compile_layout(schema, naming_mode(cfg.naming));
  const std::string text = layout::form_text(plan.tree);
  if (cfg.out_path.empty()) {
    out << text;
  } else {
    fs::path target = cfg.out_path;
    if (fs::is_directory(target)) target /= "form.json";
    write_text(target, text);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpret binary files described by KSY documents into columnar nested arrays", "ksyawk"};
  app.require_subcommand(1);
  Config cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--ksy", cfg.ksy_path, "KSY format description")->required();
    sub->add_option("--naming", cfg.naming, "Field naming: mangled (<type>A__Z<field>) or plain")
        ->check(CLI::IsMember({"mangled", "plain"}));
  };

  CLI::App* validate = app.add_subcommand("validate", "Check a KSY document and summarize its layout");
  add_common(validate);

  CLI::App* parse = app.add_subcommand("parse", "Parse a raw file into nested JSON or a form+buffers bundle");
  add_common(parse);
  parse->add_option("--data", cfg.data_path, "Raw binary input")->required();
  parse->add_option("--format", cfg.format, "Output: json or buffers")->check(CLI::IsMember({"json", "buffers"}));
  parse->add_option("--out", cfg.out_path, "Output file (json) or bundle directory (buffers)");

  CLI::App* dump_form = app.add_subcommand("dump-form", "Write the layout form of a KSY document");
  add_common(dump_form);
  dump_form->add_option("--out", cfg.out_path, "Output file or directory");

  try {
    app.parse(argc, argv);
    if (parse->parsed() && cfg.format == "buffers" && cfg.out_path.empty()) {
      throw CLI::RequiredError("--out is required with --format buffers");
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(cfg, out);
    if (parse->parsed()) return cmd_parse(cfg, out);
    return cmd_dump_form(cfg, out);
  } catch (const SchemaError& e) {
    err << "schema error [" << kind_tag(e.kind()) << "] " << e.what() << "\n";
    return kSchemaError;
  } catch (const ParseError& e) {
    err << "data error [" << kind_tag(e.kind()) << "] " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace ksyawk::cli
