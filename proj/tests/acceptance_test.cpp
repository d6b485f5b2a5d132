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

// Acceptance gate: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. End-to-end checks go through the built executable.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>

#include "fixtures.hpp"
#include "invariants.hpp"
#include "ksyawk/interp.hpp"
#include "ksyawk/layout.hpp"
#include "ksyawk/schema.hpp"
#include "oracle.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ksyawk;
using layout::Json;

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name, std::ios::binary) << text;
  return dir / name;
}

Outcome golden() {
  Outcome o;
  const auto dir = testing::scratch_dir("acc-golden");
  const auto raw = dir / "animal.raw";
  testing::write_bytes(raw, testing::golden_animal_bytes());
  const auto start = std::chrono::steady_clock::now();
  auto r = testing::run_cli_binary("parse --format json --ksy " + quote(testing::testdata("animal.ksy")) +
                                   " --data " + quote(raw));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.exit_code != 0) {
    o.fail("exit " + std::to_string(r.exit_code) + ": " + r.err);
    return o;
  }
  if (Json::parse(r.out).dump() != testing::golden_animal_listing().dump()) o.fail("output differs: " + r.out);
  if (secs >= 1.0) o.fail("took " + std::to_string(secs) + " s");
  o.detail = o.ok ? "byte-exact, " + std::to_string(secs) + " s" : o.detail;
  return o;
}

Outcome cow() {
  Outcome o;
  const auto dir = testing::scratch_dir("acc-cow");
  const auto raw = dir / "cow.raw";
  testing::write_bytes(raw, {0x03, 0x63, 0x6F, 0x77, 0x06, 0xDC, 0x05});
  auto r = testing::run_cli_binary("parse --naming plain --ksy " + quote(testing::testdata("animal.ksy")) +
                                   " --data " + quote(raw));
  const Json want = Json::parse(R"([{"entry":[{"str_len":3,"species":"cow","age":6,"weight":1500}]}])");
  if (r.exit_code != 0) {
    o.fail("exit " + std::to_string(r.exit_code) + ": " + r.err);
  } else if (Json::parse(r.out) != want) {
    o.fail("got " + r.out);
  }
  return o;
}

// Runs the oracle suite once and evaluates both property criteria over it.
struct OracleRun {
  Outcome equivalence;
  Outcome invariants;
};

OracleRun oracle_suite(int cases) {
  OracleRun run;
  std::mt19937_64 rng(0xacce55);
  int eos = 0;
  for (int i = 0; i < cases; ++i) {
    const auto c = testing::generate_case(rng);
    eos += c.has_eos;
    try {
      auto s = ksy::validate_schema(ksy::load_schema(c.ksy));
      for (auto naming : {interp::NamingMode::kMangled, interp::NamingMode::kPlain}) {
        auto plan = interp::compile_layout(s, naming);
        auto fl = interp::parse_data(plan, s, c.data);
        const Json nested = layout::to_nested(fl);
        const Json& want = naming == interp::NamingMode::kMangled ? c.expected : c.expected_plain;
        if (nested != want) run.equivalence.fail("case " + std::to_string(i) + " differs");

        auto bundle = layout::export_buffers(fl);
        auto problems = testing::bundle_violations(bundle.form_json, bundle.buffers);
        if (layout::reconstruct(bundle.form_json, bundle.buffers) != nested) {
          problems.push_back("export->reconstruct differs");
        }
        if (!problems.empty()) {
          run.invariants.fail("case " + std::to_string(i) + ": " + problems.front());
        }
      }
    } catch (const std::exception& e) {
      run.equivalence.fail("case " + std::to_string(i) + " threw: " + e.what());
      run.invariants.fail("case " + std::to_string(i) + " threw");
    }
  }
  if (run.equivalence.ok) {
    run.equivalence.detail = std::to_string(cases) + " cases (" + std::to_string(eos) + " with eos), 0 mismatches";
  }
  if (run.invariants.ok) run.invariants.detail = std::to_string(cases) + " cases, 0 violations";
  return run;
}

Outcome error_paths() {
  Outcome o;
  const auto dir = testing::scratch_dir("acc-errors");
  const auto ksy = quote(testing::testdata("animal.ksy"));
  const auto golden_bytes = testing::golden_animal_bytes();
  int enumerated = 0;

  // Every one-byte-or-more truncation that ends inside an entry.
  for (std::size_t len = 1; len < golden_bytes.size(); ++len) {
    if (len == 7 || len == 14) continue;  // entry boundaries: a valid shorter file
    std::vector<std::uint8_t> prefix(golden_bytes.begin(), golden_bytes.begin() + static_cast<std::ptrdiff_t>(len));
    const auto raw = dir / ("t" + std::to_string(len) + ".raw");
    testing::write_bytes(raw, prefix);
    auto r = testing::run_cli_binary("parse --ksy " + ksy + " --data " + quote(raw));
    ++enumerated;
    const auto at = r.err.find(" at offset ");
    const auto tag_end = r.err.find("] ");
    const bool has_path = at != std::string::npos && tag_end != std::string::npos && at > tag_end + 2;
    if (r.exit_code != 3 || !has_path || !r.out.empty()) {
      o.fail("prefix " + std::to_string(len) + ": exit " + std::to_string(r.exit_code) + " " + r.err);
    }
  }

  struct BadSchema {
    const char* name;
    const char* text;
    const char* tag;
  };
  const BadSchema schemas[] = {
      {"cycle.ksy",
       "meta: {id: c, endian: le}\nseq:\n  - id: x\n    type: a\ntypes:\n  a:\n    seq:\n      - id: y\n        type: b\n"
       "  b:\n    seq:\n      - id: z\n        type: a\n",
       "[type-cycle]"},
      {"unknown.ksy", "meta: {id: u, endian: le}\nseq:\n  - id: x\n    type: animal_entry\n", "[unresolved-type]"},
      {"forward.ksy",
       "meta: {id: f, endian: le}\nseq:\n  - id: s\n    type: str\n    size: n\n  - id: n\n    type: u1\n",
       "[bad-reference]"},
  };
  for (const auto& bad : schemas) {
    const auto p = write_file(dir, bad.name, bad.text);
    for (const char* cmd : {"validate", "dump-form"}) {
      auto r = testing::run_cli_binary(std::string(cmd) + " --ksy " + quote(p));
      ++enumerated;
      if (r.exit_code != 2 || r.err.find(bad.tag) == std::string::npos) {
        o.fail(std::string(bad.name) + " " + cmd + ": exit " + std::to_string(r.exit_code) + " " + r.err);
      }
    }
    auto r = testing::run_cli_binary("parse --ksy " + quote(p) + " --data " + quote(testing::testdata("cow.raw")));
    ++enumerated;
    if (r.exit_code != 2 || r.err.find(bad.tag) == std::string::npos) {
      o.fail(std::string(bad.name) + " parse: exit " + std::to_string(r.exit_code));
    }
  }
  if (o.ok) o.detail = std::to_string(enumerated) + "/" + std::to_string(enumerated) + " cases";
  return o;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& f : files) {
    h = fnv1a(h, f.filename().string());
    h = fnv1a(h, testing::read_text(f));
  }
  return h;
}

Outcome determinism() {
  Outcome o;
  std::vector<std::uint64_t> hashes;
  std::vector<fs::path> dirs;
  for (const char* tag : {"acc-det-a", "acc-det-b"}) {
    const auto dir = dirs.emplace_back(testing::scratch_dir(tag));
    fs::remove_all(dir);
    auto r = testing::run_cli_binary("parse --format buffers --ksy " + quote(testing::testdata("animal.ksy")) +
                                     " --data " + quote(testing::testdata("animal.raw")) + " --out " + quote(dir));
    if (r.exit_code != 0) {
      o.fail("exit " + std::to_string(r.exit_code) + ": " + r.err);
      return o;
    }
    hashes.push_back(hash_dir(dir));
  }
  if (hashes[0] != hashes[1]) o.fail("bundle hashes differ");
  if (!fs::exists(dirs[0] / "form.json")) o.fail("form.json missing");
  if (o.ok) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hashes[0]));
    o.detail = std::string("fnv1a ") + buf;
  }
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const Outcome& o) {
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << name << (o.detail.empty() ? "" : "  (" + o.detail + ")") << "\n";
    failures += !o.ok;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      Outcome o;
      o.fail(std::string("exception: ") + e.what());
      return o;
    }
  };

  report("golden animal listing", guarded(golden));
  report("cow entry", guarded(cow));
  OracleRun oracle;
  try {
    oracle = oracle_suite(600);
  } catch (const std::exception& e) {
    oracle.equivalence.fail(e.what());
    oracle.invariants.fail(e.what());
  }
  report("oracle equivalence", oracle.equivalence);
  report("layout invariants", oracle.invariants);
  report("error paths", guarded(error_paths));
  report("determinism", guarded(determinism));
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}
