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
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ksyawk::testing {

std::filesystem::path testdata(const std::string& name);
std::string read_text(const std::filesystem::path& p);

/// One animal entry laid out as: length byte, species, age byte, u2le weight.
std::vector<std::uint8_t> animal_entry(const std::string& species, std::uint8_t age, std::uint16_t weight);

/// cat/5/12, dog/3/43, turtle/10/5.
std::vector<std::uint8_t> golden_animal_bytes();

/// The expected nested listing for the golden fixture, as ordered JSON.
nlohmann::ordered_json golden_animal_listing();

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the built `ksyawk` executable with `args` (shell-quoted by caller).
CliResult run_cli_binary(const std::string& args);

/// Scratch directory unique to this process, removed by the caller if wanted.
std::filesystem::path scratch_dir(const std::string& tag);

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes);

}  // namespace ksyawk::testing
