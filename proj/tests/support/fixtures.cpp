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

#include "fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ksyawk::testing {

std::filesystem::path testdata(const std::string& name) { return std::filesystem::path(KSYAWK_TESTDATA_DIR) / name; }

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::uint8_t> animal_entry(const std::string& species, std::uint8_t age, std::uint16_t weight) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(species.size()));
  out.insert(out.end(), species.begin(), species.end());
  out.push_back(age);
  out.push_back(static_cast<std::uint8_t>(weight & 0xFF));
  out.push_back(static_cast<std::uint8_t>(weight >> 8));
  return out;
}

std::vector<std::uint8_t> golden_animal_bytes() {
  std::vector<std::uint8_t> out;
  for (const auto& e : {animal_entry("cat", 5, 12), animal_entry("dog", 3, 43), animal_entry("turtle", 10, 5)}) {
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

nlohmann::ordered_json golden_animal_listing() {
  // Verbatim listing with Python quoting, converted to JSON quoting.
  std::string listing = R"([{'animalA__Zentry':[
    {'animal_entryA__Zstr_len': 3, 'animal_entryA__Zspecies': 'cat',
    'animal_entryA__Zage': 5, 'animal_entryA__Zweight': 12},
    {'animal_entryA__Zstr_len': 3, 'animal_entryA__Zspecies': 'dog',
    'animal_entryA__Zage': 3, 'animal_entryA__Zweight': 43},
    {'animal_entryA__Zstr_len': 6,'animal_entryA__Zspecies': 'turtle',
    'animal_entryA__Zage': 10, 'animal_entryA__Zweight': 5}
]}])";
  for (char& c : listing) {
    if (c == '\'') c = '"';
  }
  return nlohmann::ordered_json::parse(listing);
}

std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("ksyawk-" + tag + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

CliResult run_cli_binary(const std::string& args) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path();
  const auto tag = std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto out_path = dir / ("ksyawk-out-" + tag);
  const auto err_path = dir / ("ksyawk-err-" + tag);
  const std::string cmd = std::string("'") + KSYAWK_CLI_PATH + "' " + args + " >'" + out_path.string() + "' 2>'" +
                          err_path.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out_path);
  r.err = read_text(err_path);
  std::filesystem::remove(out_path);
  std::filesystem::remove(err_path);
  return r;
}

}  // namespace ksyawk::testing
