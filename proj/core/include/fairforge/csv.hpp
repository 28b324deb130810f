// Copyright 2026 The FairForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FAIRFORGE_CSV_HPP_
#define FAIRFORGE_CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fairforge {

// Comma-separated table with a header row. Quoted fields follow RFC 4180
// (doubled quotes escape a quote); fields are not trimmed.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of the first column with this name, or -1.
  int column_index(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace fairforge

#endif  // FAIRFORGE_CSV_HPP_
