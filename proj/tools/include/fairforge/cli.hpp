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
#ifndef FAIRFORGE_CLI_HPP_
#define FAIRFORGE_CLI_HPP_

#include <string>
#include <vector>

namespace fairforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Entry point shared by the fairforge binary and the tests. args excludes
// the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace fairforge::cli

#endif  // FAIRFORGE_CLI_HPP_
