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

#ifndef FAIRFORGE_ERROR_HPP_
#define FAIRFORGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairforge {

enum class ErrorCode {
  kMissingColumn,
  kEmptyGroup,
  kNonBinaryLabel,
  kEmptyEooPool,
  kEmptyMatching,
  kShapeMismatch,
  kNonFinite,
  kNoFeasibleCandidate,
  kValidation,
  kNotFound,
  kNotReady,
  kParse,
  kIo,
};

// Stable snake_case name, used in JSON error bodies and CLI diagnostics.
std::string_view to_string(ErrorCode code);

// True for errors caused by bad user input rather than a runtime failure.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  // Offending input field for validation errors; empty otherwise.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace fairforge

#endif  // FAIRFORGE_ERROR_HPP_
