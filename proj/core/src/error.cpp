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

#include "fairforge/error.hpp"

namespace fairforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingColumn: return "missing_column";
    case ErrorCode::kEmptyGroup: return "empty_group";
    case ErrorCode::kNonBinaryLabel: return "non_binary_label";
    case ErrorCode::kEmptyEooPool: return "empty_eoo_pool";
    case ErrorCode::kEmptyMatching: return "empty_matching";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kNoFeasibleCandidate: return "no_feasible_candidate";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kNotReady: return "not_ready";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingColumn:
    case ErrorCode::kNonBinaryLabel:
    case ErrorCode::kValidation:
    case ErrorCode::kParse:
      return true;
    default:
      return false;
  }
}

}  // namespace fairforge
