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
#ifndef FAIRFORGE_TESTS_TEST_UTIL_HPP_
#define FAIRFORGE_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "fairforge/prepared.hpp"
#include "fairforge/util.hpp"

namespace fairforge::testing {

// Random split with both groups and both labels present. Scores are drawn
// from a small grid when discrete is set, so matching ties are common.
struct SyntheticSplit {
  std::vector<double> probs;
  std::vector<std::uint8_t> labels;
  std::vector<Group> group;
  std::vector<double> scores;
};

inline SyntheticSplit random_split(Rng& rng, std::size_t n, bool discrete) {
  SyntheticSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    s.probs.push_back(uniform(rng, 0.02, 0.98));
    s.labels.push_back(uniform01(rng) < 0.5);
    s.group.push_back(uniform01(rng) < 0.5 ? Group::kPrivileged : Group::kUnprivileged);
    s.scores.push_back(discrete ? static_cast<double>(rng() % 6) / 8.0 + 0.1
                                : uniform(rng, 0.05, 0.95));
  }
  // Guarantee every (group, label) cell is populated.
  for (std::size_t k = 0; k < 4 && k < n; ++k) {
    s.group[k] = k < 2 ? Group::kPrivileged : Group::kUnprivileged;
    s.labels[k] = k % 2;
  }
  return s;
}

inline std::vector<int> as_int(const std::vector<std::uint8_t>& v) {
  return {v.begin(), v.end()};
}

inline std::vector<int> unpriv_flags(const std::vector<Group>& g) {
  std::vector<int> out;
  for (auto x : g) out.push_back(x == Group::kUnprivileged);
  return out;
}

inline PreparedSplit make_split(const SyntheticSplit& s, Eigen::MatrixXd features) {
  std::vector<std::size_t> rows(s.labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return PreparedSplit::from_parts(Split::kTrain, rows, std::move(features), s.labels, s.group,
                                   s.scores);
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = uniform(rng, -1.0, 1.0);
  }
  return m;
}

inline std::filesystem::path data_dir() { return FAIRFORGE_TEST_DATA_DIR; }

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fairforge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fairforge::testing

#endif  // FAIRFORGE_TESTS_TEST_UTIL_HPP_
