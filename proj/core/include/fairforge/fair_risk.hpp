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
#ifndef FAIRFORGE_FAIR_RISK_HPP_
#define FAIRFORGE_FAIR_RISK_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fairforge/dataset.hpp"
#include "fairforge/metric_spec.hpp"

namespace fairforge {

struct FairRiskFitOptions {
  double l2 = 1e-4;  // on coefficients only, not the intercept
  double gradient_tolerance = 1e-6;
  int max_iterations = 10000;
};

// Logistic model of the label given only the designated fair features.
struct FairRiskModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  bool degenerate = false;  // all fair-feature rows identical; intercept only
  bool converged = true;
  int iterations = 0;
  double gradient_norm = 0.0;

  // Scores in (0, 1) for each row of an encoded fair-feature matrix.
  std::vector<double> score(const Eigen::MatrixXd& fair_features) const;
  nlohmann::json to_json() const;
};

// Full-batch gradient descent on the L2-penalised mean log loss. Warns and
// returns the last iterate (converged = false) when the cap is reached.
FairRiskModel fit_logistic(const Eigen::MatrixXd& x, std::span<const std::uint8_t> y,
                           const FairRiskFitOptions& options = {});

// Fits on the train split of the dataset's fair features.
FairRiskModel fit_fair_risk(const TabularDataset& ds, const FairRiskFitOptions& options = {});

struct ParityShift {
  double shift_constant = 0.0;  // mean(G-) - mean(G+)
  std::vector<double> shifted_scores;
};

// Shifts privileged scores by the difference of group means so both groups
// share a mean; unprivileged scores are unchanged. Throws kEmptyGroup.
ParityShift parity_shift(std::span<const double> scores, std::span<const Group> group);

struct FairRiskProfile {
  std::vector<double> scores;
  double shift_constant = 0.0;
  std::vector<double> shifted_scores;

  static FairRiskProfile build(std::vector<double> scores, std::span<const Group> group);
  nlohmann::json to_json() const;
};

enum class MatchAxis { kRawScores, kShiftedScores };
std::string_view to_string(MatchAxis a);

// Reference distances within this of the nearest are ties, resolved to the
// lowest index.
inline constexpr double kMatchTieTolerance = 1e-12;

struct MatchedPair {
  std::size_t query = 0;
  std::size_t reference = 0;
  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

// Cross-group 1-NN pairs. Queries come from the group with fewer eligible
// instances (the unprivileged group on equal counts); every eligible query
// appears once, references may repeat.
struct MatchedPairs {
  std::vector<MatchedPair> pairs;
  Group query_group = Group::kUnprivileged;
  MatchAxis axis = MatchAxis::kRawScores;
  Regime regime = Regime::kOutcome;

  nlohmann::json to_json() const;
};

// Nearest reference by |axis[q] - axis[r]|, ties to the lowest reference
// index. eligible[i] != 0 admits instance i on either side. Throws
// kEmptyGroup when either group has no eligible instance.
MatchedPairs match_pairs(std::span<const double> axis, std::span<const Group> group,
                         std::span<const std::uint8_t> eligible);

// Matching on a profile axis; the EOO regime admits only label-1 instances.
MatchedPairs match_profile(const FairRiskProfile& profile, std::span<const Group> group,
                           std::span<const std::uint8_t> labels, MatchAxis axis, Regime regime);

}  // namespace fairforge

#endif  // FAIRFORGE_FAIR_RISK_HPP_
