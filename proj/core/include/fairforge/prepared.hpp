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
#ifndef FAIRFORGE_PREPARED_HPP_
#define FAIRFORGE_PREPARED_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fairforge/dataset.hpp"
#include "fairforge/fair_risk.hpp"
#include "fairforge/metrics.hpp"

namespace fairforge {

// One split materialised for training or evaluation: contiguous features,
// the split's own fair-risk profile (shift constant computed within the
// split) and its frozen matchings.
struct PreparedSplit {
  Split split = Split::kTrain;
  std::vector<std::size_t> rows;  // indices into the source dataset
  Eigen::MatrixXd features;
  std::vector<std::uint8_t> labels;
  std::vector<Group> group;
  FairRiskProfile profile;
  MatchingCache matchings;

  std::size_t size() const { return labels.size(); }
  FairnessContext context() const { return FairnessContext{group, labels, &matchings}; }

  // Builds profile and matchings from precomputed fair-risk scores.
  static PreparedSplit from_parts(Split split, std::vector<std::size_t> rows,
                                  Eigen::MatrixXd features, std::vector<std::uint8_t> labels,
                                  std::vector<Group> group, std::vector<double> scores);
};

// Dataset plus everything that stays fixed while the classifier trains.
struct PreparedDataset {
  TabularDataset dataset;
  FairRiskModel fair_risk;
  std::array<PreparedSplit, 3> splits;

  const PreparedSplit& split(Split s) const { return splits[static_cast<int>(s)]; }

  static PreparedDataset build(TabularDataset ds, const FairRiskFitOptions& options = {});
};

}  // namespace fairforge

#endif  // FAIRFORGE_PREPARED_HPP_
