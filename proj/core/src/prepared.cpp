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
#include "fairforge/prepared.hpp"

namespace fairforge {

PreparedSplit PreparedSplit::from_parts(Split split, std::vector<std::size_t> rows,
                                        Eigen::MatrixXd features,
                                        std::vector<std::uint8_t> labels, std::vector<Group> group,
                                        std::vector<double> scores) {
  PreparedSplit out;
  out.split = split;
  out.rows = std::move(rows);
  out.features = std::move(features);
  out.labels = std::move(labels);
  out.group = std::move(group);
  out.profile = FairRiskProfile::build(std::move(scores), out.group);
  out.matchings = MatchingCache::build(out.profile, out.group, out.labels);
  return out;
}

PreparedDataset PreparedDataset::build(TabularDataset ds, const FairRiskFitOptions& options) {
  PreparedDataset out;
  out.fair_risk = fit_fair_risk(ds, options);
  const auto all_scores = out.fair_risk.score(ds.fair_features);
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    auto rows = ds.indices(s);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
    std::vector<std::uint8_t> y(rows.size());
    std::vector<Group> g(rows.size());
    std::vector<double> scores(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      x.row(static_cast<Eigen::Index>(k)) = ds.features.row(static_cast<Eigen::Index>(rows[k]));
      y[k] = ds.labels[rows[k]];
      g[k] = ds.group[rows[k]];
      scores[k] = all_scores[rows[k]];
    }
    if (rows.empty()) {
      out.splits[static_cast<int>(s)].split = s;
      continue;
    }
    out.splits[static_cast<int>(s)] = PreparedSplit::from_parts(
        s, std::move(rows), std::move(x), std::move(y), std::move(g), std::move(scores));
  }
  out.dataset = std::move(ds);
  return out;
}

}  // namespace fairforge
