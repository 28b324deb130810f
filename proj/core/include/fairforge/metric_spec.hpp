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
#ifndef FAIRFORGE_METRIC_SPEC_HPP_
#define FAIRFORGE_METRIC_SPEC_HPP_

#include <array>
#include <compare>
#include <string>
#include <string_view>

namespace fairforge {

enum class Granularity { kIndividual, kGroup };
enum class Stance { kInfraMarginal, kIntersectional };
enum class Regime { kOutcome, kEoo };

inline constexpr int kNumMetrics = 8;

// One of the eight (granularity, stance, regime) fairness metrics.
//
// Canonical index order, also the order of every weight vector:
//   0 individual.infra_marginal.outcome   4 group.infra_marginal.outcome
//   1 individual.infra_marginal.eoo       5 group.infra_marginal.eoo
//   2 individual.intersectional.outcome   6 group.intersectional.outcome
//   3 individual.intersectional.eoo       7 group.intersectional.eoo
struct MetricSpec {
  Granularity granularity = Granularity::kGroup;
  Stance stance = Stance::kIntersectional;
  Regime regime = Regime::kOutcome;

  int index() const {
    return static_cast<int>(granularity) * 4 + static_cast<int>(stance) * 2 +
           static_cast<int>(regime);
  }
  static MetricSpec from_index(int m);

  // "{granularity}.{stance}.{regime}", e.g. "individual.infra_marginal.eoo".
  std::string id() const;
  // Throws Error(kValidation) for unknown identifiers.
  static MetricSpec parse(std::string_view id);

  friend auto operator<=>(const MetricSpec&, const MetricSpec&) = default;
};

std::array<MetricSpec, kNumMetrics> all_metrics();

std::string_view to_string(Granularity g);
std::string_view to_string(Stance s);
std::string_view to_string(Regime r);

}  // namespace fairforge

#endif  // FAIRFORGE_METRIC_SPEC_HPP_
