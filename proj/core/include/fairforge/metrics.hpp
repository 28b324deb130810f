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
#ifndef FAIRFORGE_METRICS_HPP_
#define FAIRFORGE_METRICS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "fairforge/dataset.hpp"
#include "fairforge/error.hpp"
#include "fairforge/fair_risk.hpp"
#include "fairforge/metric_spec.hpp"

namespace fairforge {

inline constexpr double kProbabilityFloor = 1e-8;

inline double clamp_probability(double p) {
  return p < kProbabilityFloor ? kProbabilityFloor
         : p > 1.0 - kProbabilityFloor ? 1.0 - kProbabilityFloor
                                        : p;
}

struct MetricSupport {
  std::size_t pairs = 0;
  std::size_t unprivileged = 0;
  std::size_t privileged = 0;
};

// value is the symmetrised ratio min(rho, 1/rho) in (0, 1] (averaged over
// pairs for individual metrics); raw_ratio is unprivileged over privileged
// before symmetrisation (the mean pairwise ratio for individual metrics).
struct MetricValue {
  double value = 1.0;
  double raw_ratio = 1.0;
  MetricSupport support;
};

// Optional gradient output: grad[i] += scale * d(value)/d(probs[i]).
// At rho == 1 the rho <= 1 branch supplies the subgradient.
struct GradientSink {
  std::span<double> grad;
  double scale = 1.0;
};

// Ratio of group means. The EOO regime averages label-1 instances only.
// Throws kEmptyGroup, or kEmptyEooPool when a group has no label-1 instance.
MetricValue group_ratio(std::span<const double> probs, std::span<const Group> group,
                        Regime regime, std::span<const std::uint8_t> labels,
                        GradientSink* sink = nullptr);

// Ratio of group means restricted to the matched sample (references counted
// once per pair). Throws kEmptyMatching.
MetricValue matched_group_ratio(std::span<const double> probs, const MatchedPairs& pairs,
                                GradientSink* sink = nullptr);

// Mean over pairs of the symmetrised pairwise probability ratio.
// Throws kEmptyMatching.
MetricValue pairwise_ratio(std::span<const double> probs, const MatchedPairs& pairs,
                           GradientSink* sink = nullptr);

// The four matchings a split needs, built once and frozen. A matching that
// cannot be formed keeps its error and rethrows it on access.
class MatchingCache {
 public:
  MatchingCache() = default;
  static MatchingCache build(const FairRiskProfile& profile, std::span<const Group> group,
                             std::span<const std::uint8_t> labels);

  const MatchedPairs& get(MatchAxis axis, Regime regime) const;

 private:
  static int slot(MatchAxis axis, Regime regime) {
    return static_cast<int>(axis) * 2 + static_cast<int>(regime);
  }
  std::array<std::optional<MatchedPairs>, 4> pairs_;
  std::array<std::optional<Error>, 4> errors_;
};

// Group/label structure and frozen matchings of one evaluation split.
struct FairnessContext {
  std::span<const Group> group;
  std::span<const std::uint8_t> labels;
  const MatchingCache* matchings = nullptr;
};

// Matching axis used by a metric, or nullopt for unmatched group parity.
std::optional<MatchAxis> matching_axis(const MetricSpec& spec);

// Dispatch: individual -> pairwise_ratio; group infra-marginal ->
// matched_group_ratio; group intersectional -> group_ratio.
MetricValue compute_metric(const MetricSpec& spec, std::span<const double> probs,
                           const FairnessContext& ctx, GradientSink* sink = nullptr);

using MetricVector = std::array<std::optional<double>, kNumMetrics>;

// All eight values; a metric that cannot be evaluated (empty pool) is nullopt.
MetricVector evaluate_metrics(std::span<const double> probs, const FairnessContext& ctx);

}  // namespace fairforge

#endif  // FAIRFORGE_METRICS_HPP_
