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
#include "fairforge/metrics.hpp"

#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "fairforge/error.hpp"
#include "fairforge/metric_spec.hpp"
#include "fairforge/util.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fairforge {
namespace {

using testing::as_int;
using testing::make_split;
using testing::random_split;
using testing::unpriv_flags;

constexpr auto U = Group::kUnprivileged;
constexpr auto P = Group::kPrivileged;

TEST(MetricSpec, IdsAndIndicesAreStable) {
  const char* ids[] = {"individual.infra_marginal.outcome", "individual.infra_marginal.eoo",
                       "individual.intersectional.outcome", "individual.intersectional.eoo",
                       "group.infra_marginal.outcome",      "group.infra_marginal.eoo",
                       "group.intersectional.outcome",      "group.intersectional.eoo"};
  std::set<std::string> seen;
  for (int m = 0; m < kNumMetrics; ++m) {
    const auto spec = MetricSpec::from_index(m);
    EXPECT_EQ(spec.id(), ids[m]);
    EXPECT_EQ(spec.index(), m);
    EXPECT_EQ(MetricSpec::parse(ids[m]), spec);
    seen.insert(spec.id());
  }
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_THROW(MetricSpec::parse("group.intersectional"), Error);
  EXPECT_THROW(MetricSpec::parse("group.fancy.outcome"), Error);
}

TEST(GroupRatio, Examples) {
  const std::vector<Group> g{U, U, P, P};
  const std::vector<std::uint8_t> y{1, 0, 1, 0};
  auto v = group_ratio(std::vector<double>{0.3, 0.5, 0.5, 0.5}, g, Regime::kOutcome, y);
  EXPECT_NEAR(v.raw_ratio, 0.8, 1e-12);
  EXPECT_NEAR(v.value, 0.8, 1e-12);
  EXPECT_EQ(v.support.unprivileged, 2u);

  v = group_ratio(std::vector<double>{0.2, 0.7, 0.7, 0.2}, g, Regime::kOutcome, y);
  EXPECT_DOUBLE_EQ(v.value, 1.0);

  v = group_ratio(std::vector<double>{0.6, 0.6, 0.4, 0.4}, g, Regime::kOutcome, y);
  EXPECT_NEAR(v.raw_ratio, 1.5, 1e-12);
  EXPECT_NEAR(v.value, 1.0 / 1.5, 1e-12);

  // EOO only looks at y = 1.
  v = group_ratio(std::vector<double>{0.3, 0.9, 0.6, 0.1}, g, Regime::kEoo, y);
  EXPECT_NEAR(v.raw_ratio, 0.5, 1e-12);
}

TEST(GroupRatio, Errors) {
  const std::vector<Group> g{U, U, P};
  const std::vector<double> p{0.2, 0.3, 0.4};
  try {
    group_ratio(p, g, Regime::kEoo, std::vector<std::uint8_t>{1, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyEooPool);
  }
  try {
    group_ratio(p, std::vector<Group>{U, U, U}, Regime::kOutcome, std::vector<std::uint8_t>{1, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGroup);
  }
}

MatchedPairs pairs_of(std::vector<MatchedPair> v, Group query = U) {
  MatchedPairs m;
  m.pairs = std::move(v);
  m.query_group = query;
  return m;
}

TEST(MatchedGroupRatio, Examples) {
  const std::vector<double> p{0.2, 0.4, 0.4, 0.6};
  EXPECT_NEAR(matched_group_ratio(p, pairs_of({{0, 2}, {1, 3}})).raw_ratio, 0.6, 1e-12);
  EXPECT_DOUBLE_EQ(matched_group_ratio(p, pairs_of({{1, 2}})).value, 1.0);
  // With privileged queries the orientation flips back to unprivileged over privileged.
  EXPECT_NEAR(matched_group_ratio(p, pairs_of({{2, 0}, {3, 1}}, P)).raw_ratio, 0.6, 1e-12);
  try {
    matched_group_ratio(p, pairs_of({}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyMatching);
  }
}

TEST(MatchedGroupRatio, FortyRandomPairs) {
  Rng rng(40);
  std::vector<double> p(80);
  for (auto& x : p) x = uniform(rng, 0.05, 0.95);
  std::vector<MatchedPair> v;
  double sq = 0, sr = 0;
  for (std::size_t k = 0; k < 40; ++k) {
    const std::size_t r = 40 + rng() % 40;
    v.push_back({k, r});
    sq += p[k];
    sr += p[r];
  }
  const auto got = matched_group_ratio(p, pairs_of(v));
  EXPECT_NEAR(got.raw_ratio, (sq / 40) / (sr / 40), 1e-12);
  EXPECT_NEAR(got.value, std::min(sq / sr, sr / sq), 1e-12);
}

TEST(PairwiseRatio, Examples) {
  const std::vector<double> p{0.3, 0.3, 0.2, 0.4, 0.8, 0.8};
  EXPECT_DOUBLE_EQ(pairwise_ratio(p, pairs_of({{0, 1}, {4, 5}})).value, 1.0);
  EXPECT_NEAR(pairwise_ratio(p, pairs_of({{2, 3}, {0, 1}})).value, 0.75, 1e-12);
  EXPECT_NEAR(pairwise_ratio(p, pairs_of({{3, 2}, {0, 1}})).value, 0.75, 1e-12);
}

TEST(PairwiseRatio, TwentyFiveRandomPairs) {
  Rng rng(25);
  std::vector<double> p(50);
  for (auto& x : p) x = uniform(rng, 0.01, 0.99);
  std::vector<MatchedPair> v;
  double want = 0;
  for (std::size_t k = 0; k < 25; ++k) {
    const std::size_t r = 25 + rng() % 25;
    v.push_back({k, r});
    want += std::min(p[k] / p[r], p[r] / p[k]);
  }
  EXPECT_NEAR(pairwise_ratio(p, pairs_of(v)).value, want / 25, 1e-12);
}

TEST(ComputeMetric, MatchesOracleOnSmallDatasets) {
  Rng rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng() % 17;
    auto s = random_split(rng, n, trial % 2 == 0);
    if (trial % 7 == 0) s.probs[0] = 0.0;  // exercises clamping
    const auto split = make_split(s, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1));
    const auto values = evaluate_metrics(s.probs, split.context());
    for (const auto& spec : all_metrics()) {
      const auto want = oracle::metric(spec.id(), s.probs, unpriv_flags(s.group), as_int(s.labels),
                                       s.scores);
      ASSERT_EQ(values[spec.index()].has_value(), want.has_value()) << spec.id();
      if (want) {
        EXPECT_NEAR(*values[spec.index()], *want, 1e-10) << spec.id() << " trial " << trial;
      }
    }
  }
}

TEST(ComputeMetric, DispatchUsesTheDocumentedAxis) {
  EXPECT_EQ(matching_axis(MetricSpec::parse("individual.intersectional.outcome")),
            MatchAxis::kShiftedScores);
  EXPECT_EQ(matching_axis(MetricSpec::parse("individual.infra_marginal.eoo")),
            MatchAxis::kRawScores);
  EXPECT_EQ(matching_axis(MetricSpec::parse("group.infra_marginal.outcome")),
            MatchAxis::kRawScores);
  EXPECT_FALSE(matching_axis(MetricSpec::parse("group.intersectional.eoo")).has_value());
}

TEST(ComputeMetric, GroupIntersectionalEooUsesPositivesOnly) {
  Rng rng(8);
  auto s = random_split(rng, 30, false);
  const auto split = make_split(s, Eigen::MatrixXd::Zero(30, 1));
  const auto spec = MetricSpec::parse("group.intersectional.eoo");
  const double before = compute_metric(spec, s.probs, split.context()).value;
  for (std::size_t i = 0; i < 30; ++i) {
    if (!s.labels[i]) s.probs[i] = 0.5 * s.probs[i];
  }
  EXPECT_EQ(compute_metric(spec, s.probs, split.context()).value, before);
}

TEST(MetricProperties, RangeAndExactSymmetry) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_split(rng, 40, trial % 2);
    const auto split = make_split(s, Eigen::MatrixXd::Zero(40, 1));
    for (auto v : evaluate_metrics(s.probs, split.context())) {
      ASSERT_TRUE(v.has_value());
      EXPECT_GT(*v, 0.0);
      EXPECT_LE(*v, 1.0);
    }
  }
  // Mirrored groups with mirrored predictions: exact parity everywhere.
  std::vector<double> probs, scores;
  std::vector<std::uint8_t> labels;
  std::vector<Group> group;
  for (int i = 0; i < 10; ++i) {
    for (auto g : {P, U}) {
      probs.push_back(0.1 + 0.08 * i);
      scores.push_back(0.05 + 0.09 * i);
      labels.push_back(i % 2);
      group.push_back(g);
    }
  }
  const auto split = make_split({probs, labels, group, scores}, Eigen::MatrixXd::Zero(20, 1));
  for (auto v : evaluate_metrics(probs, split.context())) EXPECT_DOUBLE_EQ(*v, 1.0);
}

TEST(MetricProperties, SwappingGroupsKeepsValues) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = random_split(rng, 41, false);  // odd size: groups never tie
    auto t = s;
    for (auto& g : t.group) g = g == P ? U : P;
    const auto a = make_split(s, Eigen::MatrixXd::Zero(41, 1));
    const auto b = make_split(t, Eigen::MatrixXd::Zero(41, 1));
    int positives_u = 0, positives_p = 0;
    for (std::size_t i = 0; i < 41; ++i) (s.group[i] == U ? positives_u : positives_p) += s.labels[i];
    for (const auto& spec : all_metrics()) {
      // Equal pool sizes pick the query side by group, which the swap changes.
      if (spec.regime == Regime::kEoo && positives_u == positives_p) continue;
      const auto va = compute_metric(spec, s.probs, a.context());
      const auto vb = compute_metric(spec, t.probs, b.context());
      EXPECT_NEAR(va.value, vb.value, 1e-12) << spec.id();
      if (spec.granularity == Granularity::kGroup) {
        EXPECT_NEAR(va.raw_ratio * vb.raw_ratio, 1.0, 1e-12) << spec.id();
      }
    }
  }
}

TEST(MetricProperties, EooEqualsOutcomeWhenAllPositive) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_split(rng, 30, trial % 2);
    std::fill(s.labels.begin(), s.labels.end(), 1);
    const auto split = make_split(s, Eigen::MatrixXd::Zero(30, 1));
    const auto v = evaluate_metrics(s.probs, split.context());
    for (int m = 0; m < kNumMetrics; m += 2) EXPECT_EQ(*v[m], *v[m + 1]);
  }
}

TEST(MetricProperties, InvariantUnderGlobalScaling) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_split(rng, 30, false);
    const auto split = make_split(s, Eigen::MatrixXd::Zero(30, 1));
    auto scaled = s.probs;
    for (auto& p : scaled) p *= 0.37;
    const auto a = evaluate_metrics(s.probs, split.context());
    const auto b = evaluate_metrics(scaled, split.context());
    for (int m = 0; m < kNumMetrics; ++m) EXPECT_NEAR(*a[m], *b[m], 1e-12);
  }
}

TEST(MetricProperties, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = random_split(rng, 16, false);
    const auto split = make_split(s, Eigen::MatrixXd::Zero(16, 1));
    for (const auto& spec : all_metrics()) {
      std::vector<double> grad(16, 0.0);
      GradientSink sink{grad, 1.0};
      compute_metric(spec, s.probs, split.context(), &sink);
      for (std::size_t i = 0; i < 16; ++i) {
        const double h = 1e-5;
        auto up = s.probs, down = s.probs;
        up[i] += h;
        down[i] -= h;
        const double fd = (compute_metric(spec, up, split.context()).value -
                           compute_metric(spec, down, split.context()).value) /
                          (2 * h);
        EXPECT_LE(std::abs(fd - grad[i]), 1e-4 * std::max(1.0, std::abs(fd)))
            << spec.id() << " coord " << i;
      }
    }
  }
}

TEST(MetricProperties, KinkUsesLowerBranchAndClampedProbsHaveNoGradient) {
  const std::vector<double> p{0.4, 0.4, 0.0, 0.5};
  std::vector<double> grad(4, 0.0);
  GradientSink sink{grad, 1.0};
  pairwise_ratio(p, pairs_of({{0, 1}, {2, 3}}), &sink);
  EXPECT_NEAR(grad[0], 0.5 / 0.4, 1e-12);
  EXPECT_NEAR(grad[1], -0.5 / 0.4, 1e-12);
  EXPECT_EQ(grad[2], 0.0);
  EXPECT_NE(grad[3], 0.0);
}

TEST(ComputeMetric, RejectsLengthMismatch) {
  Rng rng(6);
  auto s = random_split(rng, 10, false);
  const auto split = make_split(s, Eigen::MatrixXd::Zero(10, 1));
  const std::vector<double> short_probs(9, 0.5);
  EXPECT_THROW(compute_metric(MetricSpec{}, short_probs, split.context()), Error);
}

}  // namespace
}  // namespace fairforge
