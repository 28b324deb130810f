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

#include <vector>

namespace fairforge {

namespace {

struct Clamped {
  double p;
  bool active;  // inside the clamp range; derivative passes through
};

Clamped clamped(double p) {
  const double c = clamp_probability(p);
  return {c, c == p};
}

// Symmetrised ratio a/b and its partial derivatives.
struct SymRatio {
  double value, d_num, d_den;
};

SymRatio symmetrised(double num, double den) {
  if (num <= den) return {num / den, 1.0 / den, -num / (den * den)};
  return {den / num, -den / (num * num), 1.0 / num};
}

}  // namespace

MetricValue group_ratio(std::span<const double> probs, std::span<const Group> group,
                        Regime regime, std::span<const std::uint8_t> labels,
                        GradientSink* sink) {
  double sum_u = 0.0, sum_p = 0.0;
  std::size_t n_u = 0, n_p = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (regime == Regime::kEoo && !labels[i]) continue;
    const double p = clamped(probs[i]).p;
    if (group[i] == Group::kUnprivileged) {
      sum_u += p;
      ++n_u;
    } else {
      sum_p += p;
      ++n_p;
    }
  }
  if (n_u == 0 || n_p == 0) {
    if (regime == Regime::kEoo) {
      throw Error(ErrorCode::kEmptyEooPool, "a group has no label-1 instances");
    }
    throw Error(ErrorCode::kEmptyGroup, "group ratio needs instances from both groups");
  }
  const double mean_u = sum_u / static_cast<double>(n_u);
  const double mean_p = sum_p / static_cast<double>(n_p);
  const auto r = symmetrised(mean_u, mean_p);
  if (sink) {
    const double gu = sink->scale * r.d_num / static_cast<double>(n_u);
    const double gp = sink->scale * r.d_den / static_cast<double>(n_p);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (regime == Regime::kEoo && !labels[i]) continue;
      if (!clamped(probs[i]).active) continue;
      sink->grad[i] += group[i] == Group::kUnprivileged ? gu : gp;
    }
  }
  return MetricValue{r.value, mean_u / mean_p, MetricSupport{0, n_u, n_p}};
}

MetricValue matched_group_ratio(std::span<const double> probs, const MatchedPairs& pairs,
                                GradientSink* sink) {
  if (pairs.pairs.empty()) throw Error(ErrorCode::kEmptyMatching, "matching has no pairs");
  const bool query_unpriv = pairs.query_group == Group::kUnprivileged;
  double sum_u = 0.0, sum_p = 0.0;
  for (const auto& pr : pairs.pairs) {
    const double q = clamped(probs[pr.query]).p;
    const double r = clamped(probs[pr.reference]).p;
    sum_u += query_unpriv ? q : r;
    sum_p += query_unpriv ? r : q;
  }
  const double n = static_cast<double>(pairs.pairs.size());
  const double mean_u = sum_u / n, mean_p = sum_p / n;
  const auto r = symmetrised(mean_u, mean_p);
  if (sink) {
    const double gu = sink->scale * r.d_num / n;
    const double gp = sink->scale * r.d_den / n;
    for (const auto& pr : pairs.pairs) {
      if (clamped(probs[pr.query]).active) sink->grad[pr.query] += query_unpriv ? gu : gp;
      if (clamped(probs[pr.reference]).active) {
        sink->grad[pr.reference] += query_unpriv ? gp : gu;
      }
    }
  }
  MetricSupport support{pairs.pairs.size(), 0, 0};
  return MetricValue{r.value, mean_u / mean_p, support};
}

MetricValue pairwise_ratio(std::span<const double> probs, const MatchedPairs& pairs,
                           GradientSink* sink) {
  if (pairs.pairs.empty()) throw Error(ErrorCode::kEmptyMatching, "matching has no pairs");
  const bool query_unpriv = pairs.query_group == Group::kUnprivileged;
  const double n = static_cast<double>(pairs.pairs.size());
  double sum_value = 0.0, sum_raw = 0.0;
  for (const auto& pr : pairs.pairs) {
    const std::size_t iu = query_unpriv ? pr.query : pr.reference;
    const std::size_t ip = query_unpriv ? pr.reference : pr.query;
    const auto cu = clamped(probs[iu]);
    const auto cp = clamped(probs[ip]);
    const auto r = symmetrised(cu.p, cp.p);
    sum_value += r.value;
    sum_raw += cu.p / cp.p;
    if (sink) {
      if (cu.active) sink->grad[iu] += sink->scale * r.d_num / n;
      if (cp.active) sink->grad[ip] += sink->scale * r.d_den / n;
    }
  }
  MetricSupport support{pairs.pairs.size(), 0, 0};
  return MetricValue{sum_value / n, sum_raw / n, support};
}

MatchingCache MatchingCache::build(const FairRiskProfile& profile, std::span<const Group> group,
                                   std::span<const std::uint8_t> labels) {
  MatchingCache cache;
  for (auto axis : {MatchAxis::kRawScores, MatchAxis::kShiftedScores}) {
    for (auto regime : {Regime::kOutcome, Regime::kEoo}) {
      try {
        cache.pairs_[slot(axis, regime)] = match_profile(profile, group, labels, axis, regime);
      } catch (const Error& e) {
        cache.errors_[slot(axis, regime)] = e;
      }
    }
  }
  return cache;
}

const MatchedPairs& MatchingCache::get(MatchAxis axis, Regime regime) const {
  const int s = slot(axis, regime);
  if (errors_[s]) throw *errors_[s];
  if (!pairs_[s]) throw Error(ErrorCode::kEmptyMatching, "matching cache is empty");
  return *pairs_[s];
}

std::optional<MatchAxis> matching_axis(const MetricSpec& spec) {
  if (spec.granularity == Granularity::kIndividual) {
    return spec.stance == Stance::kIntersectional ? MatchAxis::kShiftedScores
                                                  : MatchAxis::kRawScores;
  }
  if (spec.stance == Stance::kInfraMarginal) return MatchAxis::kRawScores;
  return std::nullopt;
}

MetricValue compute_metric(const MetricSpec& spec, std::span<const double> probs,
                           const FairnessContext& ctx, GradientSink* sink) {
  if (probs.size() != ctx.group.size() || probs.size() != ctx.labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "predictions and group/label vectors differ in length");
  }
  const auto axis = matching_axis(spec);
  if (!axis) return group_ratio(probs, ctx.group, spec.regime, ctx.labels, sink);
  if (!ctx.matchings) throw Error(ErrorCode::kEmptyMatching, "metric requires a matching cache");
  const auto& pairs = ctx.matchings->get(*axis, spec.regime);
  if (spec.granularity == Granularity::kIndividual) return pairwise_ratio(probs, pairs, sink);
  return matched_group_ratio(probs, pairs, sink);
}

MetricVector evaluate_metrics(std::span<const double> probs, const FairnessContext& ctx) {
  MetricVector out;
  for (const auto& spec : all_metrics()) {
    try {
      out[spec.index()] = compute_metric(spec, probs, ctx).value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyEooPool && e.code() != ErrorCode::kEmptyGroup &&
          e.code() != ErrorCode::kEmptyMatching) {
        throw;
      }
    }
  }
  return out;
}

}  // namespace fairforge
