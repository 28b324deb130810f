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
#include <benchmark/benchmark.h>

#include "fairforge/fair_risk.hpp"
#include "fairforge/metrics.hpp"
#include "fairforge/model.hpp"
#include "fairforge/prepared.hpp"
#include "fairforge/util.hpp"

namespace fairforge {
namespace {

struct Synthetic {
  Eigen::MatrixXd features;
  std::vector<std::uint8_t> labels;
  std::vector<Group> group;
  std::vector<double> scores;
};

Synthetic synthetic(std::size_t n, Eigen::Index d) {
  Rng rng(n);
  Synthetic s;
  s.features.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) s.features(i, c) = uniform(rng, -1.0, 1.0);
    s.labels.push_back(uniform01(rng) < 0.4);
    s.group.push_back(uniform01(rng) < 0.3 ? Group::kUnprivileged : Group::kPrivileged);
    s.scores.push_back(uniform01(rng));
  }
  return s;
}

PreparedSplit split_of(const Synthetic& s) {
  std::vector<std::size_t> rows(s.labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return PreparedSplit::from_parts(Split::kTrain, rows, s.features, s.labels, s.group, s.scores);
}

void BM_MatchPairs(benchmark::State& state) {
  const auto s = synthetic(static_cast<std::size_t>(state.range(0)), 1);
  const std::vector<std::uint8_t> eligible(s.labels.size(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(match_pairs(s.scores, s.group, eligible));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatchPairs)->Arg(1000)->Arg(10000)->Arg(30000);

void BM_EvaluateMetrics(benchmark::State& state) {
  const auto s = synthetic(static_cast<std::size_t>(state.range(0)), 1);
  const auto split = split_of(s);
  std::vector<double> probs(s.scores.begin(), s.scores.end());
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_metrics(probs, split.context()));
}
BENCHMARK(BM_EvaluateMetrics)->Arg(2000)->Arg(30000);

// One full-batch epoch: forward, backward and an Adam step.
void BM_TrainingEpoch(benchmark::State& state) {
  const auto s = synthetic(static_cast<std::size_t>(state.range(0)), 100);
  const auto split = split_of(s);
  TrainConfig cfg;
  cfg.lambda = state.range(1) ? 1.0 : 0.0;
  cfg.weights.fill(0.125);
  auto params = ModelParams::glorot(100, kDefaultHiddenUnits, 0);
  auto grad = ModelParams::zeros(100, kDefaultHiddenUnits);
  auto adam = AdamState::zeros_like(params);
  for (auto _ : state) {
    grad.data().setZero();
    gradient(params, split, cfg, grad);
    adam_step(params, grad, adam, cfg.learning_rate);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainingEpoch)->Args({1200, 0})->Args({1200, 1})->Args({27000, 1});

}  // namespace
}  // namespace fairforge

BENCHMARK_MAIN();
