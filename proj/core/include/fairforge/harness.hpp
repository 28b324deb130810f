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
#ifndef FAIRFORGE_HARNESS_HPP_
#define FAIRFORGE_HARNESS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairforge/dataset.hpp"
#include "fairforge/metric_spec.hpp"
#include "fairforge/model.hpp"
#include "fairforge/prepared.hpp"

namespace fairforge {

using Weights = std::array<double, kNumMetrics>;

// Where a sweep's data comes from. Relative paths resolve against the
// directory of the document that declared them.
struct DatasetRef {
  std::string name;
  std::filesystem::path csv;
  std::filesystem::path schema;
  LoadOptions load;

  static DatasetRef from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json to_json() const;
  // Content-addressed identity: file fingerprints instead of paths.
  nlohmann::json identity() const;

  DatasetSchema load_schema() const;
  TabularDataset load_data() const;
};

enum class PlanKind { kTrain, kLambdaSweep, kAlphaSweep, kConsensusSweep, kStakeholderSearch };

std::string_view to_string(PlanKind k);
PlanKind parse_plan_kind(std::string_view s);

struct StakeholderProfile {
  std::string name;
  std::string description;
  MetricSpec target_metric;
  double accuracy_tolerance_pp = 5.0;
  std::vector<double> lambda_candidates{0.0, 0.5, 1.0, 2.0, 3.0};
  std::vector<Weights> weight_candidates;  // defaults to the target alone

  void validate() const;
  static StakeholderProfile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Built-in stakeholder presets.
const std::vector<StakeholderProfile>& builtin_stakeholders();
const StakeholderProfile* find_stakeholder(std::string_view name);

struct SweepPlan {
  PlanKind kind = PlanKind::kLambdaSweep;
  DatasetRef dataset;
  std::vector<double> lambda_grid;
  std::vector<double> alpha_grid;
  MetricSpec metric_a;
  MetricSpec metric_b;
  double fixed_lambda = 1.0;
  Weights base_weights{};
  std::vector<std::pair<double, double>> weight_pairs;
  std::vector<std::uint64_t> seeds{0};
  // Shared hyperparameters; for train plans also lambda, weights and seed.
  TrainConfig training;
  std::optional<StakeholderProfile> profile;  // stakeholder_search only

  // Throws Error(kValidation) naming the offending field.
  void validate() const;
  // implied_kind applies when the document has no "kind" field.
  static SweepPlan from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                             std::optional<PlanKind> implied_kind = std::nullopt);
  static SweepPlan load(const std::filesystem::path& path,
                        std::optional<PlanKind> implied_kind = std::nullopt);
  nlohmann::json to_json() const;
};

// One training run to perform.
struct RunSpec {
  TrainConfig config;
  std::optional<double> alpha;
  std::optional<std::string> label;
  std::string config_hash;
  std::string group_hash;  // config_hash without the seed; keys seed aggregation
};

struct FrontierPoint {
  std::string config_hash;
  std::optional<std::string> label;
  double lambda = 0.0;
  Weights weights{};
  std::optional<std::uint64_t> seed;  // absent on aggregate points
  std::vector<std::uint64_t> seeds;   // aggregate points only
  std::optional<double> alpha;
  bool aggregate = false;
  std::string split = "test";
  std::optional<double> test_accuracy;
  MetricVector metric_values;  // test split
  std::optional<double> dev_accuracy;
  MetricVector dev_metric_values;
  double decision_threshold = 0.5;
  std::optional<std::string> failure;

  nlohmann::json to_json() const;
  static FrontierPoint from_json(const nlohmann::json& j);
};

nlohmann::json frontier_to_json(const std::vector<FrontierPoint>& points);
std::vector<FrontierPoint> frontier_from_json(const nlohmann::json& j);

std::string config_hash(const nlohmann::json& dataset_identity, const TrainConfig& config);

// Expands a plan into its runs in output order (before seed aggregation).
// Lambda sweeps gain a lambda = 0 point if the grid lacks one and are sorted
// by lambda; alpha, consensus and stakeholder plans are preceded by a
// lambda = 0 baseline labelled "baseline".
std::vector<RunSpec> expand_plan(const SweepPlan& plan, const nlohmann::json& dataset_identity);

// Weight vector with w_a = alpha, w_b = 1 - alpha and all others zero.
Weights pair_weights(MetricSpec a, MetricSpec b, double alpha);

// Consensus label for a weight pair: "balanced" when equal, otherwise
// "dominant_a" or "dominant_b".
std::string consensus_label(double w_a, double w_b);

struct RunOutput {
  RunSpec spec;
  FrontierPoint point;
  TrainTrace trace;
  std::optional<ModelParams> params;
};

struct ExecuteOptions {
  unsigned jobs = 1;
  // Called after each finished run with (done, total); may run on a worker.
  std::function<void(std::size_t, std::size_t)> progress;
  bool keep_params = false;
};

// Runs every spec against one prepared dataset. Output order matches specs
// regardless of the worker count. Training failures are recorded on the
// point, never thrown.
std::vector<RunOutput> execute_runs(const PreparedDataset& data, const std::vector<RunSpec>& specs,
                                    const ExecuteOptions& options);

// Per-seed points in run order, each configuration followed by a
// mean-aggregated point when more than one seed ran.
std::vector<FrontierPoint> assemble_frontier(const std::vector<RunOutput>& runs);

// Picks the candidate maximising the target metric on dev among those whose
// dev accuracy is within the tolerance of the baseline's; ties go to higher
// dev accuracy, then lower lambda, then the earlier candidate. Failed points
// and points without a target value are skipped.
// Errors: kNoFeasibleCandidate, kValidation (baseline lacks dev accuracy).
FrontierPoint stakeholder_search(const StakeholderProfile& profile, const FrontierPoint& baseline,
                                 const std::vector<FrontierPoint>& candidates);

// Chooses the baseline and candidate set from a frontier: aggregate points
// when present, otherwise per-seed points; the baseline is the first
// lambda = 0 point. Error: kValidation when no baseline exists.
std::pair<FrontierPoint, std::vector<FrontierPoint>> search_inputs(
    const std::vector<FrontierPoint>& frontier);

struct SweepResult {
  SweepPlan plan;
  nlohmann::json dataset_identity;
  std::vector<RunOutput> runs;
  std::vector<FrontierPoint> frontier;
  std::optional<FrontierPoint> selection;  // stakeholder_search only
  std::optional<std::string> selection_error;
};

// Loads data, expands, executes and assembles. Stakeholder plans also run
// the search.
SweepResult run_plan(const SweepPlan& plan, const ExecuteOptions& options);

// Convenience wrappers over run_plan for the individual plan kinds.
std::vector<FrontierPoint> run_lambda_sweep(const SweepPlan& plan, const ExecuteOptions& options = {});
std::vector<FrontierPoint> run_alpha_sweep(const SweepPlan& plan, const ExecuteOptions& options = {});
std::vector<FrontierPoint> consensus_sweep(const SweepPlan& plan, const ExecuteOptions& options = {});

// Writes frontier.json, traces/<hash>.jsonl, traces/<hash>.summary.json,
// plan.json, manifest.json and (stakeholder plans) selection.json. Output is
// a pure function of the result, so identical inputs give identical bytes.
void write_sweep(const std::filesystem::path& out_dir, const SweepResult& result,
                 std::string_view subcommand);

// Stable JSON text used for every persisted document.
std::string dump_json(const nlohmann::json& j);

}  // namespace fairforge

#endif  // FAIRFORGE_HARNESS_HPP_
