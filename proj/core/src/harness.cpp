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
#include "fairforge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fairforge/error.hpp"
#include "fairforge/util.hpp"
#include "fairforge/version.hpp"

namespace fairforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kValidation, message, field);
}

double number_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) invalid(key, fmt::format("{} must be a number", key));
  return v.get<double>();
}

std::vector<double> number_list(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array()) invalid(key, fmt::format("{} must be an array of numbers", key));
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) invalid(key, fmt::format("{} must be an array of numbers", key));
    out.push_back(e.get<double>());
  }
  return out;
}

MetricSpec metric_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) invalid(key, fmt::format("{} must be a metric id string", key));
  try {
    return MetricSpec::parse(v.get<std::string>());
  } catch (const Error&) {
    invalid(key, fmt::format("{}: unknown metric id '{}'", key, v.get<std::string>()));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return fs::absolute(path).lexically_normal();
}

json optional_number(const std::optional<double>& v) {
  return v ? json(round_significant(*v)) : json(nullptr);
}

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json rounded_weights(const Weights& w) {
  json arr = json::array();
  for (double v : w) arr.push_back(round_significant(v));
  return arr;
}

}  // namespace

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// DatasetRef

DatasetRef DatasetRef::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) invalid("dataset", "dataset must be an object");
  DatasetRef r;
  for (const char* key : {"csv", "schema"}) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      invalid(fmt::format("dataset.{}", key), fmt::format("dataset.{} must be a path string", key));
    }
  }
  r.csv = resolve(base_dir, j.at("csv").get<std::string>());
  r.schema = resolve(base_dir, j.at("schema").get<std::string>());
  r.name = j.value("name", r.csv.stem().string());
  if (j.contains("split_seed")) {
    if (!j.at("split_seed").is_number_integer() || j.at("split_seed").get<std::int64_t>() < 0) {
      invalid("dataset.split_seed", "dataset.split_seed must be a non-negative integer");
    }
    r.load.split_seed = j.at("split_seed").get<std::uint64_t>();
  }
  if (j.contains("split_fractions")) {
    const auto& f = j.at("split_fractions");
    if (!f.is_object()) invalid("dataset.split_fractions", "split_fractions must be an object");
    r.load.fractions.train = f.value("train", r.load.fractions.train);
    r.load.fractions.dev = f.value("dev", r.load.fractions.dev);
    r.load.fractions.test = f.value("test", r.load.fractions.test);
    const auto& fr = r.load.fractions;
    if (fr.train <= 0 || fr.dev < 0 || fr.test < 0 ||
        std::abs(fr.train + fr.dev + fr.test - 1.0) > 1e-9) {
      invalid("dataset.split_fractions", "split fractions must be non-negative and sum to 1");
    }
  }
  if (j.contains("max_rows") && !j.at("max_rows").is_null()) {
    if (!j.at("max_rows").is_number_integer() || j.at("max_rows").get<std::int64_t>() < 0) {
      invalid("dataset.max_rows", "dataset.max_rows must be a non-negative integer");
    }
    r.load.max_rows = j.at("max_rows").get<std::size_t>();
  }
  return r;
}

json DatasetRef::to_json() const {
  return json{{"name", name},
              {"csv", csv.generic_string()},
              {"schema", schema.generic_string()},
              {"split_seed", load.split_seed},
              {"split_fractions",
               {{"train", load.fractions.train}, {"dev", load.fractions.dev}, {"test", load.fractions.test}}},
              {"max_rows", load.max_rows}};
}

json DatasetRef::identity() const {
  json j = to_json();
  j.erase("csv");
  j["csv_fingerprint"] = file_fingerprint(csv);
  j["schema"] = load_schema().to_json();
  return j;
}

DatasetSchema DatasetRef::load_schema() const { return DatasetSchema::load(schema); }

TabularDataset DatasetRef::load_data() const { return load_dataset(csv, load_schema(), load); }

// ---------------------------------------------------------------------------
// Plan kinds

std::string_view to_string(PlanKind k) {
  switch (k) {
    case PlanKind::kTrain: return "train";
    case PlanKind::kLambdaSweep: return "lambda_sweep";
    case PlanKind::kAlphaSweep: return "alpha_sweep";
    case PlanKind::kConsensusSweep: return "consensus_sweep";
    case PlanKind::kStakeholderSearch: return "stakeholder_search";
  }
  return "lambda_sweep";
}

PlanKind parse_plan_kind(std::string_view s) {
  for (auto k : {PlanKind::kTrain, PlanKind::kLambdaSweep, PlanKind::kAlphaSweep,
                 PlanKind::kConsensusSweep, PlanKind::kStakeholderSearch}) {
    if (to_string(k) == s) return k;
  }
  invalid("kind", fmt::format("unknown kind '{}'", s));
}

// ---------------------------------------------------------------------------
// Stakeholders

void StakeholderProfile::validate() const {
  if (name.empty()) invalid("name", "profile name is empty");
  if (!(accuracy_tolerance_pp > 0.0) || !std::isfinite(accuracy_tolerance_pp)) {
    invalid("accuracy_tolerance_pp", "accuracy_tolerance_pp must be > 0");
  }
  if (lambda_candidates.empty()) invalid("lambda_candidates", "lambda_candidates is empty");
  for (double l : lambda_candidates) {
    if (!std::isfinite(l) || l < 0.0) invalid("lambda_candidates", "lambdas must be finite and >= 0");
  }
  if (weight_candidates.empty()) invalid("weight_candidates", "weight_candidates is empty");
  for (const auto& w : weight_candidates) {
    double sum = 0.0;
    for (double v : w) {
      if (!std::isfinite(v) || v < 0.0) invalid("weight_candidates", "weights must be >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) invalid("weight_candidates", "each weight vector must sum to 1");
  }
}

StakeholderProfile StakeholderProfile::from_json(const json& j) {
  if (!j.is_object()) invalid("profile", "profile must be an object");
  StakeholderProfile p;
  if (!j.contains("name") || !j.at("name").is_string()) invalid("name", "name must be a string");
  p.name = j.at("name").get<std::string>();
  p.description = j.value("description", std::string{});
  if (!j.contains("target_metric")) invalid("target_metric", "target_metric is required");
  p.target_metric = metric_field(j, "target_metric");
  if (j.contains("accuracy_tolerance_pp")) {
    p.accuracy_tolerance_pp = number_field(j, "accuracy_tolerance_pp");
  }
  if (j.contains("lambda_candidates")) p.lambda_candidates = number_list(j, "lambda_candidates");
  if (j.contains("weight_candidates")) {
    const auto& wc = j.at("weight_candidates");
    if (!wc.is_array()) invalid("weight_candidates", "weight_candidates must be an array");
    for (const auto& w : wc) p.weight_candidates.push_back(parse_weights(w, "weight_candidates"));
  } else {
    Weights w{};
    w[p.target_metric.index()] = 1.0;
    p.weight_candidates.push_back(w);
  }
  p.validate();
  return p;
}

json StakeholderProfile::to_json() const {
  json wc = json::array();
  for (const auto& w : weight_candidates) wc.push_back(weights_to_json(w));
  return json{{"name", name},
              {"description", description},
              {"target_metric", target_metric.id()},
              {"accuracy_tolerance_pp", accuracy_tolerance_pp},
              {"lambda_candidates", lambda_candidates},
              {"weight_candidates", wc}};
}

namespace {

StakeholderProfile preset(std::string name, std::string description, std::string_view metric,
                          double lambda) {
  StakeholderProfile p;
  p.name = std::move(name);
  p.description = std::move(description);
  p.target_metric = MetricSpec::parse(metric);
  p.lambda_candidates = {0.0, lambda};
  Weights w{};
  w[p.target_metric.index()] = 1.0;
  p.weight_candidates = {w};
  return p;
}

}  // namespace

const std::vector<StakeholderProfile>& builtin_stakeholders() {
  static const std::vector<StakeholderProfile> presets = {
      preset("public-safety",
             "Wants people who reoffend at similar rates to be treated alike, "
             "regardless of group.",
             "individual.infra_marginal.eoo", 1.0),
      preset("civil-rights",
             "Wants both groups to receive favourable outcomes at equal overall "
             "rates, since base-rate gaps may reflect past inequity.",
             "group.intersectional.outcome", 3.0),
      preset("social-work",
             "Wants equal outcome rates between groups among the people who truly "
             "belong to the positive class.",
             "group.intersectional.eoo", 3.0),
      preset("provider",
             "Wants patients with similar clinical need to receive similar "
             "predictions, regardless of group.",
             "individual.infra_marginal.eoo", 2.0),
      preset("public-health",
             "Wants care to be allocated at equal rates across groups.",
             "group.intersectional.outcome", 2.0),
      preset("patient-advocacy",
             "Wants patients who truly need care to be identified at equal rates "
             "in both groups.",
             "group.intersectional.eoo", 2.0),
  };
  return presets;
}

const StakeholderProfile* find_stakeholder(std::string_view name) {
  for (const auto& p : builtin_stakeholders()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// SweepPlan

void SweepPlan::validate() const {
  training.validate();
  if (seeds.empty()) invalid("seeds", "seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    invalid("seeds", "seeds must be distinct");
  }
  auto check_lambda = [](double l, const char* field) {
    if (!std::isfinite(l) || l < 0.0) invalid(field, fmt::format("{} must be finite and >= 0", field));
  };
  switch (kind) {
    case PlanKind::kTrain:
      break;
    case PlanKind::kLambdaSweep:
      if (lambda_grid.empty()) invalid("lambda_grid", "lambda_grid must not be empty");
      for (double l : lambda_grid) check_lambda(l, "lambda_grid");
      break;
    case PlanKind::kAlphaSweep:
      if (alpha_grid.empty()) invalid("alpha_grid", "alpha_grid must not be empty");
      for (double a : alpha_grid) {
        if (!(a >= 0.0 && a <= 1.0)) invalid("alpha_grid", "alpha values must lie in [0, 1]");
      }
      [[fallthrough]];
    case PlanKind::kConsensusSweep:
      if (metric_a == metric_b) invalid("metric_b", "metric_a and metric_b must differ");
      check_lambda(fixed_lambda, "fixed_lambda");
      if (kind == PlanKind::kConsensusSweep) {
        if (weight_pairs.empty()) invalid("weight_pairs", "weight_pairs must not be empty");
        for (const auto& [a, b] : weight_pairs) {
          if (!(a >= 0.0 && b >= 0.0) || std::abs(a + b - 1.0) > 1e-9) {
            invalid("weight_pairs", "each weight pair must be non-negative and sum to 1");
          }
        }
      }
      break;
    case PlanKind::kStakeholderSearch:
      if (!profile) invalid("profile", "profile is required");
      profile->validate();
      break;
  }
}

SweepPlan SweepPlan::from_json(const json& j, const fs::path& base_dir,
                               std::optional<PlanKind> implied_kind) {
  if (!j.is_object()) invalid("plan", "plan must be a JSON object");
  static const std::set<std::string> known = {
      "kind",   "dataset",      "lambda_grid", "alpha_grid", "metric_a", "metric_b",
      "fixed_lambda", "base_weights", "weight_pairs", "seeds", "training", "profile",
      "config", "description"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) invalid(key, fmt::format("unknown field '{}'", key));
  }
  SweepPlan p;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) invalid("kind", "kind must be a string");
    p.kind = parse_plan_kind(j.at("kind").get<std::string>());
  } else if (implied_kind) {
    p.kind = *implied_kind;
  } else {
    invalid("kind", "kind is required");
  }
  if (!j.contains("dataset")) invalid("dataset", "dataset is required");
  p.dataset = DatasetRef::from_json(j.at("dataset"), base_dir);

  if (j.contains("training")) {
    json t = j.at("training");
    if (!t.is_object()) invalid("training", "training must be an object");
    for (const char* key : {"lambda", "weights", "seed"}) {
      if (t.contains(key)) invalid(fmt::format("training.{}", key),
                                   fmt::format("training.{} belongs at plan level", key));
    }
    p.training = TrainConfig::from_json(t, TrainConfig{});
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array()) invalid("seeds", "seeds must be an array of integers");
    p.seeds.clear();
    for (const auto& e : s) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0) invalid("seeds", "seeds must be non-negative integers");
      p.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  if (j.contains("base_weights")) p.base_weights = parse_weights(j.at("base_weights"), "base_weights");
  if (j.contains("lambda_grid")) p.lambda_grid = number_list(j, "lambda_grid");
  if (j.contains("alpha_grid")) p.alpha_grid = number_list(j, "alpha_grid");

  if (p.kind == PlanKind::kConsensusSweep) {
    p.metric_a = MetricSpec::parse("individual.infra_marginal.eoo");
    p.metric_b = MetricSpec::parse("group.intersectional.outcome");
    p.fixed_lambda = 3.0;
    for (int k = 9; k >= 1; --k) p.weight_pairs.emplace_back(k / 10.0, (10 - k) / 10.0);
  }
  if (j.contains("metric_a")) p.metric_a = metric_field(j, "metric_a");
  if (j.contains("metric_b")) p.metric_b = metric_field(j, "metric_b");
  if (j.contains("fixed_lambda")) p.fixed_lambda = number_field(j, "fixed_lambda");
  if (j.contains("weight_pairs")) {
    const auto& wp = j.at("weight_pairs");
    if (!wp.is_array()) invalid("weight_pairs", "weight_pairs must be an array of [w_a, w_b]");
    p.weight_pairs.clear();
    for (const auto& pair : wp) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        invalid("weight_pairs", "weight_pairs must be an array of [w_a, w_b]");
      }
      p.weight_pairs.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
  }
  if (p.kind == PlanKind::kAlphaSweep || p.kind == PlanKind::kConsensusSweep) {
    if (!j.contains("metric_a") && p.kind == PlanKind::kAlphaSweep) invalid("metric_a", "metric_a is required");
    if (!j.contains("metric_b") && p.kind == PlanKind::kAlphaSweep) invalid("metric_b", "metric_b is required");
  }
  if (j.contains("profile")) {
    const auto& pr = j.at("profile");
    if (pr.is_string()) {
      const auto* found = find_stakeholder(pr.get<std::string>());
      if (!found) invalid("profile", fmt::format("unknown stakeholder preset '{}'", pr.get<std::string>()));
      p.profile = *found;
    } else {
      p.profile = StakeholderProfile::from_json(pr);
    }
  }
  if (p.kind == PlanKind::kTrain) {
    if (!j.contains("config")) invalid("config", "train plans need a config object");
    p.training = TrainConfig::from_json(j.at("config"), p.training);
    p.lambda_grid = {p.training.lambda};
    p.base_weights = p.training.weights;
    p.seeds = {p.training.seed};
  } else if (j.contains("config")) {
    invalid("config", "config is only valid for train plans");
  }
  p.validate();
  return p;
}

SweepPlan SweepPlan::load(const fs::path& path, std::optional<PlanKind> implied_kind) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j, path.parent_path(), implied_kind);
}

json SweepPlan::to_json() const {
  json t = training.to_json();
  json j{{"kind", to_string(kind)}, {"dataset", dataset.to_json()}, {"seeds", seeds}};
  if (kind == PlanKind::kTrain) {
    j["config"] = t;
    j.erase("seeds");
    return j;
  }
  for (const char* key : {"lambda", "weights", "seed"}) t.erase(key);
  j["training"] = t;
  switch (kind) {
    case PlanKind::kLambdaSweep:
      j["lambda_grid"] = lambda_grid;
      j["base_weights"] = weights_to_json(base_weights);
      break;
    case PlanKind::kAlphaSweep:
      j["alpha_grid"] = alpha_grid;
      j["metric_a"] = metric_a.id();
      j["metric_b"] = metric_b.id();
      j["fixed_lambda"] = fixed_lambda;
      break;
    case PlanKind::kConsensusSweep: {
      json pairs = json::array();
      for (const auto& [a, b] : weight_pairs) pairs.push_back({a, b});
      j["weight_pairs"] = pairs;
      j["metric_a"] = metric_a.id();
      j["metric_b"] = metric_b.id();
      j["fixed_lambda"] = fixed_lambda;
      break;
    }
    case PlanKind::kStakeholderSearch:
      j["profile"] = profile->to_json();
      break;
    case PlanKind::kTrain:
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Expansion

std::string config_hash(const json& dataset_identity, const TrainConfig& config) {
  const json key{{"dataset", dataset_identity}, {"config", config.to_json()}};
  return hex64(fnv1a64(key.dump()));
}

Weights pair_weights(MetricSpec a, MetricSpec b, double alpha) {
  Weights w{};
  w[a.index()] = alpha;
  // Rounded so 1 - 0.7 gives the same config as a literal 0.3.
  w[b.index()] = round_significant(1.0 - alpha);
  return w;
}

std::string consensus_label(double w_a, double w_b) {
  if (w_a == w_b) return "balanced";
  return w_a > w_b ? "dominant_a" : "dominant_b";
}

std::vector<RunSpec> expand_plan(const SweepPlan& plan, const json& dataset_identity) {
  struct Base {
    double lambda;
    Weights weights;
    std::optional<double> alpha;
    std::optional<std::string> label;
  };
  std::vector<Base> bases;
  const Base baseline{0.0, plan.base_weights, std::nullopt, std::string("baseline")};
  switch (plan.kind) {
    case PlanKind::kTrain:
      bases.push_back({plan.training.lambda, plan.training.weights, std::nullopt, std::nullopt});
      break;
    case PlanKind::kLambdaSweep: {
      auto grid = plan.lambda_grid;
      if (std::find(grid.begin(), grid.end(), 0.0) == grid.end()) grid.push_back(0.0);
      std::stable_sort(grid.begin(), grid.end());
      for (double l : grid) {
        bases.push_back({l, plan.base_weights, std::nullopt,
                         l == 0.0 ? std::optional<std::string>("baseline") : std::nullopt});
      }
      break;
    }
    case PlanKind::kAlphaSweep:
      bases.push_back(baseline);
      for (double a : plan.alpha_grid) {
        bases.push_back({plan.fixed_lambda, pair_weights(plan.metric_a, plan.metric_b, a), a,
                         std::nullopt});
      }
      break;
    case PlanKind::kConsensusSweep:
      bases.push_back(baseline);
      for (const auto& [wa, wb] : plan.weight_pairs) {
        Weights w{};
        w[plan.metric_a.index()] = wa;
        w[plan.metric_b.index()] = wb;
        bases.push_back({plan.fixed_lambda, w, wa, consensus_label(wa, wb)});
      }
      break;
    case PlanKind::kStakeholderSearch:
      bases.push_back(baseline);
      for (double l : plan.profile->lambda_candidates) {
        if (l == 0.0) continue;
        for (const auto& w : plan.profile->weight_candidates) {
          bases.push_back({l, w, std::nullopt, std::nullopt});
        }
      }
      break;
  }

  std::vector<RunSpec> specs;
  for (const auto& b : bases) {
    TrainConfig group_cfg = plan.training;
    group_cfg.lambda = b.lambda;
    group_cfg.weights = b.weights;
    group_cfg.seed = 0;
    json group_key = group_cfg.to_json();
    group_key.erase("seed");
    const std::string group_hash =
        hex64(fnv1a64(json{{"dataset", dataset_identity}, {"config", group_key}}.dump()));
    for (std::uint64_t seed : plan.seeds) {
      RunSpec s;
      s.config = group_cfg;
      s.config.seed = seed;
      s.alpha = b.alpha;
      s.label = b.label;
      s.config_hash = config_hash(dataset_identity, s.config);
      s.group_hash = group_hash;
      specs.push_back(std::move(s));
    }
  }
  return specs;
}

// ---------------------------------------------------------------------------
// FrontierPoint

json FrontierPoint::to_json() const {
  json j{{"config_hash", config_hash},
         {"label", label ? json(*label) : json(nullptr)},
         {"lambda", round_significant(lambda)},
         {"weights", rounded_weights(weights)},
         {"seed", seed ? json(*seed) : json(nullptr)},
         {"alpha", optional_number(alpha)},
         {"aggregate", aggregate},
         {"split", split},
         {"test_accuracy", optional_number(test_accuracy)},
         {"metric_values", metrics_to_json(metric_values)},
         {"dev_accuracy", optional_number(dev_accuracy)},
         {"dev_metric_values", metrics_to_json(dev_metric_values)},
         {"decision_threshold", decision_threshold},
         {"failure", failure ? json(*failure) : json(nullptr)}};
  if (aggregate) j["seeds"] = seeds;
  return j;
}

FrontierPoint FrontierPoint::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "frontier point must be an object");
  FrontierPoint p;
  try {
    p.config_hash = j.value("config_hash", std::string{});
    if (j.contains("label") && j.at("label").is_string()) p.label = j.at("label").get<std::string>();
    p.lambda = j.at("lambda").get<double>();
    p.weights = parse_weights(j.at("weights"), "weights");
    if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seeds")) p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    p.alpha = optional_from(j, "alpha");
    p.aggregate = j.value("aggregate", false);
    p.split = j.value("split", std::string("test"));
    p.test_accuracy = optional_from(j, "test_accuracy");
    p.metric_values = metrics_from_json(j.value("metric_values", json::object()));
    p.dev_accuracy = optional_from(j, "dev_accuracy");
    p.dev_metric_values = metrics_from_json(j.value("dev_metric_values", json::object()));
    p.decision_threshold = j.value("decision_threshold", 0.5);
    if (j.contains("failure") && j.at("failure").is_string()) {
      p.failure = j.at("failure").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("bad frontier point: {}", e.what()));
  }
  return p;
}

json frontier_to_json(const std::vector<FrontierPoint>& points) {
  json arr = json::array();
  for (const auto& p : points) arr.push_back(p.to_json());
  return arr;
}

std::vector<FrontierPoint> frontier_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, "frontier must be a JSON array");
  std::vector<FrontierPoint> out;
  for (const auto& e : j) out.push_back(FrontierPoint::from_json(e));
  return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

FrontierPoint point_from(const RunSpec& spec, const TrainTrace& trace) {
  FrontierPoint p;
  p.config_hash = spec.config_hash;
  p.label = spec.label;
  p.lambda = spec.config.lambda;
  p.weights = spec.config.weights;
  p.seed = spec.config.seed;
  p.alpha = spec.alpha;
  p.test_accuracy = trace.test_accuracy;
  p.metric_values = trace.test_metrics;
  p.dev_accuracy = trace.dev_accuracy;
  p.dev_metric_values = trace.dev_metrics;
  p.decision_threshold = spec.config.decision_threshold;
  p.failure = trace.failure;
  return p;
}

void run_one(const PreparedDataset& data, const RunSpec& spec, bool keep_params, RunOutput& out) {
  out.spec = spec;
  try {
    auto result = train(data, spec.config);
    out.trace = std::move(result.trace);
    if (keep_params) out.params = std::move(result.params);
  } catch (const std::exception& e) {
    out.trace = TrainTrace{};
    out.trace.failure = e.what();
  }
  out.point = point_from(spec, out.trace);
  if (out.trace.failure) {
    spdlog::warn("run {} (lambda {}, seed {}) failed: {}", spec.config_hash, spec.config.lambda,
                 spec.config.seed, *out.trace.failure);
  }
}

}  // namespace

std::vector<RunOutput> execute_runs(const PreparedDataset& data, const std::vector<RunSpec>& specs,
                                    const ExecuteOptions& options) {
  std::vector<RunOutput> outputs(specs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      run_one(data, specs[i], options.keep_params, outputs[i]);
      const std::size_t finished = ++done;
      if (options.progress) options.progress(finished, specs.size());
    }
  };
  const unsigned jobs =
      std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(specs.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return outputs;
}

std::vector<FrontierPoint> assemble_frontier(const std::vector<RunOutput>& runs) {
  std::vector<FrontierPoint> out;
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t end = i;
    while (end < runs.size() && runs[end].spec.group_hash == runs[i].spec.group_hash) ++end;
    for (std::size_t k = i; k < end; ++k) out.push_back(runs[k].point);
    if (end - i > 1) {
      FrontierPoint agg = runs[i].point;
      agg.config_hash = runs[i].spec.group_hash;
      agg.seed.reset();
      agg.aggregate = true;
      agg.failure.reset();
      agg.seeds.clear();
      std::vector<const FrontierPoint*> ok;
      for (std::size_t k = i; k < end; ++k) {
        if (!runs[k].point.failure) {
          ok.push_back(&runs[k].point);
          agg.seeds.push_back(*runs[k].point.seed);
        }
      }
      auto mean = [&](auto get) -> std::optional<double> {
        if (ok.empty()) return std::nullopt;
        double sum = 0.0;
        for (const auto* p : ok) {
          const std::optional<double> v = get(*p);
          if (!v) return std::nullopt;
          sum += *v;
        }
        return sum / static_cast<double>(ok.size());
      };
      agg.test_accuracy = mean([](const FrontierPoint& p) { return p.test_accuracy; });
      agg.dev_accuracy = mean([](const FrontierPoint& p) { return p.dev_accuracy; });
      for (int m = 0; m < kNumMetrics; ++m) {
        agg.metric_values[m] = mean([m](const FrontierPoint& p) { return p.metric_values[m]; });
        agg.dev_metric_values[m] = mean([m](const FrontierPoint& p) { return p.dev_metric_values[m]; });
      }
      if (ok.empty()) agg.failure = "every seed failed";
      out.push_back(std::move(agg));
    }
    i = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stakeholder search

FrontierPoint stakeholder_search(const StakeholderProfile& profile, const FrontierPoint& baseline,
                                 const std::vector<FrontierPoint>& candidates) {
  if (!baseline.dev_accuracy) invalid("baseline", "baseline point has no dev accuracy");
  const double floor_pp = *baseline.dev_accuracy * 100.0 - profile.accuracy_tolerance_pp;
  const int target = profile.target_metric.index();
  const FrontierPoint* best = nullptr;
  for (const auto& c : candidates) {
    if (c.failure || !c.dev_accuracy || !c.dev_metric_values[target]) continue;
    if (*c.dev_accuracy * 100.0 < floor_pp - 1e-9) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const double m = *c.dev_metric_values[target];
    const double bm = *best->dev_metric_values[target];
    if (m != bm) {
      if (m > bm) best = &c;
    } else if (*c.dev_accuracy != *best->dev_accuracy) {
      if (*c.dev_accuracy > *best->dev_accuracy) best = &c;
    } else if (c.lambda < best->lambda) {
      best = &c;
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoFeasibleCandidate,
                fmt::format("no candidate keeps dev accuracy within {} pp of the baseline",
                            profile.accuracy_tolerance_pp));
  }
  return *best;
}

std::pair<FrontierPoint, std::vector<FrontierPoint>> search_inputs(
    const std::vector<FrontierPoint>& frontier) {
  const bool any_aggregate =
      std::any_of(frontier.begin(), frontier.end(), [](const auto& p) { return p.aggregate; });
  std::vector<FrontierPoint> candidates;
  for (const auto& p : frontier) {
    if (p.aggregate == any_aggregate) candidates.push_back(p);
  }
  for (const auto& p : candidates) {
    if (p.lambda == 0.0) return {p, candidates};
  }
  invalid("frontier", "frontier has no lambda = 0 baseline point");
}

// ---------------------------------------------------------------------------
// Plans

SweepResult run_plan(const SweepPlan& plan, const ExecuteOptions& options) {
  plan.validate();
  SweepResult result;
  result.plan = plan;
  result.dataset_identity = plan.dataset.identity();
  const auto prepared = PreparedDataset::build(plan.dataset.load_data());
  const auto specs = expand_plan(plan, result.dataset_identity);
  spdlog::info("{}: {} runs on {} ({} rows, {} features)", to_string(plan.kind), specs.size(),
               plan.dataset.name, prepared.dataset.size(), prepared.dataset.dim());
  result.runs = execute_runs(prepared, specs, options);
  result.frontier = assemble_frontier(result.runs);
  if (plan.kind == PlanKind::kStakeholderSearch) {
    try {
      auto [baseline, candidates] = search_inputs(result.frontier);
      result.selection = stakeholder_search(*plan.profile, baseline, candidates);
    } catch (const Error& e) {
      result.selection_error = e.what();
    }
  }
  return result;
}

namespace {

std::vector<FrontierPoint> run_kind(const SweepPlan& plan, PlanKind kind,
                                    const ExecuteOptions& options) {
  if (plan.kind != kind) {
    invalid("kind", fmt::format("expected a {} plan, got {}", to_string(kind), to_string(plan.kind)));
  }
  return run_plan(plan, options).frontier;
}

}  // namespace

std::vector<FrontierPoint> run_lambda_sweep(const SweepPlan& plan, const ExecuteOptions& options) {
  return run_kind(plan, PlanKind::kLambdaSweep, options);
}

std::vector<FrontierPoint> run_alpha_sweep(const SweepPlan& plan, const ExecuteOptions& options) {
  return run_kind(plan, PlanKind::kAlphaSweep, options);
}

std::vector<FrontierPoint> consensus_sweep(const SweepPlan& plan, const ExecuteOptions& options) {
  return run_kind(plan, PlanKind::kConsensusSweep, options);
}

void write_sweep(const fs::path& out_dir, const SweepResult& result, std::string_view subcommand) {
  fs::create_directories(out_dir / "traces");
  const json plan_json = result.plan.to_json();
  write_file(out_dir / "plan.json", dump_json(plan_json));
  write_file(out_dir / "frontier.json", dump_json(frontier_to_json(result.frontier)));

  json runs = json::array();
  for (const auto& r : result.runs) {
    const std::string stem = "traces/" + r.spec.config_hash;
    write_file(out_dir / (stem + ".jsonl"), r.trace.epochs_jsonl());
    write_file(out_dir / (stem + ".summary.json"), dump_json(r.trace.summary_json(r.spec.config)));
    json entry{{"config_hash", r.spec.config_hash},
               {"seed", r.spec.config.seed},
               {"trace", stem + ".jsonl"},
               {"summary", stem + ".summary.json"},
               {"failure", r.trace.failure ? json(*r.trace.failure) : json(nullptr)}};
    if (r.params) {
      const std::string model = "models/" + r.spec.config_hash + ".json";
      fs::create_directories(out_dir / "models");
      write_file(out_dir / model, dump_json(r.params->to_json()));
      entry["model"] = model;
    }
    runs.push_back(std::move(entry));
  }

  json outputs = json::array({"plan.json", "frontier.json"});
  if (result.plan.kind == PlanKind::kStakeholderSearch) {
    json sel = result.selection ? json{{"selection", result.selection->to_json()}, {"error", nullptr}}
                                : json{{"selection", nullptr},
                                       {"error", result.selection_error.value_or("")}};
    sel["profile"] = result.plan.profile->to_json();
    write_file(out_dir / "selection.json", dump_json(sel));
    outputs.push_back("selection.json");
  }

  const json manifest{{"format", "fairforge.manifest"},
                      {"version", 1},
                      {"tool", "fairforge"},
                      {"tool_version", kVersion},
                      {"subcommand", subcommand},
                      {"rerun", fmt::format("fairforge {} --plan plan.json", subcommand)},
                      {"plan_hash", hex64(fnv1a64(plan_json.dump()))},
                      {"dataset", result.dataset_identity},
                      {"seeds", result.plan.seeds},
                      {"runs", runs},
                      {"outputs", outputs}};
  write_file(out_dir / "manifest.json", dump_json(manifest));
}

}  // namespace fairforge
