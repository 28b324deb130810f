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
#ifndef FAIRFORGE_MODEL_HPP_
#define FAIRFORGE_MODEL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fairforge/metrics.hpp"
#include "fairforge/prepared.hpp"

namespace fairforge {

inline constexpr int kDefaultHiddenUnits = 64;

// Linear(d, H) -> ReLU -> Linear(H, 1) -> sigmoid, stored contiguously as
// [w1 (d x H, column-major) | b1 (H) | w2 (H) | b2].
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(Eigen::Index input_dim, Eigen::Index hidden);

  static ModelParams zeros(Eigen::Index input_dim, Eigen::Index hidden) {
    return ModelParams(input_dim, hidden);
  }
  // Glorot-uniform weights, zero biases.
  static ModelParams glorot(Eigen::Index input_dim, Eigen::Index hidden, std::uint64_t seed);

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index hidden() const { return hidden_; }

  Eigen::Map<Eigen::MatrixXd> w1() { return {data_.data(), input_dim_, hidden_}; }
  Eigen::Map<const Eigen::MatrixXd> w1() const { return {data_.data(), input_dim_, hidden_}; }
  Eigen::Map<Eigen::VectorXd> b1() { return {data_.data() + b1_offset(), hidden_}; }
  Eigen::Map<const Eigen::VectorXd> b1() const { return {data_.data() + b1_offset(), hidden_}; }
  Eigen::Map<Eigen::VectorXd> w2() { return {data_.data() + w2_offset(), hidden_}; }
  Eigen::Map<const Eigen::VectorXd> w2() const { return {data_.data() + w2_offset(), hidden_}; }
  double& b2() { return data_[data_.size() - 1]; }
  double b2() const { return data_[data_.size() - 1]; }

  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }

  bool all_finite() const { return data_.allFinite(); }

  // Versioned JSON; values rounded to 12 significant digits.
  nlohmann::json to_json() const;
  static ModelParams from_json(const nlohmann::json& j);

 private:
  Eigen::Index b1_offset() const { return input_dim_ * hidden_; }
  Eigen::Index w2_offset() const { return b1_offset() + hidden_; }

  Eigen::Index input_dim_ = 0;
  Eigen::Index hidden_ = 0;
  Eigen::VectorXd data_;
};

// Clamped probabilities; throws kShapeMismatch on a width mismatch.
Eigen::VectorXd forward(const ModelParams& params, const Eigen::MatrixXd& features);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double lambda = 0.0;
  std::array<double, kNumMetrics> weights{};
  double learning_rate = 1e-4;
  int epochs = 2000;
  std::uint64_t seed = 0;
  AdamOptions adam;
  int hidden_units = kDefaultHiddenUnits;
  // Rescale weights to sum to 1 before use.
  bool normalize_weights = false;
  double decision_threshold = 0.5;

  // Throws Error(kValidation) naming the offending field.
  void validate() const;
  std::array<double, kNumMetrics> effective_weights() const;

  nlohmann::json to_json() const;
  // Fields absent from j keep the values in defaults.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& defaults);
  static TrainConfig from_json(const nlohmann::json& j);
};

// Parses an 8-vector of non-negative weights, as an array in canonical
// metric order or an object keyed by metric id.
std::array<double, kNumMetrics> parse_weights(const nlohmann::json& j, const std::string& field);
nlohmann::json weights_to_json(const std::array<double, kNumMetrics>& w);

struct ObjectiveTerms {
  double objective = 0.0;
  double mean_loss = 0.0;
  // Weighted fairness term; absent when lambda == 0 (nothing computed).
  std::optional<double> fairness;
};

// f = mean BCE - lambda * sum_m w_m R_m on one split. Metrics with w_m == 0
// are not evaluated.
ObjectiveTerms objective(const ModelParams& params, const PreparedSplit& data,
                         const TrainConfig& config);

// Objective plus its exact gradient; matchings and EOO masks are constants.
// Throws kNonFinite when any entry is NaN or infinite.
ObjectiveTerms gradient(const ModelParams& params, const PreparedSplit& data,
                        const TrainConfig& config, ModelParams& grad);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;

  static AdamState zeros_like(const ModelParams& p) { return {p.zeros(p.input_dim(), p.hidden()), p.zeros(p.input_dim(), p.hidden()), 0}; }
};

// One bias-corrected Adam update; increments state.step.
void adam_step(ModelParams& params, const ModelParams& grad, AdamState& state,
               double learning_rate, const AdamOptions& options = {});

double accuracy(std::span<const double> probs, std::span<const std::uint8_t> labels,
                double threshold = 0.5);

// Objective terms are measured before the epoch's update; dev figures after it.
struct EpochRecord {
  int epoch = 0;
  double objective = 0.0;
  double mean_loss = 0.0;
  std::optional<double> fairness;
  std::optional<double> dev_accuracy;
  MetricVector dev_metrics;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::optional<double> dev_accuracy;
  MetricVector dev_metrics;
  std::optional<double> test_accuracy;
  MetricVector test_metrics;
  std::optional<double> train_accuracy;
  std::optional<std::string> failure;

  std::string epochs_jsonl() const;
  nlohmann::json summary_json(const TrainConfig& config) const;
};

struct TrainResult {
  ModelParams params;  // final-epoch parameters
  TrainTrace trace;
};

// Full-batch Adam on the train split, evaluating dev after every epoch and
// test once at the end. A non-finite objective or gradient stops training;
// the trace then records the failure and the last finite parameters are kept.
TrainResult train(const PreparedDataset& data, const TrainConfig& config);

nlohmann::json metrics_to_json(const MetricVector& m);
MetricVector metrics_from_json(const nlohmann::json& j);

}  // namespace fairforge

#endif  // FAIRFORGE_MODEL_HPP_
