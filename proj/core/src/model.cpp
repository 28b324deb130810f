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
#include "fairforge/model.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "fairforge/error.hpp"
#include "fairforge/util.hpp"

namespace fairforge {

using nlohmann::json;

ModelParams::ModelParams(Eigen::Index input_dim, Eigen::Index hidden)
    : input_dim_(input_dim), hidden_(hidden), data_(Eigen::VectorXd::Zero(input_dim * hidden + 2 * hidden + 1)) {}

ModelParams ModelParams::glorot(Eigen::Index input_dim, Eigen::Index hidden, std::uint64_t seed) {
  ModelParams p(input_dim, hidden);
  Rng rng(seed);
  const double limit1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  auto w1 = p.w1();
  for (Eigen::Index c = 0; c < hidden; ++c) {
    for (Eigen::Index r = 0; r < input_dim; ++r) w1(r, c) = uniform(rng, -limit1, limit1);
  }
  const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  auto w2 = p.w2();
  for (Eigen::Index h = 0; h < hidden; ++h) w2[h] = uniform(rng, -limit2, limit2);
  return p;
}

json ModelParams::to_json() const {
  json values = json::array();
  for (Eigen::Index i = 0; i < data_.size(); ++i) values.push_back(round_significant(data_[i]));
  return json{{"format", "fairforge.model_params"},
              {"version", 1},
              {"input_dim", input_dim_},
              {"hidden", hidden_},
              {"layout", "w1(col-major d x H) | b1 | w2 | b2"},
              {"values", values}};
}

ModelParams ModelParams::from_json(const json& j) {
  if (j.value("format", "") != "fairforge.model_params" || j.value("version", 0) != 1) {
    throw Error(ErrorCode::kParse, "not a fairforge.model_params v1 document");
  }
  ModelParams p(j.at("input_dim").get<Eigen::Index>(), j.at("hidden").get<Eigen::Index>());
  const auto& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != p.data_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter count does not match shape");
  }
  for (std::size_t i = 0; i < values.size(); ++i) p.data_[static_cast<Eigen::Index>(i)] = values[i].get<double>();
  return p;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct ForwardPass {
  Eigen::MatrixXd pre;     // N x H pre-activation
  Eigen::VectorXd probs;   // clamped
  std::vector<char> live;  // sigmoid output inside the clamp range
};

ForwardPass run_forward(const ModelParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("feature width {} != model input width {}", x.cols(), params.input_dim()));
  }
  ForwardPass f;
  f.pre.noalias() = x * params.w1();
  f.pre.rowwise() += params.b1().transpose();
  const Eigen::VectorXd logits =
      (f.pre.cwiseMax(0.0) * params.w2()).array() + params.b2();
  f.probs.resize(logits.size());
  f.live.resize(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    f.probs[i] = clamp_probability(p);
    f.live[static_cast<std::size_t>(i)] = f.probs[i] == p;
  }
  return f;
}

double mean_bce(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    sum -= labels[static_cast<std::size_t>(i)] ? std::log(p) : std::log1p(-p);
  }
  return sum / static_cast<double>(probs.size());
}

// Evaluates the objective; when d_probs is non-empty it receives
// d(objective)/d(prob_i) from the fairness term.
ObjectiveTerms evaluate(const Eigen::VectorXd& probs, const PreparedSplit& data,
                        const TrainConfig& config, std::span<double> d_probs) {
  ObjectiveTerms t;
  t.mean_loss = mean_bce(probs, data.labels);
  t.objective = t.mean_loss;
  if (config.lambda == 0.0) return t;
  const auto weights = config.effective_weights();
  const auto ctx = data.context();
  const std::span<const double> p(probs.data(), static_cast<std::size_t>(probs.size()));
  double fairness = 0.0;
  for (const auto& spec : all_metrics()) {
    const double w = weights[spec.index()];
    if (w == 0.0) continue;
    GradientSink sink{d_probs, -config.lambda * w};
    fairness += w * compute_metric(spec, p, ctx, d_probs.empty() ? nullptr : &sink).value;
  }
  t.fairness = fairness;
  t.objective -= config.lambda * fairness;
  return t;
}

}  // namespace

Eigen::VectorXd forward(const ModelParams& params, const Eigen::MatrixXd& features) {
  return run_forward(params, features).probs;
}

void TrainConfig::validate() const {
  auto fail = [](const char* field, const std::string& msg) {
    throw Error(ErrorCode::kValidation, msg, field);
  };
  if (!std::isfinite(lambda) || lambda < 0.0) fail("lambda", "lambda must be finite and >= 0");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) fail("weights", "weights must be finite and >= 0");
    sum += w;
  }
  if (normalize_weights && lambda > 0.0 && sum <= 0.0) fail("weights", "cannot normalise all-zero weights");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate", "learning_rate must be > 0");
  }
  if (epochs < 0) fail("epochs", "epochs must be >= 0");
  if (hidden_units < 1) fail("hidden_units", "hidden_units must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) fail("adam_beta1", "adam_beta1 must be in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("adam_beta2", "adam_beta2 must be in [0, 1)");
  if (!(adam.epsilon > 0.0)) fail("adam_epsilon", "adam_epsilon must be > 0");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    fail("decision_threshold", "decision_threshold must be in (0, 1)");
  }
}

std::array<double, kNumMetrics> TrainConfig::effective_weights() const {
  if (!normalize_weights) return weights;
  double sum = 0.0;
  for (double w : weights) sum += w;
  auto out = weights;
  if (sum > 0.0) {
    for (double& w : out) w /= sum;
  }
  return out;
}

std::array<double, kNumMetrics> parse_weights(const json& j, const std::string& field) {
  std::array<double, kNumMetrics> w{};
  if (j.is_array()) {
    if (j.size() != kNumMetrics) {
      throw Error(ErrorCode::kValidation,
                  fmt::format("{} must have {} entries, got {}", field, kNumMetrics, j.size()), field);
    }
    for (int m = 0; m < kNumMetrics; ++m) {
      if (!j[m].is_number()) {
        throw Error(ErrorCode::kValidation, fmt::format("{}[{}] is not a number", field, m), field);
      }
      w[m] = j[m].get<double>();
    }
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      MetricSpec spec;
      try {
        spec = MetricSpec::parse(key);
      } catch (const Error&) {
        throw Error(ErrorCode::kValidation, fmt::format("{} has unknown metric '{}'", field, key),
                    field);
      }
      if (!value.is_number()) {
        throw Error(ErrorCode::kValidation, fmt::format("{}.{} is not a number", field, key), field);
      }
      w[spec.index()] = value.get<double>();
    }
  } else {
    throw Error(ErrorCode::kValidation, field + " must be an array or an object", field);
  }
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kValidation, field + " entries must be finite and >= 0", field);
    }
  }
  return w;
}

json weights_to_json(const std::array<double, kNumMetrics>& w) {
  json arr = json::array();
  for (double v : w) arr.push_back(v);
  return arr;
}

json TrainConfig::to_json() const {
  return json{{"lambda", lambda},
              {"weights", weights_to_json(weights)},
              {"learning_rate", learning_rate},
              {"epochs", epochs},
              {"seed", seed},
              {"adam_beta1", adam.beta1},
              {"adam_beta2", adam.beta2},
              {"adam_epsilon", adam.epsilon},
              {"hidden_units", hidden_units},
              {"normalize_weights", normalize_weights},
              {"decision_threshold", decision_threshold}};
}

TrainConfig TrainConfig::from_json(const json& j, const TrainConfig& defaults) {
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "training config must be an object", "config");
  TrainConfig c = defaults;
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) {
      throw Error(ErrorCode::kValidation, fmt::format("{} must be a number", key), key);
    }
    out = j.at(key).get<double>();
  };
  auto integer = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) {
      throw Error(ErrorCode::kValidation, fmt::format("{} must be an integer", key), key);
    }
    out = j.at(key).get<std::remove_reference_t<decltype(out)>>();
  };
  number("lambda", c.lambda);
  if (j.contains("weights")) c.weights = parse_weights(j.at("weights"), "weights");
  number("learning_rate", c.learning_rate);
  integer("epochs", c.epochs);
  integer("seed", c.seed);
  number("adam_beta1", c.adam.beta1);
  number("adam_beta2", c.adam.beta2);
  number("adam_epsilon", c.adam.epsilon);
  integer("hidden_units", c.hidden_units);
  if (j.contains("normalize_weights")) {
    if (!j.at("normalize_weights").is_boolean()) {
      throw Error(ErrorCode::kValidation, "normalize_weights must be a boolean", "normalize_weights");
    }
    c.normalize_weights = j.at("normalize_weights").get<bool>();
  }
  number("decision_threshold", c.decision_threshold);
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

ObjectiveTerms objective(const ModelParams& params, const PreparedSplit& data,
                         const TrainConfig& config) {
  if (data.size() == 0) throw Error(ErrorCode::kShapeMismatch, "objective on an empty split");
  const auto f = run_forward(params, data.features);
  return evaluate(f.probs, data, config, {});
}

ObjectiveTerms gradient(const ModelParams& params, const PreparedSplit& data,
                        const TrainConfig& config, ModelParams& grad) {
  const std::size_t n = data.size();
  if (n == 0) throw Error(ErrorCode::kShapeMismatch, "gradient on an empty split");
  const auto f = run_forward(params, data.features);
  std::vector<double> d_probs(n, 0.0);
  const auto terms = evaluate(f.probs, data, config, d_probs);

  // d objective / d logit. BCE contributes (p - y) / N; the fairness term
  // arrives through dp/dz = p (1 - p). Clamped outputs are flat.
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd g_logit(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double p = f.probs[static_cast<Eigen::Index>(i)];
    g_logit[static_cast<Eigen::Index>(i)] =
        f.live[i] ? (p - data.labels[i]) * inv_n + d_probs[i] * p * (1.0 - p) : 0.0;
  }

  if (grad.input_dim() != params.input_dim() || grad.hidden() != params.hidden()) {
    grad = ModelParams::zeros(params.input_dim(), params.hidden());
  }
  const Eigen::MatrixXd hidden = f.pre.cwiseMax(0.0);
  grad.w2().noalias() = hidden.transpose() * g_logit;
  grad.b2() = g_logit.sum();
  Eigen::MatrixXd g_pre = g_logit * params.w2().transpose();
  g_pre = (f.pre.array() > 0.0).select(g_pre, 0.0);
  grad.w1().noalias() = data.features.transpose() * g_pre;
  grad.b1() = g_pre.colwise().sum().transpose();

  if (!std::isfinite(terms.objective) || !grad.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "objective or gradient is not finite");
  }
  return terms;
}

void adam_step(ModelParams& params, const ModelParams& grad, AdamState& state,
               double learning_rate, const AdamOptions& options) {
  if (state.m.data().size() != params.data().size()) state = AdamState::zeros_like(params);
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  auto& m = state.m.data();
  auto& v = state.v.data();
  const auto& g = grad.data();
  m = options.beta1 * m + (1.0 - options.beta1) * g;
  v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseProduct(g);
  params.data().array() -=
      learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + options.epsilon);
}

double accuracy(std::span<const double> probs, std::span<const std::uint8_t> labels,
                double threshold) {
  if (probs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::uint8_t pred = probs[i] >= threshold ? 1 : 0;
    correct += pred == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

json metrics_to_json(const MetricVector& m) {
  json out = json::object();
  for (const auto& spec : all_metrics()) {
    const auto& v = m[spec.index()];
    out[spec.id()] = v ? json(round_significant(*v)) : json(nullptr);
  }
  return out;
}

MetricVector metrics_from_json(const json& j) {
  MetricVector out;
  if (!j.is_object()) return out;
  for (const auto& spec : all_metrics()) {
    if (j.contains(spec.id()) && j.at(spec.id()).is_number()) {
      out[spec.index()] = j.at(spec.id()).get<double>();
    }
  }
  return out;
}

namespace {

json optional_number(const std::optional<double>& v) {
  return v ? json(round_significant(*v)) : json(nullptr);
}

struct SplitEval {
  double accuracy;
  MetricVector metrics;
};

SplitEval evaluate_split(const ModelParams& params, const PreparedSplit& split, double threshold) {
  const Eigen::VectorXd probs = forward(params, split.features);
  const std::span<const double> p(probs.data(), static_cast<std::size_t>(probs.size()));
  return {accuracy(p, split.labels, threshold), evaluate_metrics(p, split.context())};
}

}  // namespace

std::string TrainTrace::epochs_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    json line{{"epoch", e.epoch},
              {"objective", round_significant(e.objective)},
              {"mean_loss", round_significant(e.mean_loss)},
              {"fairness", optional_number(e.fairness)},
              {"dev_accuracy", optional_number(e.dev_accuracy)},
              {"dev_metrics", metrics_to_json(e.dev_metrics)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

json TrainTrace::summary_json(const TrainConfig& config) const {
  return json{{"format", "fairforge.train_summary"},
              {"version", 1},
              {"config", config.to_json()},
              {"epochs_run", epochs.size()},
              {"decision_threshold", config.decision_threshold},
              {"train_accuracy", optional_number(train_accuracy)},
              {"dev_accuracy", optional_number(dev_accuracy)},
              {"dev_metrics", metrics_to_json(dev_metrics)},
              {"test_accuracy", optional_number(test_accuracy)},
              {"test_metrics", metrics_to_json(test_metrics)},
              {"failure", failure ? json(*failure) : json(nullptr)}};
}

TrainResult train(const PreparedDataset& data, const TrainConfig& config) {
  config.validate();
  const auto& train_split = data.split(Split::kTrain);
  const auto& dev_split = data.split(Split::kDev);
  const auto& test_split = data.split(Split::kTest);
  if (train_split.size() == 0) throw Error(ErrorCode::kValidation, "train split is empty");

  TrainResult result;
  result.params = ModelParams::glorot(train_split.features.cols(), config.hidden_units, config.seed);
  AdamState state = AdamState::zeros_like(result.params);
  ModelParams grad = ModelParams::zeros(result.params.input_dim(), result.params.hidden());
  auto& trace = result.trace;
  trace.epochs.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    ObjectiveTerms terms;
    try {
      terms = gradient(result.params, train_split, config, grad);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFinite) throw;
      trace.failure = fmt::format("epoch {}: {}", epoch, e.what());
      break;
    }
    ModelParams next = result.params;
    adam_step(next, grad, state, config.learning_rate, config.adam);
    if (!next.all_finite()) {
      trace.failure = fmt::format("epoch {}: parameters became non-finite", epoch);
      break;
    }
    result.params = std::move(next);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.objective = terms.objective;
    rec.mean_loss = terms.mean_loss;
    rec.fairness = terms.fairness;
    if (dev_split.size() > 0) {
      auto ev = evaluate_split(result.params, dev_split, config.decision_threshold);
      rec.dev_accuracy = ev.accuracy;
      rec.dev_metrics = ev.metrics;
    }
    trace.epochs.push_back(std::move(rec));
  }

  const auto train_eval = evaluate_split(result.params, train_split, config.decision_threshold);
  trace.train_accuracy = train_eval.accuracy;
  if (dev_split.size() > 0) {
    auto ev = evaluate_split(result.params, dev_split, config.decision_threshold);
    trace.dev_accuracy = ev.accuracy;
    trace.dev_metrics = ev.metrics;
  }
  if (test_split.size() > 0) {
    auto ev = evaluate_split(result.params, test_split, config.decision_threshold);
    trace.test_accuracy = ev.accuracy;
    trace.test_metrics = ev.metrics;
  }
  return result;
}

}  // namespace fairforge
