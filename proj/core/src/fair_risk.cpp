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
#include "fairforge/fair_risk.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fairforge/error.hpp"
#include "fairforge/util.hpp"

namespace fairforge {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> FairRiskModel::score(const Eigen::MatrixXd& fair_features) const {
  if (fair_features.cols() != coefficients.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("fair feature width {} != model width {}", fair_features.cols(),
                            coefficients.size()));
  }
  const Eigen::VectorXd z = (fair_features * coefficients).array() + intercept;
  std::vector<double> out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = sigmoid(z[i]);
  return out;
}

json FairRiskModel::to_json() const {
  json coef = json::array();
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    coef.push_back(round_significant(coefficients[i]));
  }
  return json{{"format", "fairforge.fair_risk_model"},
              {"version", 1},
              {"coefficients", coef},
              {"intercept", round_significant(intercept)},
              {"degenerate", degenerate},
              {"converged", converged},
              {"iterations", iterations},
              {"gradient_norm", round_significant(gradient_norm)}};
}

FairRiskModel fit_logistic(const Eigen::MatrixXd& x, std::span<const std::uint8_t> y,
                           const FairRiskFitOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    throw Error(ErrorCode::kShapeMismatch, "fair-risk fit needs one label per non-empty row");
  }
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target[i] = y[static_cast<std::size_t>(i)];

  FairRiskModel model;
  model.coefficients = Eigen::VectorXd::Zero(d);
  model.degenerate = d == 0 || ((x.rowwise() - x.row(0)).cwiseAbs().maxCoeff() == 0.0);
  if (model.degenerate) {
    spdlog::warn("fair features are identical on every row; fair-risk model is intercept only");
  }

  // Step 1/L with L bounding the loss Hessian: 0.25 * trace of the
  // augmented second-moment matrix, plus the ridge term.
  const double mean_sq = (x.rowwise().squaredNorm().array() + 1.0).mean();
  const double step = 1.0 / (0.25 * mean_sq + options.l2);
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd residual(n);
  for (int it = 0;; ++it) {
    Eigen::VectorXd z = (x * model.coefficients).array() + model.intercept;
    for (Eigen::Index i = 0; i < n; ++i) residual[i] = sigmoid(z[i]) - target[i];
    Eigen::VectorXd grad_w = inv_n * (x.transpose() * residual) + options.l2 * model.coefficients;
    const double grad_b = inv_n * residual.sum();
    model.gradient_norm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
    model.iterations = it;
    if (model.gradient_norm < options.gradient_tolerance) break;
    if (it >= options.max_iterations) {
      model.converged = false;
      spdlog::warn("fair-risk fit stopped at {} iterations, gradient norm {:.3g}", it,
                   model.gradient_norm);
      break;
    }
    model.coefficients -= step * grad_w;
    model.intercept -= step * grad_b;
  }
  return model;
}

FairRiskModel fit_fair_risk(const TabularDataset& ds, const FairRiskFitOptions& options) {
  if (ds.fair_features.cols() == 0) {
    throw Error(ErrorCode::kValidation, "dataset has no fair features", "fair_feature_columns");
  }
  const auto train = ds.indices(Split::kTrain);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), ds.fair_features.cols());
  std::vector<std::uint8_t> y(train.size());
  bool has0 = false, has1 = false;
  for (std::size_t k = 0; k < train.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) = ds.fair_features.row(static_cast<Eigen::Index>(train[k]));
    y[k] = ds.labels[train[k]];
    (y[k] ? has1 : has0) = true;
  }
  if (!has0 || !has1) {
    throw Error(ErrorCode::kEmptyGroup, "train split must contain both label values");
  }
  return fit_logistic(x, y, options);
}

ParityShift parity_shift(std::span<const double> scores, std::span<const Group> group) {
  double sum_priv = 0.0, sum_unpriv = 0.0;
  std::size_t n_priv = 0, n_unpriv = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (group[i] == Group::kPrivileged) {
      sum_priv += scores[i];
      ++n_priv;
    } else {
      sum_unpriv += scores[i];
      ++n_unpriv;
    }
  }
  if (n_priv == 0 || n_unpriv == 0) {
    throw Error(ErrorCode::kEmptyGroup, "parity shift needs instances from both groups");
  }
  ParityShift out;
  out.shift_constant = sum_unpriv / static_cast<double>(n_unpriv) -
                       sum_priv / static_cast<double>(n_priv);
  out.shifted_scores.assign(scores.begin(), scores.end());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (group[i] == Group::kPrivileged) out.shifted_scores[i] += out.shift_constant;
  }
  return out;
}

FairRiskProfile FairRiskProfile::build(std::vector<double> scores, std::span<const Group> group) {
  auto shift = parity_shift(scores, group);
  return FairRiskProfile{std::move(scores), shift.shift_constant, std::move(shift.shifted_scores)};
}

json FairRiskProfile::to_json() const {
  json s = json::array(), ss = json::array();
  for (double v : scores) s.push_back(round_significant(v));
  for (double v : shifted_scores) ss.push_back(round_significant(v));
  return json{{"scores", s}, {"shift_constant", round_significant(shift_constant)},
              {"shifted_scores", ss}};
}

std::string_view to_string(MatchAxis a) {
  return a == MatchAxis::kRawScores ? "raw_scores" : "shifted_scores";
}

json MatchedPairs::to_json() const {
  json q = json::array(), r = json::array();
  for (const auto& p : pairs) {
    q.push_back(p.query);
    r.push_back(p.reference);
  }
  return json{{"query_group", to_string(query_group)},
              {"axis", to_string(axis)},
              {"regime", to_string(regime)},
              {"query", q},
              {"reference", r}};
}

MatchedPairs match_pairs(std::span<const double> axis, std::span<const Group> group,
                         std::span<const std::uint8_t> eligible) {
  if (axis.size() != group.size() || axis.size() != eligible.size()) {
    throw Error(ErrorCode::kShapeMismatch, "matching inputs differ in length");
  }
  std::size_t n_priv = 0, n_unpriv = 0;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!eligible[i]) continue;
    (group[i] == Group::kPrivileged ? n_priv : n_unpriv) += 1;
  }
  if (n_priv == 0 || n_unpriv == 0) {
    throw Error(ErrorCode::kEmptyGroup, "matching needs an eligible instance in both groups");
  }

  MatchedPairs out;
  out.query_group = n_unpriv <= n_priv ? Group::kUnprivileged : Group::kPrivileged;

  // Distinct reference values in ascending order, each with the lowest
  // reference index holding that value.
  std::vector<std::pair<double, std::size_t>> refs;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (eligible[i] && group[i] != out.query_group) refs.emplace_back(axis[i], i);
  }
  std::sort(refs.begin(), refs.end());
  std::vector<double> values;
  std::vector<std::size_t> min_index;
  for (const auto& [v, i] : refs) {
    if (values.empty() || values.back() != v) {
      values.push_back(v);
      min_index.push_back(i);
    }
  }

  const auto m = static_cast<std::ptrdiff_t>(values.size());
  for (std::size_t q = 0; q < axis.size(); ++q) {
    if (!eligible[q] || group[q] != out.query_group) continue;
    const double s = axis[q];
    const auto pos = std::lower_bound(values.begin(), values.end(), s) - values.begin();
    double best = std::numeric_limits<double>::infinity();
    if (pos < m) best = std::min(best, std::abs(values[pos] - s));
    if (pos > 0) best = std::min(best, std::abs(s - values[pos - 1]));
    // Distances are monotone on each side of s, so every value within the
    // tie tolerance is contiguous with the bracketing pair.
    const double limit = best + kMatchTieTolerance;
    std::size_t chosen = std::numeric_limits<std::size_t>::max();
    for (auto k = pos; k < m && std::abs(values[k] - s) <= limit; ++k) {
      chosen = std::min(chosen, min_index[k]);
    }
    for (auto k = pos - 1; k >= 0 && std::abs(s - values[k]) <= limit; --k) {
      chosen = std::min(chosen, min_index[k]);
    }
    out.pairs.push_back({q, chosen});
  }
  return out;
}

MatchedPairs match_profile(const FairRiskProfile& profile, std::span<const Group> group,
                           std::span<const std::uint8_t> labels, MatchAxis axis, Regime regime) {
  std::vector<std::uint8_t> eligible(labels.size(), 1);
  if (regime == Regime::kEoo) {
    for (std::size_t i = 0; i < labels.size(); ++i) eligible[i] = labels[i] ? 1 : 0;
  }
  const auto& values = axis == MatchAxis::kRawScores ? profile.scores : profile.shifted_scores;
  MatchedPairs out;
  try {
    out = match_pairs(values, group, eligible);
  } catch (const Error& e) {
    if (regime == Regime::kEoo && e.code() == ErrorCode::kEmptyGroup) {
      throw Error(ErrorCode::kEmptyEooPool, "a group has no label-1 instances to match");
    }
    throw;
  }
  out.axis = axis;
  out.regime = regime;
  return out;
}

}  // namespace fairforge
