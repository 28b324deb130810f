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
#include "fairforge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fairforge/error.hpp"
#include "fairforge/util.hpp"

namespace fairforge {

using nlohmann::json;

std::string_view to_string(Group g) {
  return g == Group::kPrivileged ? "privileged" : "unprivileged";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev" || s == "validation") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw Error(ErrorCode::kValidation, fmt::format("unknown split '{}'", s), "split");
}

namespace {

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool is_missing(std::string_view v) { return v.empty() || v == "?" || v == "NA"; }

double parse_number(std::string_view text, std::string_view column, std::size_t row) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  while (ptr < last && *ptr == ' ') ++ptr;
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::kParse,
                fmt::format("column '{}' row {}: '{}' is not a number", column, row + 1, text),
                std::string(column));
  }
  return value;
}

std::vector<std::string> string_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) {
    throw Error(ErrorCode::kValidation, fmt::format("'{}' must be an array of strings", key), key);
  }
  std::vector<std::string> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) {
      throw Error(ErrorCode::kValidation, fmt::format("'{}' must be an array of strings", key),
                  key);
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::kValidation, fmt::format("schema field '{}' must be a string", key),
                key);
  }
  return j.at(key).get<std::string>();
}

// Split assignment sequence: at each position pick the split furthest below
// its quota. Any contiguous run of positions receives each split in
// proportion to within +-1, so consecutive strata are each split
// proportionally while global totals come out exact.
std::vector<Split> quota_sequence(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> frac{f.train, f.dev, f.test};
  std::array<std::size_t, 3> assigned{};
  std::vector<Split> seq(n);
  for (std::size_t k = 0; k < n; ++k) {
    int best = 0;
    double best_deficit = -1e300;
    for (int s = 0; s < 3; ++s) {
      if (frac[s] <= 0.0) continue;
      const double deficit = frac[s] * static_cast<double>(k + 1) - static_cast<double>(assigned[s]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    ++assigned[best];
    seq[k] = static_cast<Split>(best);
  }
  return seq;
}

int stratum_of(Group g, std::uint8_t y) { return static_cast<int>(g) * 2 + y; }

}  // namespace

std::string EncodedColumn::name() const {
  return kind == Kind::kNumeric ? source : source + "=" + category;
}

void DatasetSchema::validate() const {
  if (label_column.empty()) throw Error(ErrorCode::kValidation, "label_column is empty", "label_column");
  if (protected_column.empty()) {
    throw Error(ErrorCode::kValidation, "protected_column is empty", "protected_column");
  }
  if (fair_feature_columns.empty()) {
    throw Error(ErrorCode::kValidation, "at least one fair feature column is required",
                "fair_feature_columns");
  }
  for (const auto& c : fair_feature_columns) {
    if (!contains(numeric_columns, c) && !contains(categorical_columns, c)) {
      throw Error(ErrorCode::kValidation,
                  fmt::format("fair feature '{}' is not a numeric or categorical column", c),
                  "fair_feature_columns");
    }
  }
  for (const auto* list : {&numeric_columns, &categorical_columns, &fair_feature_columns}) {
    if (contains(*list, label_column)) {
      throw Error(ErrorCode::kValidation, "label column listed as a feature", "label_column");
    }
    if (contains(*list, protected_column)) {
      throw Error(ErrorCode::kValidation,
                  "protected column must not be a model feature; it is carried as the group vector",
                  "protected_column");
    }
  }
  for (const auto& c : numeric_columns) {
    if (contains(categorical_columns, c)) {
      throw Error(ErrorCode::kValidation,
                  fmt::format("'{}' listed as both numeric and categorical", c), "numeric_columns");
    }
  }
  if (protected_threshold && privileged_value != "above" && privileged_value != "at_or_below") {
    throw Error(ErrorCode::kValidation,
                "with protected_threshold, privileged_value must be 'above' or 'at_or_below'",
                "privileged_value");
  }
  if (!protected_threshold && privileged_value.empty()) {
    throw Error(ErrorCode::kValidation, "privileged_value is empty", "privileged_value");
  }
}

DatasetSchema DatasetSchema::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "schema must be a JSON object");
  DatasetSchema s;
  s.name = j.value("name", std::string{});
  s.label_column = required_string(j, "label_column");
  s.positive_label_value = required_string(j, "positive_label_value");
  s.protected_column = required_string(j, "protected_column");
  s.privileged_value = required_string(j, "privileged_value");
  s.fair_feature_columns = string_list(j, "fair_feature_columns");
  s.numeric_columns = string_list(j, "numeric_columns");
  s.categorical_columns = string_list(j, "categorical_columns");
  s.drop_columns = string_list(j, "drop_columns");
  s.unprivileged_values = string_list(j, "unprivileged_values");
  if (j.contains("protected_threshold") && !j.at("protected_threshold").is_null()) {
    if (!j.at("protected_threshold").is_number()) {
      throw Error(ErrorCode::kValidation, "protected_threshold must be a number",
                  "protected_threshold");
    }
    s.protected_threshold = j.at("protected_threshold").get<double>();
  }
  s.validate();
  return s;
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j);
}

json DatasetSchema::to_json() const {
  json j{{"name", name},
         {"label_column", label_column},
         {"positive_label_value", positive_label_value},
         {"protected_column", protected_column},
         {"privileged_value", privileged_value},
         {"fair_feature_columns", fair_feature_columns},
         {"numeric_columns", numeric_columns},
         {"categorical_columns", categorical_columns},
         {"drop_columns", drop_columns}};
  if (protected_threshold) j["protected_threshold"] = *protected_threshold;
  if (!unprivileged_values.empty()) j["unprivileged_values"] = unprivileged_values;
  return j;
}

std::vector<std::size_t> TabularDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

TabularDataset load_dataset(const std::filesystem::path& csv_path, const DatasetSchema& schema,
                            const LoadOptions& options) {
  return load_dataset(read_csv(csv_path), schema, options);
}

TabularDataset load_dataset(const CsvTable& table, const DatasetSchema& schema,
                            const LoadOptions& options) {
  schema.validate();
  const auto& fr = options.fractions;
  if (fr.train <= 0.0 || fr.dev < 0.0 || fr.test < 0.0 ||
      std::abs(fr.train + fr.dev + fr.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kValidation, "split fractions must be non-negative and sum to 1",
                "split_fractions");
  }

  auto require = [&](const std::string& column) {
    const int idx = table.column_index(column);
    if (idx < 0) {
      throw Error(ErrorCode::kMissingColumn, fmt::format("csv has no column '{}'", column), column);
    }
    return static_cast<std::size_t>(idx);
  };

  const std::size_t label_idx = require(schema.label_column);
  const std::size_t protected_idx = require(schema.protected_column);

  std::vector<std::string> numeric, categorical;
  for (const auto& c : schema.numeric_columns) {
    if (!contains(schema.drop_columns, c) || contains(schema.fair_feature_columns, c)) numeric.push_back(c);
  }
  for (const auto& c : schema.categorical_columns) {
    if (!contains(schema.drop_columns, c) || contains(schema.fair_feature_columns, c)) categorical.push_back(c);
  }
  std::vector<std::size_t> numeric_idx, categorical_idx;
  for (const auto& c : numeric) numeric_idx.push_back(require(c));
  for (const auto& c : categorical) categorical_idx.push_back(require(c));

  // Rows surviving missing-value and protected-value filters.
  std::vector<std::size_t> kept;
  std::vector<Group> group;
  std::set<std::string> raw_labels;
  std::size_t dropped_missing = 0, dropped_protected = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = is_missing(row[label_idx]) || is_missing(row[protected_idx]);
    for (auto i : numeric_idx) missing = missing || is_missing(row[i]);
    for (auto i : categorical_idx) missing = missing || is_missing(row[i]);
    if (missing) {
      ++dropped_missing;
      continue;
    }
    const std::string& pv = row[protected_idx];
    Group g;
    if (schema.protected_threshold) {
      const double v = parse_number(pv, schema.protected_column, r);
      const std::string token = v > *schema.protected_threshold ? "above" : "at_or_below";
      g = token == schema.privileged_value ? Group::kPrivileged : Group::kUnprivileged;
    } else if (pv == schema.privileged_value) {
      g = Group::kPrivileged;
    } else if (schema.unprivileged_values.empty() || contains(schema.unprivileged_values, pv)) {
      g = Group::kUnprivileged;
    } else {
      ++dropped_protected;
      continue;
    }
    raw_labels.insert(row[label_idx]);
    kept.push_back(r);
    group.push_back(g);
  }
  if (dropped_missing > 0) {
    spdlog::info("{}: dropped {} rows with missing values", schema.name, dropped_missing);
  }
  if (dropped_protected > 0) {
    spdlog::info("{}: dropped {} rows outside the compared protected groups", schema.name,
                 dropped_protected);
  }
  if (raw_labels.size() > 2) {
    throw Error(ErrorCode::kNonBinaryLabel,
                fmt::format("label column '{}' has {} distinct values", schema.label_column,
                            raw_labels.size()),
                schema.label_column);
  }

  std::vector<std::uint8_t> labels(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    labels[k] = table.rows[kept[k]][label_idx] == schema.positive_label_value ? 1 : 0;
  }

  Rng rng(options.split_seed);

  // Stratum membership in original row order.
  std::array<std::vector<std::size_t>, 4> strata;
  for (std::size_t k = 0; k < kept.size(); ++k) strata[stratum_of(group[k], labels[k])].push_back(k);
  for (int s = 0; s < 4; ++s) {
    if (strata[s].empty()) {
      throw Error(ErrorCode::kEmptyGroup,
                  fmt::format("no {} rows with label {}; cannot stratify",
                              to_string(static_cast<Group>(s / 2)), s % 2));
    }
  }

  // Optional stratified subsample, largest-remainder allocation per stratum.
  std::vector<char> selected(kept.size(), 1);
  if (options.max_rows > 0 && kept.size() > options.max_rows) {
    std::array<std::size_t, 4> take{};
    std::array<double, 4> remainder{};
    std::size_t total = 0;
    for (int s = 0; s < 4; ++s) {
      const double exact = static_cast<double>(strata[s].size()) *
                           static_cast<double>(options.max_rows) / static_cast<double>(kept.size());
      take[s] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
      remainder[s] = exact - std::floor(exact);
      total += take[s];
    }
    while (total < options.max_rows) {
      int best = 0;
      for (int s = 1; s < 4; ++s) {
        if (remainder[s] > remainder[best]) best = s;
      }
      ++take[best];
      remainder[best] = -1.0;
      ++total;
    }
    std::fill(selected.begin(), selected.end(), 0);
    for (int s = 0; s < 4; ++s) {
      auto members = strata[s];
      shuffle(members, rng);
      members.resize(std::min(take[s], members.size()));
      std::sort(members.begin(), members.end());
      strata[s] = members;
      for (auto k : members) selected[k] = 1;
    }
  }

  // Stratified split: shuffle within strata, then walk strata in fixed order
  // through the quota sequence.
  std::vector<Split> split_of(kept.size(), Split::kTrain);
  std::size_t n_selected = 0;
  for (const auto& s : strata) n_selected += s.size();
  const auto seq = quota_sequence(n_selected, options.fractions);
  std::size_t pos = 0;
  for (int s = 0; s < 4; ++s) {
    auto members = strata[s];
    shuffle(members, rng);
    for (auto k : members) split_of[k] = seq[pos++];
  }

  std::vector<std::size_t> rows;  // positions into kept, original order
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (selected[k]) rows.push_back(k);
  }
  const std::size_t n = rows.size();

  TabularDataset ds;
  ds.name = schema.name;
  ds.dropped_missing = dropped_missing;
  ds.dropped_protected = dropped_protected;
  ds.labels.resize(n);
  ds.group.resize(n);
  ds.split.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = labels[rows[i]];
    ds.group[i] = group[rows[i]];
    ds.split[i] = split_of[rows[i]];
  }
  if (schema.protected_threshold) {
    const auto thr = fmt::format("{}", *schema.protected_threshold);
    const bool priv_above = schema.privileged_value == "above";
    ds.privileged_label = (priv_above ? "> " : "<= ") + thr;
    ds.unprivileged_label = (priv_above ? "<= " : "> ") + thr;
  } else {
    ds.privileged_label = schema.privileged_value;
    ds.unprivileged_label = schema.unprivileged_values.empty()
                                ? "not " + schema.privileged_value
                                : fmt::format("{}", fmt::join(schema.unprivileged_values, "|"));
  }

  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    std::array<bool, 2> has_group{}, has_label{};
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.split[i] != s) continue;
      any = true;
      has_group[static_cast<int>(ds.group[i])] = true;
      has_label[ds.labels[i]] = true;
    }
    const bool required = (s == Split::kTrain) || (s == Split::kDev ? fr.dev > 0 : fr.test > 0);
    if (required && (!any || !has_group[0] || !has_group[1])) {
      throw Error(ErrorCode::kEmptyGroup,
                  fmt::format("{} split lacks one of the groups; dataset too small to stratify",
                              to_string(s)));
    }
    // The fair-risk model needs both labels on train; elsewhere a missing
    // label only leaves the EOO metrics undefined.
    if (s == Split::kTrain && (!has_label[0] || !has_label[1])) {
      throw Error(ErrorCode::kEmptyGroup, "train split lacks a label value; dataset too small");
    }
  }

  // Encoding. Numeric statistics come from the train split only.
  std::vector<EncodedColumn> columns;
  auto encode_numeric = [&](const std::string& name, std::size_t idx) {
    EncodedColumn col{name, EncodedColumn::Kind::kNumeric, {}, 0.0, 1.0};
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.split[i] != Split::kTrain) continue;
      const double v = parse_number(table.rows[kept[rows[i]]][idx], name, kept[rows[i]]);
      sum += v;
      ++count;
    }
    col.mean = sum / static_cast<double>(count);
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.split[i] != Split::kTrain) continue;
      const double d = parse_number(table.rows[kept[rows[i]]][idx], name, kept[rows[i]]) - col.mean;
      sumsq += d * d;
    }
    const double sd = std::sqrt(sumsq / static_cast<double>(count));
    col.scale = sd > 1e-12 ? sd : 1.0;
    return col;
  };
  auto encode_categorical = [&](const std::string& name, std::size_t idx) {
    std::set<std::string> vocab;
    for (std::size_t i = 0; i < n; ++i) vocab.insert(table.rows[kept[rows[i]]][idx]);
    std::vector<EncodedColumn> out;
    for (const auto& v : vocab) out.push_back({name, EncodedColumn::Kind::kOneHot, v, 0.0, 1.0});
    return out;
  };

  std::map<std::string, std::vector<EncodedColumn>> encoded_by_source;
  for (std::size_t c = 0; c < numeric.size(); ++c) {
    encoded_by_source[numeric[c]] = {encode_numeric(numeric[c], numeric_idx[c])};
  }
  for (std::size_t c = 0; c < categorical.size(); ++c) {
    encoded_by_source[categorical[c]] = encode_categorical(categorical[c], categorical_idx[c]);
  }

  auto fill = [&](const std::vector<std::string>& sources, std::vector<EncodedColumn>& cols,
                  Eigen::MatrixXd& m) {
    cols.clear();
    for (const auto& s : sources) {
      const auto& enc = encoded_by_source.at(s);
      cols.insert(cols.end(), enc.begin(), enc.end());
    }
    m.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& col = cols[c];
      const std::size_t idx = require(col.source);
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& raw = table.rows[kept[rows[i]]][idx];
        double v;
        if (col.kind == EncodedColumn::Kind::kNumeric) {
          v = (parse_number(raw, col.source, kept[rows[i]]) - col.mean) / col.scale;
        } else {
          v = raw == col.category ? 1.0 : 0.0;
        }
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
      }
    }
  };

  std::vector<std::string> feature_sources;
  for (const auto& c : numeric) {
    if (!contains(schema.drop_columns, c)) feature_sources.push_back(c);
  }
  for (const auto& c : categorical) {
    if (!contains(schema.drop_columns, c)) feature_sources.push_back(c);
  }
  fill(feature_sources, ds.feature_columns, ds.features);
  fill(schema.fair_feature_columns, ds.fair_feature_columns, ds.fair_features);
  return ds;
}

json TabularDataset::to_json() const {
  auto columns_json = [](const std::vector<EncodedColumn>& cols) {
    json arr = json::array();
    for (const auto& c : cols) {
      json jc{{"name", c.name()}, {"source", c.source}};
      if (c.kind == EncodedColumn::Kind::kNumeric) {
        jc["kind"] = "numeric";
        jc["mean"] = c.mean;
        jc["scale"] = c.scale;
      } else {
        jc["kind"] = "one_hot";
        jc["category"] = c.category;
      }
      arr.push_back(std::move(jc));
    }
    return arr;
  };
  auto matrix_json = [](const Eigen::MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      arr.push_back(std::move(row));
    }
    return arr;
  };
  json groups = json::array();
  json splits = json::array();
  for (auto g : group) groups.push_back(g == Group::kPrivileged ? "G+" : "G-");
  for (auto s : split) splits.push_back(to_string(s));
  return json{{"format", "fairforge.dataset"},
              {"version", 1},
              {"name", name},
              {"rows", size()},
              {"privileged", privileged_label},
              {"unprivileged", unprivileged_label},
              {"dropped_missing", dropped_missing},
              {"dropped_protected", dropped_protected},
              {"feature_columns", columns_json(feature_columns)},
              {"fair_feature_columns", columns_json(fair_feature_columns)},
              {"features", matrix_json(features)},
              {"fair_features", matrix_json(fair_features)},
              {"labels", labels},
              {"group", groups},
              {"split", splits}};
}

ClassDistribution class_distribution(std::span<const std::uint8_t> labels,
                                     std::span<const Group> group) {
  ClassDistribution d;
  d.total = labels.size();
  for (int g = 0; g < 2; ++g) d.groups[g].group = static_cast<Group>(g);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& gd = d.groups[static_cast<int>(group[i])];
    ++gd.total;
    ++gd.by_label[labels[i] ? 1 : 0].count;
  }
  for (auto& gd : d.groups) {
    gd.present = gd.total > 0;
    if (!gd.present) continue;
    for (auto& cell : gd.by_label) {
      cell.proportion = static_cast<double>(cell.count) / static_cast<double>(gd.total);
    }
  }
  return d;
}

ClassDistribution class_distribution(const TabularDataset& ds) {
  return class_distribution(ds.labels, ds.group);
}

json ClassDistribution::to_json() const {
  json groups_json = json::array();
  for (const auto& gd : groups) {
    json jg{{"group", to_string(gd.group)}, {"present", gd.present}, {"count", gd.total}};
    if (gd.present) {
      jg["label_0"] = {{"count", gd.by_label[0].count}, {"proportion", gd.by_label[0].proportion}};
      jg["label_1"] = {{"count", gd.by_label[1].count}, {"proportion", gd.by_label[1].proportion}};
    }
    groups_json.push_back(std::move(jg));
  }
  return json{{"total", total}, {"groups", groups_json}};
}

}  // namespace fairforge
