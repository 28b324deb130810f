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
#ifndef FAIRFORGE_DATASET_HPP_
#define FAIRFORGE_DATASET_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fairforge/csv.hpp"

namespace fairforge {

enum class Group : std::uint8_t { kPrivileged = 0, kUnprivileged = 1 };
enum class Split : std::uint8_t { kTrain = 0, kDev = 1, kTest = 2 };

std::string_view to_string(Group g);
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

// Column roles for one benchmark table.
//
// The protected attribute never becomes a model input; it survives only as
// the group vector. Two optional extensions cover binarization:
//   protected_threshold  numeric protected column; values above the
//                        threshold map to "above", the rest to
//                        "at_or_below", and privileged_value names one of
//                        those two tokens.
//   unprivileged_values  when non-empty, rows whose protected value is
//                        neither privileged_value nor listed here are
//                        dropped.
struct DatasetSchema {
  std::string name;
  std::string label_column;
  std::string positive_label_value;
  std::string protected_column;
  std::string privileged_value;
  std::vector<std::string> fair_feature_columns;
  std::vector<std::string> numeric_columns;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> drop_columns;
  std::optional<double> protected_threshold;
  std::vector<std::string> unprivileged_values;

  // Throws Error(kValidation) naming the offending field.
  void validate() const;

  static DatasetSchema from_json(const nlohmann::json& j);
  static DatasetSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct SplitFractions {
  double train = 0.6;
  double dev = 0.2;
  double test = 0.2;
};

struct LoadOptions {
  std::uint64_t split_seed = 0;
  SplitFractions fractions;
  // Stratified subsample to at most this many rows before splitting; 0 keeps all.
  std::size_t max_rows = 0;
};

// One encoded model column: a z-scored numeric or a one-hot indicator.
struct EncodedColumn {
  enum class Kind { kNumeric, kOneHot };
  std::string source;
  Kind kind = Kind::kNumeric;
  std::string category;  // one-hot only
  double mean = 0.0;     // numeric only, train split
  double scale = 1.0;    // numeric only, train split std (1 when constant)

  std::string name() const;
};

struct TabularDataset {
  std::string name;
  Eigen::MatrixXd features;       // N x d
  std::vector<std::uint8_t> labels;
  std::vector<Group> group;
  Eigen::MatrixXd fair_features;  // N x d_f
  std::vector<Split> split;
  std::vector<EncodedColumn> feature_columns;
  std::vector<EncodedColumn> fair_feature_columns;
  // Raw protected-attribute value of each group, for reporting.
  std::string privileged_label;
  std::string unprivileged_label;
  std::size_t dropped_missing = 0;
  std::size_t dropped_protected = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::vector<std::size_t> indices(Split s) const;

  // Versioned JSON container: row-major matrices plus encoding metadata.
  nlohmann::json to_json() const;
};

// Reads a CSV and encodes it per the schema. Errors: kMissingColumn,
// kEmptyGroup (a (group, label) stratum or split cannot be populated),
// kNonBinaryLabel, kParse, kValidation.
TabularDataset load_dataset(const std::filesystem::path& csv_path, const DatasetSchema& schema,
                            const LoadOptions& options);
TabularDataset load_dataset(const CsvTable& table, const DatasetSchema& schema,
                            const LoadOptions& options);

struct ClassCell {
  std::size_t count = 0;
  double proportion = 0.0;
};

struct GroupDistribution {
  Group group = Group::kPrivileged;
  bool present = false;
  std::size_t total = 0;
  std::array<ClassCell, 2> by_label{};  // index = label value
};

struct ClassDistribution {
  std::size_t total = 0;
  std::array<GroupDistribution, 2> groups{};  // index = Group value

  nlohmann::json to_json() const;
};

ClassDistribution class_distribution(const TabularDataset& ds);
ClassDistribution class_distribution(std::span<const std::uint8_t> labels,
                                     std::span<const Group> group);

}  // namespace fairforge

#endif  // FAIRFORGE_DATASET_HPP_
