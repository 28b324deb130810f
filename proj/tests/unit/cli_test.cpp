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
#include "fairforge/cli.hpp"

#include <cstdlib>
#include <filesystem>

#include "gtest/gtest.h"
#include "fairforge/harness.hpp"
#include "fairforge/util.hpp"
#include "test_util.hpp"

namespace fairforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json toy_dataset_json() {
  return {{"name", "toy"},
          {"csv", (testing::data_dir() / "toy.csv").string()},
          {"schema", (testing::data_dir() / "toy.json").string()}};
}

json quick_training() { return {{"epochs", 20}, {"learning_rate", 1e-2}, {"hidden_units", 8}}; }

fs::path write_plan(const fs::path& dir, const json& plan) {
  const auto path = dir / "plan.json";
  write_file(path, plan.dump(2));
  return path;
}

json sweep_plan() {
  return {{"kind", "lambda_sweep"},
          {"dataset", toy_dataset_json()},
          {"lambda_grid", {0.0, 1.0}},
          {"base_weights", {{"group.intersectional.outcome", 1}}},
          {"seeds", {0, 1}},
          {"training", quick_training()}};
}

struct Captured {
  int code;
  std::string out;
};

Captured run_cli(std::vector<std::string> args) {
  ::testing::internal::CaptureStdout();
  const int code = cli::run(args);
  return {code, ::testing::internal::GetCapturedStdout()};
}

TEST(Cli, UsageErrorsExitWithValidationCode) {
  EXPECT_EQ(run_cli({}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"sweep", "--plan", "/nonexistent/plan.json"}).code, cli::kExitValidation);
}

TEST(Cli, ErrorJsonCarriesCodeAndField) {
  const auto dir = testing::temp_dir("cli_error");
  auto plan = sweep_plan();
  plan["lambda_grid"] = {-1.0};
  const auto path = write_plan(dir, plan);
  const auto err = dir / "error.json";
  const auto r = run_cli({"--error-json", err.string(), "--log-level", "off", "sweep", "--plan",
                          path.string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  const auto j = json::parse(read_file(err));
  EXPECT_EQ(j.at("code"), "validation_error");
  EXPECT_EQ(j.at("field"), "lambda_grid");
}

TEST(Cli, SweepRejectsOtherPlanKinds) {
  const auto dir = testing::temp_dir("cli_kind");
  const auto path = write_plan(dir, {{"kind", "consensus_sweep"}, {"dataset", toy_dataset_json()}});
  const auto err = dir / "error.json";
  EXPECT_EQ(run_cli({"--error-json", err.string(), "--log-level", "off", "sweep", "--plan",
                     path.string(), "--out", (dir / "out").string()})
                .code,
            cli::kExitValidation);
  EXPECT_EQ(json::parse(read_file(err)).at("field"), "kind");
}

TEST(Cli, IngestWritesDatasetAndDistribution) {
  const auto dir = testing::temp_dir("cli_ingest");
  const auto r = run_cli({"--log-level", "off", "ingest", "--csv",
                          (testing::data_dir() / "toy.csv").string(), "--schema",
                          (testing::data_dir() / "toy.json").string(), "--seed", "4", "--out",
                          dir.string()});
  ASSERT_EQ(r.code, cli::kExitOk);
  LoadOptions lo;
  lo.split_seed = 4;
  const auto ds = load_dataset(testing::data_dir() / "toy.csv",
                               DatasetSchema::load(testing::data_dir() / "toy.json"), lo);
  EXPECT_EQ(r.out, dump_json(class_distribution(ds).to_json()));
  EXPECT_EQ(read_file(dir / "dataset.json"), dump_json(ds.to_json()));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, SweepOutputMatchesTheHarness) {
  const auto dir = testing::temp_dir("cli_sweep");
  const auto path = write_plan(dir, sweep_plan());
  ASSERT_EQ(run_cli({"--log-level", "off", "sweep", "--plan", path.string(), "--jobs", "2",
                     "--out", (dir / "cli").string()})
                .code,
            cli::kExitOk);
  const auto plan = SweepPlan::load(path);
  write_sweep(dir / "lib", run_plan(plan, {}), "sweep");
  for (const auto& entry : fs::recursive_directory_iterator(dir / "lib")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "lib");
    EXPECT_EQ(read_file(entry.path()), read_file(dir / "cli" / rel)) << rel;
  }
}

TEST(Cli, TrainKeepsParameters) {
  const auto dir = testing::temp_dir("cli_train");
  json cfg = quick_training();
  cfg["lambda"] = 1.0;
  cfg["weights"] = {{"group.intersectional.outcome", 1}};
  const auto path = write_plan(dir, {{"dataset", toy_dataset_json()}, {"config", cfg}});
  ASSERT_EQ(run_cli({"--log-level", "off", "train", "--config", path.string(), "--out",
                     (dir / "out").string()})
                .code,
            cli::kExitOk);
  const auto frontier = json::parse(read_file(dir / "out" / "frontier.json"));
  ASSERT_EQ(frontier.size(), 1u);
  const std::string hash = frontier[0].at("config_hash");
  EXPECT_TRUE(fs::exists(dir / "out" / "models" / (hash + ".json")));
  EXPECT_TRUE(fs::exists(dir / "out" / "traces" / (hash + ".jsonl")));
}

TEST(Cli, SearchAndExport) {
  const auto dir = testing::temp_dir("cli_search");
  const auto path = write_plan(dir, sweep_plan());
  ASSERT_EQ(run_cli({"--log-level", "off", "sweep", "--plan", path.string(), "--out",
                     (dir / "sweep").string()})
                .code,
            cli::kExitOk);
  const auto frontier_path = dir / "sweep" / "frontier.json";
  const auto frontier = frontier_from_json(json::parse(read_file(frontier_path)));

  const auto r = run_cli({"--log-level", "off", "search", "--profile", "civil-rights",
                          "--frontier", frontier_path.string(), "--out", (dir / "pick").string()});
  ASSERT_EQ(r.code, cli::kExitOk);
  auto profile = *find_stakeholder("civil-rights");
  const auto [base, cands] = search_inputs(frontier);
  EXPECT_EQ(r.out, dump_json(stakeholder_search(profile, base, cands).to_json()));
  EXPECT_EQ(read_file(dir / "pick" / "selection.json"), r.out);

  // Profiles can also come from a file.
  json tight = profile.to_json();
  tight["accuracy_tolerance_pp"] = 1e-6;
  write_file(dir / "tight.json", tight.dump());
  const auto t = run_cli({"--log-level", "off", "search", "--profile",
                          (dir / "tight.json").string(), "--frontier", frontier_path.string()});
  ASSERT_EQ(t.code, cli::kExitOk);
  EXPECT_GE(json::parse(t.out).at("dev_accuracy").get<double>(), *base.dev_accuracy - 1e-8);

  ASSERT_EQ(run_cli({"--log-level", "off", "export", "--frontier", frontier_path.string(), "--out",
                     (dir / "export").string()})
                .code,
            cli::kExitOk);
  EXPECT_EQ(read_file(dir / "export" / "frontier.json"), read_file(frontier_path));
  const auto table = read_csv(dir / "export" / "frontier.csv");
  EXPECT_EQ(table.rows.size(), frontier.size());
  EXPECT_EQ(table.header.size(), 34u);
  EXPECT_EQ(table.header[8], "individual.infra_marginal.outcome");
}

TEST(Cli, DefaultOutputHonoursEnvironment) {
  const auto dir = testing::temp_dir("cli_env");
  const auto path = write_plan(dir, sweep_plan());
  ::setenv("FAIRFORGE_OUT", (dir / "root").c_str(), 1);
  const int code = run_cli({"--log-level", "off", "sweep", "--plan", path.string()}).code;
  ::unsetenv("FAIRFORGE_OUT");
  ASSERT_EQ(code, cli::kExitOk);
  std::vector<fs::path> made;
  for (const auto& e : fs::directory_iterator(dir / "root")) made.push_back(e.path());
  ASSERT_EQ(made.size(), 1u);
  EXPECT_EQ(made[0].filename().string().rfind("sweep-", 0), 0u);
  EXPECT_TRUE(fs::exists(made[0] / "frontier.json"));
}

}  // namespace
}  // namespace fairforge
