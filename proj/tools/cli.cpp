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

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fairforge/dataset.hpp"
#include "fairforge/error.hpp"
#include "fairforge/harness.hpp"
#include "fairforge/service.hpp"
#include "fairforge/util.hpp"
#include "fairforge/version.hpp"

namespace fairforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string error_json;
  std::string log_level = "info";
  std::string out;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  // ingest
  std::string csv;
  std::string schema;
  std::uint64_t seed = 0;
  std::size_t max_rows = 0;

  // train / sweep / consensus
  std::string plan;

  // search / export
  std::string profile;
  std::string frontier;

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store = "fairforge-store";
  std::string registry;
};

// Output directory: --out, else <root>/<subcommand>-<key> where root is
// FAIRFORGE_OUT or "runs".
fs::path output_dir(const Options& o, std::string_view subcommand, std::string_view key) {
  if (!o.out.empty()) return o.out;
  const char* env = std::getenv("FAIRFORGE_OUT");
  const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
  return root / fmt::format("{}-{}", subcommand, hex64(fnv1a64(key)).substr(0, 8));
}

json manifest_base(std::string_view subcommand) {
  return json{{"format", "fairforge.manifest"},
              {"version", 1},
              {"tool", "fairforge"},
              {"tool_version", kVersion},
              {"subcommand", subcommand}};
}

int cmd_ingest(const Options& o) {
  const auto schema = DatasetSchema::load(o.schema);
  LoadOptions lo;
  lo.split_seed = o.seed;
  lo.max_rows = o.max_rows;
  const auto ds = load_dataset(o.csv, schema, lo);
  const fs::path out = output_dir(o, "ingest", file_fingerprint(o.csv) + schema.to_json().dump());
  fs::create_directories(out);
  write_file(out / "dataset.json", dump_json(ds.to_json()));
  const json dist = class_distribution(ds).to_json();
  write_file(out / "class_distribution.json", dump_json(dist));
  json m = manifest_base("ingest");
  m["rerun"] = fmt::format("fairforge ingest --csv <csv> --schema <schema> --seed {} --max-rows {}",
                           o.seed, o.max_rows);
  m["inputs"] = {{"csv_fingerprint", file_fingerprint(o.csv)},
                 {"schema", schema.to_json()},
                 {"split_seed", o.seed},
                 {"max_rows", o.max_rows}};
  m["outputs"] = {"dataset.json", "class_distribution.json"};
  write_file(out / "manifest.json", dump_json(m));
  std::cout << dump_json(dist);
  spdlog::info("wrote {} rows x {} features to {}", ds.size(), ds.dim(), out.string());
  return kExitOk;
}

int cmd_plan(const Options& o, std::string_view subcommand, std::optional<PlanKind> implied,
             std::initializer_list<PlanKind> allowed) {
  const SweepPlan plan = SweepPlan::load(o.plan, implied);
  if (std::find(allowed.begin(), allowed.end(), plan.kind) == allowed.end()) {
    throw Error(ErrorCode::kValidation,
                fmt::format("'{}' does not accept {} plans", subcommand, to_string(plan.kind)), "kind");
  }
  ExecuteOptions opts;
  opts.jobs = o.jobs;
  opts.keep_params = plan.kind == PlanKind::kTrain;
  const auto result = run_plan(plan, opts);
  const fs::path out = output_dir(o, subcommand, plan.to_json().dump());
  write_sweep(out, result, subcommand);
  std::size_t failed = 0;
  for (const auto& p : result.frontier) failed += p.failure.has_value();
  spdlog::info("{} points ({} failed) written to {}", result.frontier.size(), failed, out.string());
  if (result.selection_error) spdlog::warn("stakeholder search: {}", *result.selection_error);
  return kExitOk;
}

StakeholderProfile load_profile(const std::string& arg) {
  if (const auto* preset = find_stakeholder(arg)) return *preset;
  if (!fs::is_regular_file(arg)) {
    throw Error(ErrorCode::kValidation,
                fmt::format("'{}' is neither a preset name nor a profile file", arg), "profile");
  }
  try {
    return StakeholderProfile::from_json(json::parse(read_file(arg)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", arg, e.what()));
  }
}

std::vector<FrontierPoint> load_frontier(const std::string& path) {
  try {
    return frontier_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", path, e.what()));
  }
}

int cmd_search(const Options& o) {
  const auto profile = load_profile(o.profile);
  const auto frontier = load_frontier(o.frontier);
  const auto [baseline, candidates] = search_inputs(frontier);
  const auto selected = stakeholder_search(profile, baseline, candidates);
  const std::string text = dump_json(selected.to_json());
  std::cout << text;
  if (!o.out.empty()) {
    const fs::path out = o.out;
    fs::create_directories(out);
    write_file(out / "selection.json", text);
    json m = manifest_base("search");
    m["rerun"] = "fairforge search --profile <profile> --frontier <frontier>";
    m["inputs"] = {{"profile", profile.to_json()},
                   {"frontier_fingerprint", file_fingerprint(o.frontier)}};
    m["outputs"] = {"selection.json"};
    write_file(out / "manifest.json", dump_json(m));
  }
  return kExitOk;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

std::string frontier_csv(const std::vector<FrontierPoint>& points) {
  std::vector<std::string> header = {"config_hash", "label", "lambda", "alpha", "seed",
                                     "aggregate",   "split", "test_accuracy"};
  for (const auto& s : all_metrics()) header.push_back(s.id());
  header.push_back("dev_accuracy");
  for (const auto& s : all_metrics()) header.push_back("dev:" + s.id());
  for (const auto& s : all_metrics()) header.push_back("weight:" + s.id());
  header.push_back("failure");
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& p : points) {
    std::vector<std::string> row = {p.config_hash,
                                    csv_field(p.label.value_or("")),
                                    fmt::format("{}", p.lambda),
                                    csv_number(p.alpha),
                                    p.seed ? std::to_string(*p.seed) : "",
                                    p.aggregate ? "true" : "false",
                                    p.split,
                                    csv_number(p.test_accuracy)};
    for (const auto& v : p.metric_values) row.push_back(csv_number(v));
    row.push_back(csv_number(p.dev_accuracy));
    for (const auto& v : p.dev_metric_values) row.push_back(csv_number(v));
    for (double w : p.weights) row.push_back(fmt::format("{}", w));
    row.push_back(csv_field(p.failure.value_or("")));
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += '\n';
  }
  return out;
}

int cmd_export(const Options& o) {
  const auto points = load_frontier(o.frontier);
  const fs::path out = output_dir(o, "export", file_fingerprint(o.frontier));
  fs::create_directories(out);
  write_file(out / "frontier.json", read_file(o.frontier));
  write_file(out / "frontier.csv", frontier_csv(points));
  json m = manifest_base("export");
  m["rerun"] = "fairforge export --frontier <frontier>";
  m["inputs"] = {{"frontier_fingerprint", file_fingerprint(o.frontier)}};
  m["outputs"] = {"frontier.json", "frontier.csv"};
  write_file(out / "manifest.json", dump_json(m));
  spdlog::info("exported {} points to {}", points.size(), out.string());
  return kExitOk;
}

int cmd_serve(const Options& o) {
  ServiceOptions so;
  so.store_dir = o.store;
  so.registry_dir = o.registry;
  so.jobs = o.jobs;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  JobService service(so);
  HttpServer server(service);
  if (!server.bind(o.host, o.port)) {
    throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", o.host, o.port));
  }
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    server.stop();
  });
  spdlog::info("serving {} datasets on http://{}:{}/v1", service.datasets().size(), o.host,
               server.bound_port());
  server.listen_after_bind();
  // Wake the waiter if the server stopped for another reason.
  pthread_kill(waiter.native_handle(), SIGTERM);
  return kExitOk;
}

void write_error_json(const std::string& path, std::string_view code, std::string_view message,
                      std::string_view field) {
  if (path.empty()) return;
  json j{{"code", code}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  try {
    write_file(path, dump_json(j));
  } catch (const std::exception& e) {
    std::cerr << "fairforge: cannot write error file: " << e.what() << "\n";
  }
}

int report(const Options& o, int exit_code, std::string_view code, std::string_view message,
           std::string_view field = {}) {
  if (field.empty()) {
    std::cerr << fmt::format("fairforge: {}: {}\n", code, message);
  } else {
    std::cerr << fmt::format("fairforge: {}: {} (field: {})\n", code, message, field);
  }
  write_error_json(o.error_json, code, message, field);
  return exit_code;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"fairforge: fairness-regularised training, sweeps and stakeholder search"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  app.add_option("--error-json", o.error_json, "Also write failures as JSON to this file");
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off");

  auto* ingest = app.add_subcommand("ingest", "Load a CSV, encode and split it");
  ingest->add_option("--csv", o.csv, "Input CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", o.schema, "Dataset schema JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--seed", o.seed, "Split seed");
  ingest->add_option("--max-rows", o.max_rows, "Stratified subsample size (0 keeps all rows)");
  ingest->add_option("--out", o.out, "Output directory");

  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("--plan,--config", o.plan, "Train plan JSON ({dataset, config})")
      ->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run a lambda or alpha sweep plan");
  sweep->add_option("--plan", o.plan, "Sweep plan JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out, "Output directory");
  sweep->add_option("--jobs", o.jobs, "Concurrent training runs")->check(CLI::PositiveNumber);

  auto* consensus = app.add_subcommand("consensus", "Run a two-stakeholder consensus sweep");
  consensus->add_option("--plan", o.plan, "Consensus plan JSON")->required()->check(CLI::ExistingFile);
  consensus->add_option("--out", o.out, "Output directory");
  consensus->add_option("--jobs", o.jobs, "Concurrent training runs")->check(CLI::PositiveNumber);

  auto* search = app.add_subcommand("search", "Pick a stakeholder's configuration from a frontier");
  search->add_option("--profile", o.profile, "Profile JSON file or preset name")->required();
  search->add_option("--frontier", o.frontier, "frontier.json")->required()->check(CLI::ExistingFile);
  search->add_option("--out", o.out, "Also write selection.json and a manifest here");

  auto* exp = app.add_subcommand("export", "Write a frontier as JSON and CSV");
  exp->add_option("--frontier", o.frontier, "frontier.json")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", o.out, "Output directory");

  auto* serve = app.add_subcommand("serve", "Serve the /v1 HTTP API");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port", o.port, "Port (0 picks a free one)");
  serve->add_option("--store", o.store, "Job store directory");
  serve->add_option("--registry", o.registry, "Directory of dataset registrations");
  serve->add_option("--jobs", o.jobs, "Concurrent training runs per job")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(o, kExitValidation, "usage_error", e.what());
  }

  // Logs go to stderr so stdout carries only JSON results.
  static const auto logger = spdlog::stderr_color_mt("fairforge");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    if (*ingest) return cmd_ingest(o);
    if (*train) return cmd_plan(o, "train", PlanKind::kTrain, {PlanKind::kTrain});
    if (*sweep) {
      return cmd_plan(o, "sweep", std::nullopt,
                      {PlanKind::kLambdaSweep, PlanKind::kAlphaSweep, PlanKind::kStakeholderSearch});
    }
    if (*consensus) {
      return cmd_plan(o, "consensus", PlanKind::kConsensusSweep, {PlanKind::kConsensusSweep});
    }
    if (*search) return cmd_search(o);
    if (*exp) return cmd_export(o);
    if (*serve) return cmd_serve(o);
  } catch (const Error& e) {
    return report(o, is_validation_error(e.code()) ? kExitValidation : kExitRuntime,
                  to_string(e.code()), e.what(), e.field());
  } catch (const std::exception& e) {
    return report(o, kExitRuntime, "runtime_error", e.what());
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace fairforge::cli
