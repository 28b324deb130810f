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
#include "fairforge/service.hpp"

#include <filesystem>
#include <set>
#include <thread>

#include "gtest/gtest.h"
#include "httplib.h"
#include "fairforge/error.hpp"
#include "fairforge/util.hpp"
#include "test_util.hpp"

namespace fairforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json toy_ref() {
  return {{"name", "toy"},
          {"csv", (testing::data_dir() / "toy.csv").string()},
          {"schema", (testing::data_dir() / "toy.json").string()}};
}

fs::path make_registry(const std::string& name) {
  const auto dir = testing::temp_dir(name);
  write_file(dir / "toy.json", toy_ref().dump(2));
  return dir;
}

json sweep_body(std::vector<double> grid, int epochs = 20) {
  return {{"kind", "lambda_sweep"},
          {"payload",
           {{"dataset", "toy"},
            {"lambda_grid", grid},
            {"base_weights", {{"group.intersectional.outcome", 1}}},
            {"training", {{"epochs", epochs}, {"learning_rate", 1e-2}, {"hidden_units", 8}}}}}};
}

ServiceOptions options_for(const std::string& name, bool with_registry = true) {
  ServiceOptions o;
  o.store_dir = testing::temp_dir(name + "_store");
  if (with_registry) o.registry_dir = make_registry(name + "_registry");
  return o;
}

TEST(Service, EmptyRegistryListsNothing) {
  auto o = options_for("empty", false);
  JobService svc(o);
  const auto r = svc.handle("GET", "/v1/datasets", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(json::parse(r.body), json::array());
}

TEST(Service, DatasetSummaryMatchesIngest) {
  JobService svc(options_for("summary"));
  const auto r = json::parse(svc.handle("GET", "/v1/datasets", "").body);
  ASSERT_EQ(r.size(), 1u);
  const auto ref = DatasetRef::from_json(toy_ref(), {});
  const auto ds = ref.load_data();
  const auto dist = class_distribution(ds);
  EXPECT_EQ(r[0].at("name"), "toy");
  EXPECT_EQ(r[0].at("rows"), ds.size());
  EXPECT_EQ(r[0].at("dim"), ds.dim());
  EXPECT_EQ(r[0].at("group_counts").at("privileged"), dist.groups[0].total);
  EXPECT_EQ(r[0].at("group_counts").at("unprivileged"), dist.groups[1].total);
  EXPECT_EQ(r[0].at("class_distribution"), dist.to_json());
}

TEST(Service, MalformedRegistrationIsRejected) {
  auto o = options_for("malformed");
  write_file(o.registry_dir / "broken.json", "{ not json");
  write_file(o.registry_dir / "missing.json", json{{"name", "gone"}, {"csv", "/nonexistent.csv"},
                                                   {"schema", "/nonexistent.json"}}.dump());
  auto dup = toy_ref();
  write_file(o.registry_dir / "toy_copy.json", dup.dump());
  JobService svc(o);
  EXPECT_EQ(svc.datasets().size(), 1u);
  EXPECT_EQ(svc.registry_diagnostics().size(), 3u);
}

TEST(Service, MetricsAndStakeholders) {
  JobService svc(options_for("catalogue", false));
  const auto metrics = json::parse(svc.handle("GET", "/v1/metrics", "").body);
  ASSERT_EQ(metrics.size(), 8u);
  for (int m = 0; m < 8; ++m) {
    EXPECT_EQ(metrics[m].at("index"), m);
    EXPECT_EQ(metrics[m].at("id"), MetricSpec::from_index(m).id());
  }
  const auto people = json::parse(svc.handle("GET", "/v1/stakeholders", "").body);
  ASSERT_EQ(people.size(), 6u);
  for (const auto& p : people) {
    EXPECT_TRUE(p.contains("lambda"));
    EXPECT_EQ(p.at("weights").size(), 8u);
  }
}

TEST(Service, ValidationNamesTheField) {
  JobService svc(options_for("validation"));
  auto body = sweep_body({0.0, 1.0});
  body["payload"]["base_weights"] = std::vector<double>(7, 0.1);
  const auto r = svc.handle("POST", "/v1/jobs", body.dump());
  EXPECT_EQ(r.status, 400);
  const auto err = json::parse(r.body);
  EXPECT_EQ(err.at("code"), "validation_error");
  EXPECT_EQ(err.at("field"), "base_weights");

  EXPECT_EQ(svc.handle("POST", "/v1/jobs", "{oops").status, 400);
  body = sweep_body({0.0});
  body["payload"]["dataset"] = "unknown";
  EXPECT_EQ(json::parse(svc.handle("POST", "/v1/jobs", body.dump()).body).at("field"), "dataset");
  body = sweep_body({0.0});
  body["payload"]["dataset"] = {{"csv", "/nonexistent.csv"}, {"schema", "/nonexistent.json"}};
  EXPECT_EQ(json::parse(svc.handle("POST", "/v1/jobs", body.dump()).body).at("field"),
            "dataset.csv");
  body = sweep_body({0.0});
  body["extra"] = 1;
  EXPECT_EQ(json::parse(svc.handle("POST", "/v1/jobs", body.dump()).body).at("field"), "extra");
}

TEST(Service, IdempotencyKeyReturnsTheOriginalJob) {
  JobService svc(options_for("idempotent"));
  auto body = sweep_body({0.0});
  body["idempotency_key"] = "abc";
  const auto first = svc.handle("POST", "/v1/jobs", body.dump());
  const auto second = svc.handle("POST", "/v1/jobs", body.dump());
  EXPECT_EQ(first.status, 202);
  EXPECT_EQ(second.status, 200);
  EXPECT_EQ(json::parse(first.body).at("id"), json::parse(second.body).at("id"));
  svc.wait_idle();
  const auto third = svc.handle("POST", "/v1/jobs", sweep_body({0.0}).dump());
  EXPECT_EQ(json::parse(third.body).at("id"), "job-000002");
}

TEST(Service, UnknownIdsAndRoutes) {
  JobService svc(options_for("unknown", false));
  EXPECT_EQ(svc.handle("GET", "/v1/jobs/job-999999", "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/v1/jobs/job-999999/frontier", "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/v2/jobs", "").status, 404);
  EXPECT_EQ(svc.handle("DELETE", "/v1/metrics", "").status, 405);
  EXPECT_THROW(svc.get("job-1"), Error);
}

TEST(Service, FrontierIsNotReadyUntilDone) {
  JobService svc(options_for("notready"));
  const auto created = json::parse(svc.handle("POST", "/v1/jobs", sweep_body({0.0, 1.0}, 3000).dump()).body);
  const std::string id = created.at("id");
  EXPECT_EQ(created.at("state"), "queued");
  const auto r = svc.handle("GET", "/v1/jobs/" + id + "/frontier", "");
  ASSERT_EQ(r.status, 409);
  const auto body = json::parse(r.body);
  EXPECT_EQ(body.at("code"), "not_ready");
  EXPECT_TRUE(body.contains("progress"));
  EXPECT_TRUE(body.at("state") == "queued" || body.at("state") == "running");
  svc.wait_idle();
  EXPECT_EQ(svc.handle("GET", "/v1/jobs/" + id + "/frontier", "").status, 200);
}

TEST(Service, DoneSweepServesThePersistedFrontier) {
  auto o = options_for("done");
  JobService svc(o);
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  const auto [rec, created] = svc.submit(sweep_body(grid));
  ASSERT_TRUE(created);
  svc.wait_idle();
  const auto done = svc.get(rec.id);
  ASSERT_EQ(done.state, JobState::kDone) << done.error.value_or("");
  EXPECT_EQ(done.progress, 1.0);
  ASSERT_TRUE(done.result_ref.has_value());
  const auto bytes = svc.frontier(rec.id);
  EXPECT_EQ(bytes, read_file(o.store_dir / *done.result_ref));
  EXPECT_EQ(svc.handle("GET", "/v1/jobs/" + rec.id + "/frontier", "").body, bytes);
  EXPECT_EQ(json::parse(bytes).size(), grid.size());
  const auto pub = done.to_json();
  EXPECT_EQ(pub.at("kind"), "lambda_sweep");
  EXPECT_EQ(pub.at("state"), "done");
  EXPECT_FALSE(pub.contains("plan"));
}

TEST(Service, ConcurrentSubmissionsKeepResultsApart) {
  auto o = options_for("concurrent");
  o.jobs = 2;
  JobService svc(o);
  std::vector<std::vector<double>> grids{{0.0, 0.25}, {0.0, 0.75}, {0.0, 1.5}, {0.0, 3.0}};
  std::vector<std::string> ids(grids.size());
  std::vector<std::jthread> clients;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    clients.emplace_back([&, k] {
      const auto r = svc.handle("POST", "/v1/jobs", sweep_body(grids[k]).dump());
      ids[k] = json::parse(r.body).at("id");
    });
  }
  clients.clear();
  svc.wait_idle();
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), grids.size());
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const auto rec = svc.get(ids[k]);
    ASSERT_EQ(rec.state, JobState::kDone);
    const auto plan = SweepPlan::from_json(rec.plan, {});
    std::set<std::string> want;
    for (const auto& s : expand_plan(plan, plan.dataset.identity())) want.insert(s.config_hash);
    std::set<std::string> got;
    for (const auto& p : json::parse(svc.frontier(ids[k]))) got.insert(p.at("config_hash").get<std::string>());
    EXPECT_EQ(got, want);
    EXPECT_EQ(plan.lambda_grid.back(), grids[k].back());
  }
}

TEST(Service, StateSurvivesRestart) {
  auto o = options_for("restart");
  std::string id;
  std::string bytes;
  {
    JobService svc(o);
    id = svc.submit(sweep_body({0.0})).first.id;
    svc.wait_idle();
    bytes = svc.frontier(id);
  }
  // A record left running by a crash comes back failed.
  JobRecord stale;
  stale.id = "job-000002";
  stale.kind = PlanKind::kLambdaSweep;
  stale.state = JobState::kRunning;
  stale.plan = json::object();
  write_file(o.store_dir / "jobs" / "job-000002.json", stale.to_store_json().dump());

  JobService svc(o);
  EXPECT_EQ(svc.get(id).state, JobState::kDone);
  EXPECT_EQ(svc.frontier(id), bytes);
  const auto revived = svc.get("job-000002");
  EXPECT_EQ(revived.state, JobState::kFailed);
  EXPECT_TRUE(revived.error.has_value());
  EXPECT_EQ(svc.submit(sweep_body({0.0})).first.id, "job-000003");
  svc.wait_idle();
}

TEST(Service, StakeholderJobReportsSelection) {
  JobService svc(options_for("stakeholder"));
  json body = {{"kind", "stakeholder_search"},
               {"payload",
                {{"dataset", "toy"},
                 {"profile", "civil-rights"},
                 {"training", {{"epochs", 20}, {"learning_rate", 1e-2}, {"hidden_units", 8}}}}}};
  const auto id = svc.submit(body).first.id;
  svc.wait_idle();
  const auto rec = svc.get(id);
  ASSERT_EQ(rec.state, JobState::kDone) << rec.error.value_or("");
  ASSERT_TRUE(rec.selection.has_value());
  EXPECT_TRUE(rec.to_json().contains("selection"));
}

TEST(HttpServer, ServesTheRouterOverTcp) {
  JobService svc(options_for("http"));
  HttpServer server(svc);
  ASSERT_TRUE(server.bind("127.0.0.1", 0));
  ASSERT_GT(server.bound_port(), 0);
  std::jthread listener([&] { server.listen_after_bind(); });

  httplib::Client client("127.0.0.1", server.bound_port());
  auto metrics = client.Get("/v1/metrics");
  ASSERT_TRUE(metrics);
  EXPECT_EQ(metrics->status, 200);
  EXPECT_EQ(json::parse(metrics->body).size(), 8u);
  EXPECT_EQ(metrics->get_header_value("Access-Control-Allow-Origin"), "*");

  auto created = client.Post("/v1/jobs", sweep_body({0.0}).dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 202);
  const std::string id = json::parse(created->body).at("id");
  svc.wait_idle();
  auto frontier = client.Get("/v1/jobs/" + id + "/frontier");
  ASSERT_TRUE(frontier);
  EXPECT_EQ(frontier->status, 200);
  EXPECT_EQ(frontier->body, svc.frontier(id));

  auto missing = client.Get("/v1/jobs/job-424242");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto preflight = client.Options("/v1/jobs");
  ASSERT_TRUE(preflight);
  EXPECT_LT(preflight->status, 300);

  server.stop();
}

}  // namespace
}  // namespace fairforge
