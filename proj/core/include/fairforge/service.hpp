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
#ifndef FAIRFORGE_SERVICE_HPP_
#define FAIRFORGE_SERVICE_HPP_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairforge/harness.hpp"

namespace fairforge {

enum class JobState { kQueued, kRunning, kDone, kFailed };

std::string_view to_string(JobState s);
JobState parse_job_state(std::string_view s);

struct JobRecord {
  std::string id;
  PlanKind kind = PlanKind::kTrain;
  JobState state = JobState::kQueued;
  double progress = 0.0;
  std::optional<std::string> result_ref;  // frontier path relative to the store
  std::optional<std::string> error;
  std::optional<std::string> idempotency_key;
  std::size_t total_points = 0;
  std::optional<nlohmann::json> selection;  // stakeholder_search only
  nlohmann::json plan;                      // normalised plan document

  nlohmann::json to_json() const;  // public view, without the plan
  nlohmann::json to_store_json() const;
  static JobRecord from_store_json(const nlohmann::json& j);
};

struct DatasetSummary {
  DatasetRef ref;
  std::size_t rows = 0;
  std::size_t dim = 0;
  ClassDistribution distribution;
  std::string privileged_label;
  std::string unprivileged_label;

  nlohmann::json to_json() const;
};

struct ServiceOptions {
  std::filesystem::path store_dir = "fairforge-store";
  std::filesystem::path registry_dir;  // empty: no datasets
  unsigned jobs = 1;                   // worker threads per job
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Job store, dataset registry and a single executor thread. All job-store
// mutations happen under one mutex and are persisted before it is released.
class JobService {
 public:
  explicit JobService(ServiceOptions options);
  ~JobService();
  JobService(const JobService&) = delete;
  JobService& operator=(const JobService&) = delete;

  const std::vector<DatasetSummary>& datasets() const { return datasets_; }
  // Registry files rejected at startup, with the reason.
  const std::vector<std::string>& registry_diagnostics() const { return diagnostics_; }

  // body: {kind, payload, idempotency_key?}. Returns the record and whether
  // it was newly created. Errors: kValidation.
  std::pair<JobRecord, bool> submit(const nlohmann::json& body);
  JobRecord get(const std::string& id) const;  // kNotFound
  // Raw frontier bytes as persisted by the harness. kNotFound, kNotReady.
  std::string frontier(const std::string& id) const;

  // Blocks until no job is queued or running.
  void wait_idle();

  // Transport-independent request router for the /v1 API.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  static nlohmann::json metric_descriptors();
  static nlohmann::json stakeholder_presets();

 private:
  void load_registry();
  void load_store();
  void persist(const JobRecord& rec);
  SweepPlan resolve_plan(PlanKind kind, const nlohmann::json& payload) const;
  void executor_loop(std::stop_token stop);
  void run_job(const std::string& id);

  ServiceOptions options_;
  std::vector<DatasetSummary> datasets_;
  std::vector<std::string> diagnostics_;

  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, JobRecord> jobs_;
  std::map<std::string, std::string> idempotency_;
  std::deque<std::string> queue_;
  std::uint64_t next_id_ = 1;
  bool busy_ = false;
  std::jthread executor_;
};

// Serves JobService over HTTP until stop() is called. Returns false if the
// socket could not be bound.
class HttpServer {
 public:
  explicit HttpServer(JobService& service);
  ~HttpServer();
  // port 0 binds an ephemeral port; bound_port() reports it once listening.
  bool bind(const std::string& host, int port);
  void listen_after_bind();  // blocks
  int bound_port() const { return port_; }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace fairforge

#endif  // FAIRFORGE_SERVICE_HPP_
