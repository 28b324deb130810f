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

#include <algorithm>
#include <charconv>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "fairforge/error.hpp"
#include "fairforge/util.hpp"

namespace fairforge {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::kQueued: return "queued";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "queued";
}

JobState parse_job_state(std::string_view s) {
  for (auto st : {JobState::kQueued, JobState::kRunning, JobState::kDone, JobState::kFailed}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::kParse, fmt::format("unknown job state '{}'", s));
}

namespace {

json opt_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> string_or_null(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

json JobRecord::to_json() const {
  json j{{"id", id},
         {"kind", to_string(kind)},
         {"state", to_string(state)},
         {"progress", progress},
         {"result_ref", opt_string(result_ref)},
         {"error", opt_string(error)},
         {"idempotency_key", opt_string(idempotency_key)},
         {"total_points", total_points}};
  if (selection) j["selection"] = *selection;
  return j;
}

json JobRecord::to_store_json() const {
  json j = to_json();
  j["plan"] = plan;
  return j;
}

JobRecord JobRecord::from_store_json(const json& j) {
  JobRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.kind = parse_plan_kind(j.at("kind").get<std::string>());
    r.state = parse_job_state(j.at("state").get<std::string>());
    r.progress = j.value("progress", 0.0);
    r.result_ref = string_or_null(j, "result_ref");
    r.error = string_or_null(j, "error");
    r.idempotency_key = string_or_null(j, "idempotency_key");
    r.total_points = j.value("total_points", std::size_t{0});
    if (j.contains("selection")) r.selection = j.at("selection");
    r.plan = j.at("plan");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("bad job record: {}", e.what()));
  }
  return r;
}

json DatasetSummary::to_json() const {
  const auto& g = distribution.groups;
  return json{{"name", ref.name},
              {"rows", rows},
              {"dim", dim},
              {"group_counts",
               {{"privileged", g[0].total}, {"unprivileged", g[1].total}}},
              {"privileged_label", privileged_label},
              {"unprivileged_label", unprivileged_label},
              {"class_distribution", distribution.to_json()},
              {"split_seed", ref.load.split_seed},
              {"max_rows", ref.load.max_rows}};
}

// ---------------------------------------------------------------------------

JobService::JobService(ServiceOptions options) : options_(std::move(options)) {
  fs::create_directories(options_.store_dir / "jobs");
  fs::create_directories(options_.store_dir / "results");
  load_registry();
  load_store();
  executor_ = std::jthread([this](std::stop_token st) { executor_loop(st); });
}

JobService::~JobService() {
  executor_.request_stop();
  cv_.notify_all();
}

void JobService::load_registry() {
  if (options_.registry_dir.empty()) return;
  if (!fs::is_directory(options_.registry_dir)) {
    diagnostics_.push_back(fmt::format("{}: registry directory not found",
                                       options_.registry_dir.string()));
    spdlog::error("{}", diagnostics_.back());
    return;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(options_.registry_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      json j;
      try {
        j = json::parse(read_file(f));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, e.what());
      }
      DatasetSummary s;
      s.ref = DatasetRef::from_json(j, f.parent_path());
      if (std::any_of(datasets_.begin(), datasets_.end(),
                      [&](const auto& d) { return d.ref.name == s.ref.name; })) {
        throw Error(ErrorCode::kValidation, fmt::format("duplicate dataset name '{}'", s.ref.name));
      }
      const auto ds = s.ref.load_data();
      s.rows = ds.size();
      s.dim = ds.dim();
      s.distribution = class_distribution(ds);
      s.privileged_label = ds.privileged_label;
      s.unprivileged_label = ds.unprivileged_label;
      datasets_.push_back(std::move(s));
    } catch (const std::exception& e) {
      diagnostics_.push_back(fmt::format("{}: {}", f.filename().string(), e.what()));
      spdlog::error("rejected dataset registration {}", diagnostics_.back());
    }
  }
}

void JobService::load_store() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(options_.store_dir / "jobs")) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    JobRecord rec;
    try {
      rec = JobRecord::from_store_json(json::parse(read_file(f)));
    } catch (const std::exception& e) {
      spdlog::error("skipping unreadable job file {}: {}", f.string(), e.what());
      continue;
    }
    if (rec.state == JobState::kRunning) {
      rec.state = JobState::kFailed;
      rec.error = "interrupted by a service restart";
      persist(rec);
    } else if (rec.state == JobState::kQueued) {
      queue_.push_back(rec.id);
    }
    const auto dash = rec.id.rfind('-');
    std::uint64_t n = 0;
    if (dash != std::string::npos) {
      std::from_chars(rec.id.data() + dash + 1, rec.id.data() + rec.id.size(), n);
    }
    next_id_ = std::max(next_id_, n + 1);
    if (rec.idempotency_key) idempotency_[*rec.idempotency_key] = rec.id;
    jobs_[rec.id] = std::move(rec);
  }
}

void JobService::persist(const JobRecord& rec) {
  write_file(options_.store_dir / "jobs" / (rec.id + ".json"), dump_json(rec.to_store_json()));
}

SweepPlan JobService::resolve_plan(PlanKind kind, const json& payload) const {
  if (!payload.is_object()) throw Error(ErrorCode::kValidation, "payload must be an object", "payload");
  json p = payload;
  p["kind"] = to_string(kind);
  if (p.contains("dataset") && p.at("dataset").is_string()) {
    const auto name = p.at("dataset").get<std::string>();
    const auto it = std::find_if(datasets_.begin(), datasets_.end(),
                                 [&](const auto& d) { return d.ref.name == name; });
    if (it == datasets_.end()) {
      throw Error(ErrorCode::kValidation, fmt::format("unknown dataset '{}'", name), "dataset");
    }
    p["dataset"] = it->ref.to_json();
  }
  auto plan = SweepPlan::from_json(p, fs::current_path());
  if (!fs::is_regular_file(plan.dataset.csv)) {
    throw Error(ErrorCode::kValidation, "dataset csv not found", "dataset.csv");
  }
  if (!fs::is_regular_file(plan.dataset.schema)) {
    throw Error(ErrorCode::kValidation, "dataset schema not found", "dataset.schema");
  }
  return plan;
}

std::pair<JobRecord, bool> JobService::submit(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kValidation, "request body must be an object");
  for (const auto& [key, _] : body.items()) {
    if (key != "kind" && key != "payload" && key != "idempotency_key") {
      throw Error(ErrorCode::kValidation, fmt::format("unknown field '{}'", key), key);
    }
  }
  if (!body.contains("kind") || !body.at("kind").is_string()) {
    throw Error(ErrorCode::kValidation, "kind must be a string", "kind");
  }
  std::optional<std::string> key;
  if (body.contains("idempotency_key") && !body.at("idempotency_key").is_null()) {
    if (!body.at("idempotency_key").is_string()) {
      throw Error(ErrorCode::kValidation, "idempotency_key must be a string", "idempotency_key");
    }
    key = body.at("idempotency_key").get<std::string>();
    std::lock_guard lock(mu_);
    if (auto it = idempotency_.find(*key); it != idempotency_.end()) {
      return {jobs_.at(it->second), false};
    }
  }
  const PlanKind kind = parse_plan_kind(body.at("kind").get<std::string>());
  if (!body.contains("payload")) throw Error(ErrorCode::kValidation, "payload is required", "payload");
  const SweepPlan plan = resolve_plan(kind, body.at("payload"));
  const std::size_t total = expand_plan(plan, json::object()).size();

  std::lock_guard lock(mu_);
  if (key) {
    if (auto it = idempotency_.find(*key); it != idempotency_.end()) {
      return {jobs_.at(it->second), false};
    }
  }
  JobRecord rec;
  rec.id = fmt::format("job-{:06d}", next_id_++);
  rec.kind = kind;
  rec.idempotency_key = key;
  rec.total_points = total;
  rec.plan = plan.to_json();
  persist(rec);
  if (key) idempotency_[*key] = rec.id;
  jobs_[rec.id] = rec;
  queue_.push_back(rec.id);
  cv_.notify_all();
  return {rec, true};
}

JobRecord JobService::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::kNotFound, fmt::format("no job '{}'", id), "id");
  return it->second;
}

std::string JobService::frontier(const std::string& id) const {
  const JobRecord rec = get(id);
  if (rec.state != JobState::kDone || !rec.result_ref) {
    throw Error(ErrorCode::kNotReady,
                fmt::format("job {} is {} (progress {:.3f})", id, to_string(rec.state), rec.progress));
  }
  return read_file(options_.store_dir / *rec.result_ref);
}

void JobService::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void JobService::executor_loop(std::stop_token stop) {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      if (!cv_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      id = queue_.front();
      queue_.pop_front();
      busy_ = true;
    }
    run_job(id);
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void JobService::run_job(const std::string& id) {
  json plan_json;
  PlanKind kind;
  {
    std::lock_guard lock(mu_);
    auto& rec = jobs_.at(id);
    rec.state = JobState::kRunning;
    rec.progress = 0.0;
    persist(rec);
    plan_json = rec.plan;
    kind = rec.kind;
  }
  const std::string rel = "results/" + id;
  try {
    const SweepPlan plan = SweepPlan::from_json(plan_json, {});
    ExecuteOptions opts;
    opts.jobs = options_.jobs;
    opts.progress = [&](std::size_t done, std::size_t total) {
      std::lock_guard lock(mu_);
      auto& rec = jobs_.at(id);
      rec.progress = static_cast<double>(done) / static_cast<double>(total);
      persist(rec);
    };
    const auto result = run_plan(plan, opts);
    write_sweep(options_.store_dir / rel, result, to_string(kind));
    std::lock_guard lock(mu_);
    auto& rec = jobs_.at(id);
    rec.state = JobState::kDone;
    rec.progress = 1.0;
    rec.result_ref = rel + "/frontier.json";
    if (kind == PlanKind::kStakeholderSearch) {
      rec.selection = json::parse(read_file(options_.store_dir / rel / "selection.json"));
    }
    persist(rec);
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    auto& rec = jobs_.at(id);
    rec.state = JobState::kFailed;
    rec.error = e.what();
    persist(rec);
    spdlog::error("job {} failed: {}", id, e.what());
  }
}

// ---------------------------------------------------------------------------

json JobService::metric_descriptors() {
  struct Text {
    const char* title;
    const char* description;
  };
  static const Text texts[kNumMetrics] = {
      {"Similar people, all decisions",
       "Each person in the smaller group is paired with the most similar person in the other "
       "group by fair-risk score. Compares how likely each member of a pair is to get a "
       "positive prediction."},
      {"Similar people, qualified cases",
       "Same pairing of similar people, but only among those whose true outcome is positive. "
       "Asks whether equally qualified people are treated alike."},
      {"Similar standing, all decisions",
       "Pairs people after removing the average score gap between groups, so each person is "
       "compared with someone holding the same relative standing in the other group."},
      {"Similar standing, qualified cases",
       "Relative-standing pairing restricted to people whose true outcome is positive."},
      {"Matched group rates, all decisions",
       "Compares the average positive-prediction rate of the smaller group with the average "
       "over its matched counterparts in the other group."},
      {"Matched group rates, qualified cases",
       "Matched group comparison restricted to people whose true outcome is positive."},
      {"Group rates, all decisions",
       "Compares the average positive-prediction rate of the two groups as a whole, without "
       "adjusting for differences in recorded risk."},
      {"Group rates, qualified cases",
       "Compares the positive-prediction rate of the two groups among people whose true "
       "outcome is positive."},
  };
  json out = json::array();
  for (const auto& spec : all_metrics()) {
    const auto& t = texts[spec.index()];
    out.push_back(json{{"id", spec.id()},
                       {"index", spec.index()},
                       {"granularity", to_string(spec.granularity)},
                       {"stance", to_string(spec.stance)},
                       {"regime", to_string(spec.regime)},
                       {"title", t.title},
                       {"description", t.description},
                       {"range", "0 to 1; 1 means the compared rates are equal"}});
  }
  return out;
}

json JobService::stakeholder_presets() {
  json out = json::array();
  for (const auto& p : builtin_stakeholders()) {
    json j = p.to_json();
    j["lambda"] = p.lambda_candidates.back();
    j["weights"] = weights_to_json(p.weight_candidates.front());
    out.push_back(std::move(j));
  }
  return out;
}

namespace {

int status_for(ErrorCode code) {
  if (is_validation_error(code)) return 400;
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kNotReady: return 409;
    case ErrorCode::kNoFeasibleCandidate: return 422;
    default: return 500;
  }
}

HttpResponse error_response(int status, std::string_view code, std::string_view message,
                            std::string_view field = {}, json extra = json::object()) {
  json j{{"code", code}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  for (auto& [k, v] : extra.items()) j[k] = v;
  return {status, j.dump(), "application/json"};
}

HttpResponse ok(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

}  // namespace

HttpResponse JobService::handle(std::string_view method, std::string_view path,
                                std::string_view body) {
  std::vector<std::string_view> parts;
  for (std::size_t pos = 0; pos <= path.size();) {
    const std::size_t next = std::min(path.find('/', pos), path.size());
    if (next > pos) parts.push_back(path.substr(pos, next - pos));
    pos = next + 1;
  }
  const bool is_get = method == "GET";
  const bool post = method == "POST";
  auto wrong_method = [&] { return error_response(405, "method_not_allowed", "method not allowed"); };
  try {
    if (parts.size() < 2 || parts[0] != "v1") {
      return error_response(404, "not_found", fmt::format("no route for {}", path));
    }
    const auto resource = parts[1];
    if (resource == "datasets" && parts.size() == 2) {
      if (!is_get) return wrong_method();
      json arr = json::array();
      for (const auto& d : datasets_) arr.push_back(d.to_json());
      return ok(arr);
    }
    if (resource == "metrics" && parts.size() == 2) {
      if (!is_get) return wrong_method();
      return ok(metric_descriptors());
    }
    if (resource == "stakeholders" && parts.size() == 2) {
      if (!is_get) return wrong_method();
      return ok(stakeholder_presets());
    }
    if (resource == "jobs" && parts.size() == 2) {
      if (!post) return wrong_method();
      json parsed;
      try {
        parsed = json::parse(body);
      } catch (const json::exception& e) {
        return error_response(400, to_string(ErrorCode::kParse), e.what());
      }
      auto [rec, created] = submit(parsed);
      return ok(rec.to_json(), created ? 202 : 200);
    }
    if (resource == "jobs" && parts.size() == 3) {
      if (!is_get) return wrong_method();
      return ok(get(std::string(parts[2])).to_json());
    }
    if (resource == "jobs" && parts.size() == 4 && parts[3] == "frontier") {
      if (!is_get) return wrong_method();
      const std::string id(parts[2]);
      try {
        return {200, frontier(id), "application/json"};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotReady) throw;
        const auto rec = get(id);
        return error_response(409, to_string(e.code()), e.what(), {},
                              json{{"state", to_string(rec.state)}, {"progress", rec.progress},
                                   {"error", opt_string(rec.error)}});
      }
    }
    return error_response(404, "not_found", fmt::format("no route for {}", path));
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what(), e.field());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(JobService& service) : impl_(std::make_unique<Impl>()) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type.c_str());
    res.set_header("Access-Control-Allow-Origin", "*");
  };
  impl_->server.Get(".*", forward);
  impl_->server.Post(".*", forward);
  impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

void HttpServer::listen_after_bind() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace fairforge
