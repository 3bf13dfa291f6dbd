// Copyright 2026 The Pilotlet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pilotlet/minicluster/rm_client.h"

#include "httplib.h"
#include "pilotlet/core/error.h"

namespace pilotlet::minicluster {

using nlohmann::json;

namespace {

std::chrono::microseconds ToMicros(double seconds) {
  return std::chrono::microseconds(static_cast<int64_t>(seconds * 1e6));
}

ContainerReport ContainerFromJson(const json &j) {
  ContainerReport c;
  c.id = j.at("id").get<std::string>();
  c.role = j.at("role").get<std::string>();
  c.state = j.at("state").get<std::string>();
  c.node = j.at("node").get<int64_t>();
  c.resource = {j.at("vcores").get<int64_t>(), j.at("memoryMB").get<int64_t>()};
  if (j.contains("exitCode") && !j["exitCode"].is_null()) c.exit_code = j["exitCode"].get<int>();
  c.allocated_us = j.value("allocatedMonoUs", int64_t{0});
  c.started_us = j.value("startedMonoUs", int64_t{0});
  c.released_us = j.value("releasedMonoUs", int64_t{0});
  return c;
}

}  // namespace

AppReport AppReportFromJson(const json &j) {
  AppReport r;
  r.id = j.at("id").get<std::string>();
  r.name = j.value("name", "");
  r.state = ParseAppState(j.at("state").get<std::string>());
  if (j.contains("exitCode") && !j["exitCode"].is_null()) r.exit_code = j["exitCode"].get<int>();
  r.log_path = j.value("logPath", "");
  if (j.contains("containers")) {
    for (const auto &c : j["containers"]) r.containers.push_back(ContainerFromJson(c));
  }
  r.submitted_us = j.value("submittedMonoUs", int64_t{0});
  r.finished_us = j.value("finishedMonoUs", int64_t{0});
  r.ledger_version = j.value("ledgerVersion", uint64_t{0});
  return r;
}

RmClient::RmClient(const std::string &endpoint, double timeout_s)
    : endpoint_(endpoint), client_(std::make_unique<httplib::Client>(endpoint)) {
  client_->set_connection_timeout(ToMicros(std::min(timeout_s, 5.0)));
  client_->set_read_timeout(ToMicros(timeout_s));
  client_->set_write_timeout(ToMicros(timeout_s));
}

RmClient::~RmClient() = default;

json RmClient::Request(const std::string &method, const std::string &path, const json *body) {
  httplib::Result res;
  std::string payload = body ? body->dump() : std::string();
  if (method == "GET") {
    res = client_->Get(path);
  } else if (method == "POST") {
    res = client_->Post(path, payload, "application/json");
  } else if (method == "PUT") {
    res = client_->Put(path, payload, "application/json");
  } else {
    throw Error(ErrorCode::kValidation, "unsupported method " + method);
  }
  if (!res) {
    throw Error(ErrorCode::kUnreachable,
                endpoint_ + path + ": " + httplib::to_string(res.error()));
  }
  json doc = json::parse(res->body, nullptr, false);
  if (res->status >= 400) {
    if (doc.is_object() && doc.contains("error")) {
      std::vector<std::string> details;
      if (doc.contains("details")) details = doc["details"].get<std::vector<std::string>>();
      throw Error(ErrorCodeFromString(doc["error"].get<std::string>()),
                  doc.value("message", res->body), std::move(details));
    }
    if (res->status == 503) return doc;
    throw Error(ErrorCode::kUnreachable,
                endpoint_ + path + ": HTTP " + std::to_string(res->status));
  }
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kMalformedInput, endpoint_ + path + ": response is not JSON");
  }
  return doc;
}

Health RmClient::GetHealth() {
  json j = Request("GET", "/ws/v1/cluster/health");
  Health h;
  h.ready = j.value("ready", false);
  h.flavor = ParseEnum<ClusterFlavor>(j.value("flavor", "YARN_LIKE")).value_or(ClusterFlavor::kYarnLike);
  h.active_nodes = j.value("activeNodes", int64_t{0});
  h.node_count = j.value("nodeCount", int64_t{0});
  h.pid = j.value("pid", int64_t{0});
  return h;
}

Metrics RmClient::GetMetrics() { return MetricsFromJson(Request("GET", "/ws/v1/cluster/metrics")); }

std::string RmClient::SubmitApp(const AppSpec &spec) {
  json body = spec;
  return Request("POST", "/ws/v1/cluster/apps", &body).at("id").get<std::string>();
}

AppReport RmClient::GetApp(const std::string &app_id, std::optional<uint64_t> after_version,
                           int wait_ms) {
  std::string path = "/ws/v1/cluster/apps/" + app_id;
  if (after_version) {
    path += "?after_version=" + std::to_string(*after_version) +
            "&timeout_ms=" + std::to_string(wait_ms);
  }
  return AppReportFromJson(Request("GET", path).at("app"));
}

std::vector<AppReport> RmClient::ListApps() {
  std::vector<AppReport> out;
  json doc = Request("GET", "/ws/v1/cluster/apps");
  for (const auto &a : doc.at("apps").at("app")) {
    out.push_back(AppReportFromJson(a));
  }
  return out;
}

AppState RmClient::KillApp(const std::string &app_id) {
  json body = {{"state", "KILLED"}};
  json j = Request("PUT", "/ws/v1/cluster/apps/" + app_id + "/state", &body);
  return ParseAppState(j.at("state").get<std::string>());
}

std::vector<JournalEntry> RmClient::Journal(uint64_t since) {
  json j = Request("GET", "/ws/v1/cluster/journal?since=" + std::to_string(since));
  return j.at("entries").get<std::vector<JournalEntry>>();
}

json RmClient::SparkStatus() { return Request("GET", "/json"); }

std::string RmClient::SparkSubmit(const AppSpec &spec) {
  json body = {{"appName", spec.name},
               {"cores", spec.task.resource.vcores},
               {"memoryMB", spec.task.resource.memory_mb},
               {"command", spec.task.command},
               {"environmentVariables", spec.task.env}};
  return Request("POST", "/v1/submissions/create", &body).at("submissionId").get<std::string>();
}

AppReport RmClient::SparkAppStatus(const std::string &app_id) {
  return AppReportFromJson(Request("GET", "/v1/submissions/status/" + app_id).at("app"));
}

AppState RmClient::SparkKill(const std::string &app_id) {
  json j = Request("POST", "/v1/submissions/kill/" + app_id);
  return ParseAppState(j.at("driverState").get<std::string>());
}

ContainerReport RmClient::RequestTaskContainer(const std::string &app_id) {
  return ContainerFromJson(Request("POST", "/ws/v1/cluster/apps/" + app_id + "/containers"));
}

void RmClient::Shutdown() { Request("POST", "/ws/v1/cluster/shutdown"); }

void RmClient::RegisterNode(int64_t node) {
  json body = {{"node", node}};
  Request("POST", "/ws/v1/node/register", &body);
}

std::vector<NodeCommand> RmClient::PollCommands(int64_t node, int wait_ms) {
  json j = Request("GET", "/ws/v1/node/" + std::to_string(node) +
                              "/commands?timeout_ms=" + std::to_string(wait_ms));
  return j.at("commands").get<std::vector<NodeCommand>>();
}

void RmClient::ReportContainer(int64_t node, const std::string &container_id, bool started,
                               int exit_code) {
  json body = {{"containerId", container_id},
               {"event", started ? "started" : "exited"},
               {"exitCode", exit_code}};
  Request("POST", "/ws/v1/node/" + std::to_string(node) + "/events", &body);
}

bool ProbeReady(const std::string &endpoint, double timeout_s) {
  try {
    RmClient client(endpoint, timeout_s);
    return client.GetHealth().ready;
  } catch (const Error &) {
    return false;
  }
}

}  // namespace pilotlet::minicluster
