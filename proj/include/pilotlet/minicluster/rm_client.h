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

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilotlet/minicluster/ledger.h"

namespace httplib {
class Client;
}

namespace pilotlet::minicluster {

struct ContainerReport {
  std::string id;
  std::string role;
  std::string state;
  int64_t node = 0;
  Resource resource;
  std::optional<int> exit_code;
  int64_t allocated_us = 0;
  int64_t started_us = 0;
  int64_t released_us = 0;
};

struct AppReport {
  std::string id;
  std::string name;
  AppState state = AppState::kSubmitted;
  std::optional<int> exit_code;
  std::string log_path;
  std::vector<ContainerReport> containers;
  int64_t submitted_us = 0;
  int64_t finished_us = 0;
  uint64_t ledger_version = 0;
};

AppReport AppReportFromJson(const nlohmann::json &j);

struct Health {
  bool ready = false;
  ClusterFlavor flavor = ClusterFlavor::kYarnLike;
  int64_t active_nodes = 0;
  int64_t node_count = 0;
  int64_t pid = 0;
};

/// HTTP client for a running resource manager. Connection failures throw
/// kUnreachable; error responses rethrow the server's error code.
class RmClient {
 public:
  /// `endpoint` is "http://host:port".
  explicit RmClient(const std::string &endpoint, double timeout_s = 30);
  ~RmClient();

  const std::string &endpoint() const { return endpoint_; }

  Health GetHealth();
  Metrics GetMetrics();
  std::string SubmitApp(const AppSpec &spec);
  /// With `after_version`, waits up to `wait_ms` for the ledger to move past
  /// it before answering.
  AppReport GetApp(const std::string &app_id, std::optional<uint64_t> after_version = std::nullopt,
                   int wait_ms = 0);
  std::vector<AppReport> ListApps();
  /// Blocks until the app is terminal; returns its final state.
  AppState KillApp(const std::string &app_id);
  std::vector<JournalEntry> Journal(uint64_t since = 0);
  /// Spark-style status document from /json.
  nlohmann::json SparkStatus();
  std::string SparkSubmit(const AppSpec &spec);
  AppReport SparkAppStatus(const std::string &app_id);
  AppState SparkKill(const std::string &app_id);
  /// Container request from an application master.
  ContainerReport RequestTaskContainer(const std::string &app_id);
  void Shutdown();

  // Node-manager protocol.
  void RegisterNode(int64_t node);
  std::vector<NodeCommand> PollCommands(int64_t node, int wait_ms);
  void ReportContainer(int64_t node, const std::string &container_id, bool started, int exit_code);

 private:
  nlohmann::json Request(const std::string &method, const std::string &path,
                         const nlohmann::json *body = nullptr);

  std::string endpoint_;
  std::unique_ptr<httplib::Client> client_;
};

/// True if the endpoint answers its health check as ready.
bool ProbeReady(const std::string &endpoint, double timeout_s = 1.0);

}  // namespace pilotlet::minicluster
