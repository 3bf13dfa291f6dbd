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

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilotlet/minicluster/config.h"

namespace pilotlet::minicluster {

struct Resource {
  int64_t vcores = 0;
  int64_t memory_mb = 0;

  Resource &operator+=(const Resource &o) {
    vcores += o.vcores;
    memory_mb += o.memory_mb;
    return *this;
  }
  Resource &operator-=(const Resource &o) {
    vcores -= o.vcores;
    memory_mb -= o.memory_mb;
    return *this;
  }
  bool Fits(const Resource &need) const {
    return need.vcores <= vcores && need.memory_mb <= memory_mb;
  }
  bool operator==(const Resource &) const = default;
};

inline Resource operator-(Resource a, const Resource &b) { return a -= b; }
inline Resource operator+(Resource a, const Resource &b) { return a += b; }

struct NodeState {
  int64_t index = 0;
  std::string hostname;
  Resource capacity;
  Resource allocated;
  /// Held for a YARN task container that the AM has not requested yet.
  Resource reserved;
  bool registered = false;

  Resource Free() const { return capacity - allocated - reserved; }
};

enum class ContainerRole { kAm, kTask, kExecutor };
enum class ContainerState { kAllocated, kRunning, kReleased };
enum class AppState { kSubmitted, kAmAllocated, kRunning, kFinished, kFailed, kKilled };

std::string_view ToString(ContainerRole r);
std::string_view ToString(ContainerState s);
std::string_view ToString(AppState s);
AppState ParseAppState(std::string_view s);
bool IsTerminal(AppState s);

struct Container {
  std::string id;
  std::string app_id;
  int64_t node = 0;
  Resource resource;
  ContainerRole role = ContainerRole::kTask;
  ContainerState state = ContainerState::kAllocated;
  /// Executor containers of a Spark-like app other than the first hold cores
  /// but run nothing.
  bool has_process = true;
  std::optional<int> exit_code;
  int64_t allocated_us = 0;
  int64_t started_us = 0;
  int64_t released_us = 0;
};

struct ContainerSpec {
  Resource resource;
  std::vector<std::string> command;
  std::map<std::string, std::string> env;
};

/// YARN-like: an AM container, then one task container running
/// `task.command`. Spark-like: `task.resource.vcores` cores bound across
/// workers and `task.command` run once; `am` is ignored.
struct AppSpec {
  std::string name;
  ContainerSpec am;
  ContainerSpec task;
};

struct App {
  std::string id;
  std::string name;
  AppState state = AppState::kSubmitted;
  AppSpec spec;
  std::optional<std::string> am_container;
  std::vector<std::string> containers;
  std::optional<int64_t> reserved_node;
  std::optional<int> exit_code;
  bool kill_requested = false;
  std::filesystem::path log_path;
  int64_t submitted_us = 0;
  int64_t finished_us = 0;
};

/// One ledger mutation. `allocated_after` is the cluster-wide allocation
/// once the entry is applied.
struct JournalEntry {
  uint64_t version = 0;
  int64_t mono_us = 0;
  std::string kind;
  std::string app_id;
  std::string container_id;
  std::string role;
  int64_t node = -1;
  Resource resource;
  Resource allocated_after;
  std::string detail;
};

struct Metrics {
  Resource total;
  Resource allocated;
  Resource reserved;
  Resource pending;
  Resource available;
  int64_t apps_submitted = 0;
  int64_t apps_pending = 0;
  int64_t apps_running = 0;
  int64_t apps_completed = 0;
  int64_t apps_failed = 0;
  int64_t apps_killed = 0;
  int64_t active_nodes = 0;
  int64_t node_count = 0;
  int64_t containers_allocated = 0;
  uint64_t version = 0;
};

struct LaunchCommand {
  std::string container_id;
  std::vector<std::string> argv;
  std::map<std::string, std::string> env;
  std::string stdout_path;
  std::string stderr_path;
  std::string cwd;
};

struct NodeCommand {
  enum class Op { kLaunch, kKill, kShutdown };
  Op op = Op::kLaunch;
  LaunchCommand launch;
  std::string container_id;
};

/// The resource manager's state machine, free of I/O except app logs.
/// Not thread-safe; the server serializes access.
///
/// Scheduling is FIFO with first-fit by node index. A YARN-like app is
/// admitted only when both its AM container and its task container fit; the
/// AM container is allocated and the task's share is reserved on its node
/// until the AM asks for it.
class Ledger {
 public:
  /// `am_command` is the argv prefix for AM containers; "--rm <url>
  /// --app-id <id>" is appended.
  Ledger(ClusterConfig config, std::filesystem::path scratch_dir,
         std::vector<std::string> am_command, std::string rm_url);

  ClusterFlavor flavor() const { return config_.flavor; }
  const ClusterConfig &config() const { return config_; }

  void RegisterNode(int64_t index);
  bool AllNodesRegistered() const;

  /// Throws kImpossibleRequest when the app can never be placed.
  std::string SubmitApp(AppSpec spec);
  /// Phase two: the AM asks for its task container. Idempotent. Throws
  /// kUnknownApp, kValidation when the app has no reservation.
  Container RequestTaskContainer(const std::string &app_id);
  void ContainerStarted(const std::string &container_id);
  void ContainerExited(const std::string &container_id, int exit_code);
  /// Starts the kill and returns the state reached so far; KILLED once every
  /// container has been released. Terminal apps are left alone. Throws
  /// kUnknownApp.
  AppState KillApp(const std::string &app_id);
  /// Kills everything and queues a shutdown for every node.
  void Shutdown();

  std::vector<NodeCommand> TakeCommands(int64_t node);
  bool HasCommands(int64_t node) const;

  const App &GetApp(const std::string &app_id) const;
  std::vector<std::string> AppIds() const;
  const Container &GetContainer(const std::string &id) const;
  const std::vector<NodeState> &nodes() const { return nodes_; }
  Metrics GetMetrics() const;
  std::vector<JournalEntry> JournalSince(uint64_t since) const;
  uint64_t version() const { return version_; }
  /// Containers not yet released.
  int64_t LiveContainers() const;

 private:
  App &FindApp(const std::string &app_id);
  std::optional<int64_t> FirstFit(const std::vector<Resource> &free, const Resource &need) const;
  void TryAdmit();
  bool AdmitYarn(App &app);
  bool AdmitSpark(App &app);
  Container &Allocate(App &app, int64_t node, Resource r, ContainerRole role, bool has_process);
  void Release(Container &c, std::optional<int> exit_code);
  void Launch(const Container &c, const ContainerSpec &spec, const std::string &tag);
  void KillContainer(Container &c);
  void SetState(App &app, AppState s);
  void MaybeFinish(App &app);
  void Record(JournalEntry e);
  void Log(const App &app, const std::string &line);
  bool Placeable(const AppSpec &spec) const;
  /// First node (by index) that takes the AM while the task still fits
  /// somewhere, and the task's first-fit node given that choice.
  std::optional<std::pair<int64_t, int64_t>> PlacePair(std::vector<Resource> free,
                                                       const Resource &am,
                                                       const Resource &task) const;

  ClusterConfig config_;
  std::filesystem::path scratch_dir_;
  std::vector<std::string> am_command_;
  std::string rm_url_;
  std::vector<NodeState> nodes_;
  std::map<std::string, App> apps_;
  std::vector<std::string> app_order_;
  std::map<std::string, Container> containers_;
  std::deque<std::string> pending_;
  std::vector<std::deque<NodeCommand>> commands_;
  std::vector<JournalEntry> journal_;
  uint64_t version_ = 0;
  uint64_t app_seq_ = 0;
  uint64_t container_seq_ = 0;
  int64_t cluster_ts_ = 0;
};

void to_json(nlohmann::json &j, const Resource &r);
void to_json(nlohmann::json &j, const Container &c);
void to_json(nlohmann::json &j, const JournalEntry &e);
void from_json(const nlohmann::json &j, JournalEntry &e);
/// YARN-style `{"clusterMetrics": {...}}`.
nlohmann::json MetricsToJson(const Metrics &m);
Metrics MetricsFromJson(const nlohmann::json &j);
void to_json(nlohmann::json &j, const LaunchCommand &c);
void from_json(const nlohmann::json &j, LaunchCommand &c);
void to_json(nlohmann::json &j, const NodeCommand &c);
void from_json(const nlohmann::json &j, NodeCommand &c);
void to_json(nlohmann::json &j, const ContainerSpec &s);
void from_json(const nlohmann::json &j, ContainerSpec &s);
void to_json(nlohmann::json &j, const AppSpec &s);
void from_json(const nlohmann::json &j, AppSpec &s);

}  // namespace pilotlet::minicluster
