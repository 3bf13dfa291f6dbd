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

#include "pilotlet/minicluster/ledger.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pilotlet/core/error.h"
#include "pilotlet/core/types.h"

namespace pilotlet::minicluster {

namespace fs = std::filesystem;

namespace {

constexpr Resource kDefaultAm{1, 512};
constexpr int kKilledExit = 137;

}  // namespace

std::string_view ToString(ContainerRole r) {
  switch (r) {
    case ContainerRole::kAm:
      return "AM";
    case ContainerRole::kTask:
      return "TASK";
    case ContainerRole::kExecutor:
      return "EXECUTOR";
  }
  return "UNKNOWN";
}

std::string_view ToString(ContainerState s) {
  switch (s) {
    case ContainerState::kAllocated:
      return "ALLOCATED";
    case ContainerState::kRunning:
      return "RUNNING";
    case ContainerState::kReleased:
      return "RELEASED";
  }
  return "UNKNOWN";
}

std::string_view ToString(AppState s) {
  switch (s) {
    case AppState::kSubmitted:
      return "SUBMITTED";
    case AppState::kAmAllocated:
      return "AM_ALLOCATED";
    case AppState::kRunning:
      return "RUNNING";
    case AppState::kFinished:
      return "FINISHED";
    case AppState::kFailed:
      return "FAILED";
    case AppState::kKilled:
      return "KILLED";
  }
  return "UNKNOWN";
}

AppState ParseAppState(std::string_view s) {
  for (AppState a : {AppState::kSubmitted, AppState::kAmAllocated, AppState::kRunning,
                     AppState::kFinished, AppState::kFailed, AppState::kKilled}) {
    if (ToString(a) == s) return a;
  }
  throw Error(ErrorCode::kMalformedInput, "unknown app state " + std::string(s));
}

bool IsTerminal(AppState s) {
  return s == AppState::kFinished || s == AppState::kFailed || s == AppState::kKilled;
}

Ledger::Ledger(ClusterConfig config, fs::path scratch_dir, std::vector<std::string> am_command,
               std::string rm_url)
    : config_(std::move(config)),
      scratch_dir_(std::move(scratch_dir)),
      am_command_(std::move(am_command)),
      rm_url_(std::move(rm_url)),
      cluster_ts_(WallMicros() / 1000) {
  if (config_.nodes.empty()) throw Error(ErrorCode::kValidation, "cluster without nodes");
  for (size_t i = 0; i < config_.nodes.size(); ++i) {
    const auto &n = config_.nodes[i];
    if (n.vcores < 1 || n.memory_mb < 1) {
      throw Error(ErrorCode::kValidation, "node " + n.hostname + " needs vcores and memory");
    }
    NodeState s;
    s.index = static_cast<int64_t>(i);
    s.hostname = n.hostname;
    s.capacity = {n.vcores, n.memory_mb};
    nodes_.push_back(s);
  }
  commands_.resize(nodes_.size());
}

void Ledger::RegisterNode(int64_t index) {
  if (index < 0 || index >= static_cast<int64_t>(nodes_.size())) {
    throw Error(ErrorCode::kValidation, "no node " + std::to_string(index));
  }
  if (nodes_[index].registered) return;
  nodes_[index].registered = true;
  JournalEntry e;
  e.kind = "NODE_REGISTERED";
  e.node = index;
  Record(e);
}

bool Ledger::AllNodesRegistered() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const NodeState &n) { return n.registered; });
}

void Ledger::Record(JournalEntry e) {
  e.version = ++version_;
  e.mono_us = MonotonicMicros();
  Resource alloc;
  for (const auto &n : nodes_) alloc += n.allocated;
  e.allocated_after = alloc;
  journal_.push_back(std::move(e));
}

void Ledger::Log(const App &app, const std::string &line) {
  std::ofstream out(app.log_path, std::ios::app);
  out << line << "\n";
}

std::optional<int64_t> Ledger::FirstFit(const std::vector<Resource> &free,
                                        const Resource &need) const {
  for (size_t i = 0; i < free.size(); ++i) {
    if (free[i].Fits(need)) return static_cast<int64_t>(i);
  }
  return std::nullopt;
}

bool Ledger::Placeable(const AppSpec &spec) const {
  std::vector<Resource> free;
  for (const auto &n : nodes_) free.push_back(n.capacity);
  if (config_.flavor == ClusterFlavor::kSparkLike) {
    int64_t cores = 0;
    for (const auto &f : free) cores += f.vcores;
    return spec.task.resource.vcores <= cores;
  }
  return PlacePair(free, spec.am.resource, spec.task.resource).has_value();
}

std::optional<std::pair<int64_t, int64_t>> Ledger::PlacePair(std::vector<Resource> free,
                                                             const Resource &am,
                                                             const Resource &task) const {
  for (size_t a = 0; a < free.size(); ++a) {
    if (!free[a].Fits(am)) continue;
    free[a] -= am;
    auto t = FirstFit(free, task);
    free[a] += am;
    if (t) return std::make_pair(static_cast<int64_t>(a), *t);
  }
  return std::nullopt;
}

std::string Ledger::SubmitApp(AppSpec spec) {
  bool spark = config_.flavor == ClusterFlavor::kSparkLike;
  if (!spark && spec.am.resource.vcores == 0 && spec.am.resource.memory_mb == 0) {
    spec.am.resource = kDefaultAm;
  }
  std::vector<std::string> violations;
  if (spec.task.command.empty()) violations.push_back("task command must be non-empty");
  if (spec.task.resource.vcores < 1) violations.push_back("task vcores >= 1 required");
  if (!spark && spec.task.resource.memory_mb < 1) violations.push_back("task memory_mb >= 1 required");
  if (!spark && (spec.am.resource.vcores < 1 || spec.am.resource.memory_mb < 1)) {
    violations.push_back("am vcores and memory_mb >= 1 required");
  }
  if (spark && spec.task.resource.memory_mb < 0) violations.push_back("memory_mb must not be negative");
  if (!violations.empty()) {
    std::string first = violations.front();
    throw Error(ErrorCode::kValidation, "invalid app spec: " + first, std::move(violations));
  }
  if (!Placeable(spec)) {
    throw Error(ErrorCode::kImpossibleRequest,
                "request for " + std::to_string(spec.task.resource.vcores) + " vcores / " +
                    std::to_string(spec.task.resource.memory_mb) + " MB can never be placed");
  }
  char id[96];
  if (spark) {
    std::snprintf(id, sizeof(id), "app-%lld-%04llu", static_cast<long long>(cluster_ts_),
                  static_cast<unsigned long long>(++app_seq_));
  } else {
    std::snprintf(id, sizeof(id), "application_%lld_%04llu", static_cast<long long>(cluster_ts_),
                  static_cast<unsigned long long>(++app_seq_));
  }
  App app;
  app.id = id;
  app.name = spec.name;
  app.spec = std::move(spec);
  app.log_path = scratch_dir_ / "apps" / app.id / "app.log";
  app.submitted_us = MonotonicMicros();
  fs::create_directories(app.log_path.parent_path());
  auto &ref = apps_.emplace(app.id, std::move(app)).first->second;
  app_order_.push_back(ref.id);
  Log(ref, "SUBMITTED " + ref.id + " name=" + ref.name + " vcores=" +
               std::to_string(ref.spec.task.resource.vcores) +
               " memory_mb=" + std::to_string(ref.spec.task.resource.memory_mb));
  JournalEntry e;
  e.kind = "APP_STATE";
  e.app_id = ref.id;
  e.detail = "SUBMITTED";
  Record(e);
  pending_.push_back(ref.id);
  TryAdmit();
  return ref.id;
}

void Ledger::TryAdmit() {
  while (!pending_.empty()) {
    App &app = apps_.at(pending_.front());
    bool ok = config_.flavor == ClusterFlavor::kSparkLike ? AdmitSpark(app) : AdmitYarn(app);
    if (!ok) break;
    pending_.pop_front();
  }
}

bool Ledger::AdmitYarn(App &app) {
  std::vector<Resource> free;
  for (const auto &n : nodes_) free.push_back(n.Free());
  auto pair = PlacePair(free, app.spec.am.resource, app.spec.task.resource);
  if (!pair) return false;
  auto [a, t] = *pair;
  Container &am = Allocate(app, a, app.spec.am.resource, ContainerRole::kAm, true);
  app.am_container = am.id;
  nodes_[t].reserved += app.spec.task.resource;
  app.reserved_node = t;
  JournalEntry e;
  e.kind = "RESERVE";
  e.app_id = app.id;
  e.role = "TASK";
  e.node = t;
  e.resource = app.spec.task.resource;
  Record(e);
  SetState(app, AppState::kAmAllocated);
  ContainerSpec am_spec = app.spec.am;
  if (am_spec.command.empty()) {
    am_spec.command = am_command_;
    am_spec.command.insert(am_spec.command.end(), {"--rm", rm_url_, "--app-id", app.id});
  }
  Launch(am, am_spec, "am");
  return true;
}

bool Ledger::AdmitSpark(App &app) {
  int64_t need = app.spec.task.resource.vcores;
  int64_t free_total = 0;
  for (const auto &n : nodes_) free_total += n.Free().vcores;
  if (free_total < need) return false;
  std::vector<int64_t> bound(nodes_.size(), 0);
  while (need > 0) {
    for (size_t i = 0; i < nodes_.size() && need > 0; ++i) {
      if (nodes_[i].Free().vcores - bound[i] > 0) {
        ++bound[i];
        --need;
      }
    }
  }
  Container *driver = nullptr;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (bound[i] == 0) continue;
    bool first = driver == nullptr;
    Container &c = Allocate(app, static_cast<int64_t>(i), Resource{bound[i], 0},
                            ContainerRole::kExecutor, first);
    if (first) driver = &c;
  }
  std::string bindings;
  for (const auto &cid : app.containers) {
    const Container &c = containers_.at(cid);
    if (!bindings.empty()) bindings += ",";
    bindings += std::to_string(c.node) + ":" + std::to_string(c.resource.vcores);
  }
  Log(app, "BINDINGS " + bindings);
  ContainerSpec spec = app.spec.task;
  spec.env["PILOTLET_SPARK_BINDINGS"] = bindings;
  Launch(*driver, spec, "driver");
  return true;
}

Container &Ledger::Allocate(App &app, int64_t node, Resource r, ContainerRole role,
                            bool has_process) {
  std::string app_seq = app.id.substr(app.id.find_last_of("-_") + 1);
  char id[128];
  std::snprintf(id, sizeof(id), "container_%lld_%s_01_%06llu", static_cast<long long>(cluster_ts_),
                app_seq.c_str(), static_cast<unsigned long long>(++container_seq_));
  Container c;
  c.id = id;
  c.app_id = app.id;
  c.node = node;
  c.resource = r;
  c.role = role;
  c.has_process = has_process;
  c.allocated_us = MonotonicMicros();
  nodes_[node].allocated += r;
  auto &ref = containers_.emplace(c.id, std::move(c)).first->second;
  app.containers.push_back(ref.id);
  JournalEntry e;
  e.kind = "ALLOCATE";
  e.app_id = app.id;
  e.container_id = ref.id;
  e.role = std::string(ToString(role));
  e.node = node;
  e.resource = r;
  Record(e);
  Log(app, "CONTAINER_ALLOCATED " + ref.id + " role=" + e.role + " node=" +
               std::to_string(node) + " vcores=" + std::to_string(r.vcores) +
               " memory_mb=" + std::to_string(r.memory_mb));
  return ref;
}

void Ledger::Launch(const Container &c, const ContainerSpec &spec, const std::string &tag) {
  NodeCommand cmd;
  cmd.op = NodeCommand::Op::kLaunch;
  cmd.container_id = c.id;
  cmd.launch.container_id = c.id;
  cmd.launch.argv = spec.command;
  cmd.launch.env = spec.env;
  cmd.launch.env["CONTAINER_ID"] = c.id;
  cmd.launch.env["APPLICATION_ID"] = c.app_id;
  cmd.launch.env["PILOTLET_RM_URL"] = rm_url_;
  cmd.launch.env["PILOTLET_CONTAINER_VCORES"] = std::to_string(c.resource.vcores);
  cmd.launch.env["PILOTLET_CONTAINER_MEMORY_MB"] = std::to_string(c.resource.memory_mb);
  cmd.launch.env["NM_HOST"] = nodes_[c.node].hostname;
  fs::path dir = apps_.at(c.app_id).log_path.parent_path();
  cmd.launch.stdout_path = (dir / (tag + ".stdout")).string();
  cmd.launch.stderr_path = (dir / (tag + ".stderr")).string();
  cmd.launch.cwd = dir.string();
  commands_[c.node].push_back(std::move(cmd));
}

void Ledger::Release(Container &c, std::optional<int> exit_code) {
  if (c.state == ContainerState::kReleased) return;
  c.state = ContainerState::kReleased;
  c.exit_code = exit_code;
  c.released_us = MonotonicMicros();
  nodes_[c.node].allocated -= c.resource;
  JournalEntry e;
  e.kind = "RELEASE";
  e.app_id = c.app_id;
  e.container_id = c.id;
  e.role = std::string(ToString(c.role));
  e.node = c.node;
  e.resource = c.resource;
  e.detail = exit_code ? std::to_string(*exit_code) : "";
  Record(e);
  Log(apps_.at(c.app_id), "CONTAINER_RELEASED " + c.id +
                              (exit_code ? " exit=" + std::to_string(*exit_code) : ""));
}

void Ledger::KillContainer(Container &c) {
  if (c.state == ContainerState::kReleased) return;
  if (!c.has_process) {
    Release(c, kKilledExit);
    return;
  }
  auto &queue = commands_[c.node];
  auto it = std::find_if(queue.begin(), queue.end(), [&](const NodeCommand &cmd) {
    return cmd.op == NodeCommand::Op::kLaunch && cmd.container_id == c.id;
  });
  if (it != queue.end()) {
    queue.erase(it);
    Release(c, kKilledExit);
    return;
  }
  NodeCommand kill;
  kill.op = NodeCommand::Op::kKill;
  kill.container_id = c.id;
  queue.push_back(std::move(kill));
}

void Ledger::SetState(App &app, AppState s) {
  if (app.state == s) return;
  app.state = s;
  JournalEntry e;
  e.kind = "APP_STATE";
  e.app_id = app.id;
  e.detail = std::string(ToString(s));
  Record(e);
  Log(app, "STATE " + e.detail);
}

App &Ledger::FindApp(const std::string &app_id) {
  auto it = apps_.find(app_id);
  if (it == apps_.end()) throw Error(ErrorCode::kUnknownApp, app_id);
  return it->second;
}

const App &Ledger::GetApp(const std::string &app_id) const {
  auto it = apps_.find(app_id);
  if (it == apps_.end()) throw Error(ErrorCode::kUnknownApp, app_id);
  return it->second;
}

std::vector<std::string> Ledger::AppIds() const { return app_order_; }

const Container &Ledger::GetContainer(const std::string &id) const {
  auto it = containers_.find(id);
  if (it == containers_.end()) throw Error(ErrorCode::kValidation, "unknown container " + id);
  return it->second;
}

Container Ledger::RequestTaskContainer(const std::string &app_id) {
  App &app = FindApp(app_id);
  for (const auto &cid : app.containers) {
    const Container &c = containers_.at(cid);
    if (c.role == ContainerRole::kTask) return c;
  }
  if (!app.reserved_node || app.kill_requested || IsTerminal(app.state)) {
    throw Error(ErrorCode::kValidation, app_id + " has no task reservation");
  }
  int64_t node = *app.reserved_node;
  nodes_[node].reserved -= app.spec.task.resource;
  app.reserved_node.reset();
  JournalEntry e;
  e.kind = "UNRESERVE";
  e.app_id = app.id;
  e.role = "TASK";
  e.node = node;
  e.resource = app.spec.task.resource;
  Record(e);
  Container &task = Allocate(app, node, app.spec.task.resource, ContainerRole::kTask, true);
  Launch(task, app.spec.task, "task");
  return task;
}

void Ledger::ContainerStarted(const std::string &container_id) {
  auto it = containers_.find(container_id);
  if (it == containers_.end()) return;
  Container &c = it->second;
  if (c.state != ContainerState::kAllocated) return;
  c.state = ContainerState::kRunning;
  c.started_us = MonotonicMicros();
  JournalEntry e;
  e.kind = "START";
  e.app_id = c.app_id;
  e.container_id = c.id;
  e.role = std::string(ToString(c.role));
  e.node = c.node;
  Record(e);
  App &app = apps_.at(c.app_id);
  Log(app, "CONTAINER_STARTED " + c.id + " role=" + e.role);
  if (!app.kill_requested && !IsTerminal(app.state) &&
      (c.role == ContainerRole::kTask || c.role == ContainerRole::kExecutor)) {
    SetState(app, AppState::kRunning);
  }
}

void Ledger::ContainerExited(const std::string &container_id, int exit_code) {
  auto it = containers_.find(container_id);
  if (it == containers_.end()) return;
  Container &c = it->second;
  if (c.state == ContainerState::kReleased) return;
  Release(c, exit_code);
  App &app = apps_.at(c.app_id);
  if (c.role == ContainerRole::kTask || c.role == ContainerRole::kExecutor) {
    if (!app.kill_requested) app.exit_code = exit_code;
    for (const auto &cid : app.containers) {
      Container &other = containers_.at(cid);
      if (other.role == ContainerRole::kExecutor && !other.has_process) Release(other, std::nullopt);
    }
  } else if (c.role == ContainerRole::kAm) {
    for (const auto &cid : app.containers) KillContainer(containers_.at(cid));
    if (app.reserved_node) {
      nodes_[*app.reserved_node].reserved -= app.spec.task.resource;
      JournalEntry e;
      e.kind = "UNRESERVE";
      e.app_id = app.id;
      e.role = "TASK";
      e.node = *app.reserved_node;
      e.resource = app.spec.task.resource;
      app.reserved_node.reset();
      Record(e);
      if (!app.exit_code && !app.kill_requested) app.exit_code = exit_code == 0 ? 1 : exit_code;
    }
  }
  MaybeFinish(app);
}

void Ledger::MaybeFinish(App &app) {
  if (IsTerminal(app.state)) return;
  if (app.reserved_node) return;
  for (const auto &cid : app.containers) {
    if (containers_.at(cid).state != ContainerState::kReleased) return;
  }
  bool yarn = config_.flavor != ClusterFlavor::kSparkLike;
  if (yarn && !app.am_container && !app.kill_requested) return;
  if (app.containers.empty() && !app.kill_requested) return;
  int code;
  AppState final_state;
  if (app.kill_requested) {
    code = kKilledExit;
    final_state = AppState::kKilled;
  } else {
    code = app.exit_code.value_or(1);
    final_state = code == 0 ? AppState::kFinished : AppState::kFailed;
  }
  app.exit_code = code;
  app.finished_us = MonotonicMicros();
  SetState(app, final_state);
  Log(app, "EXIT " + std::to_string(code));
  TryAdmit();
}

AppState Ledger::KillApp(const std::string &app_id) {
  App &app = FindApp(app_id);
  if (IsTerminal(app.state)) return app.state;
  app.kill_requested = true;
  auto pending = std::find(pending_.begin(), pending_.end(), app_id);
  if (pending != pending_.end()) {
    pending_.erase(pending);
    MaybeFinish(app);
    return app.state;
  }
  if (app.reserved_node) {
    nodes_[*app.reserved_node].reserved -= app.spec.task.resource;
    JournalEntry e;
    e.kind = "UNRESERVE";
    e.app_id = app.id;
    e.role = "TASK";
    e.node = *app.reserved_node;
    e.resource = app.spec.task.resource;
    app.reserved_node.reset();
    Record(e);
  }
  for (const auto &cid : app.containers) KillContainer(containers_.at(cid));
  MaybeFinish(app);
  return app.state;
}

void Ledger::Shutdown() {
  for (const auto &id : app_order_) {
    if (!IsTerminal(apps_.at(id).state)) KillApp(id);
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    NodeCommand cmd;
    cmd.op = NodeCommand::Op::kShutdown;
    commands_[i].push_back(cmd);
  }
}

std::vector<NodeCommand> Ledger::TakeCommands(int64_t node) {
  std::vector<NodeCommand> out(commands_.at(node).begin(), commands_.at(node).end());
  commands_.at(node).clear();
  return out;
}

bool Ledger::HasCommands(int64_t node) const { return !commands_.at(node).empty(); }

Metrics Ledger::GetMetrics() const {
  Metrics m;
  for (const auto &n : nodes_) {
    m.total += n.capacity;
    m.allocated += n.allocated;
    m.reserved += n.reserved;
    if (n.registered) ++m.active_nodes;
  }
  m.node_count = static_cast<int64_t>(nodes_.size());
  m.available = m.total - m.allocated;
  bool spark = config_.flavor == ClusterFlavor::kSparkLike;
  for (const auto &id : pending_) {
    const App &a = apps_.at(id);
    m.pending += a.spec.task.resource;
    if (!spark) m.pending += a.spec.am.resource;
  }
  m.apps_submitted = static_cast<int64_t>(apps_.size());
  m.apps_pending = static_cast<int64_t>(pending_.size());
  for (const auto &[id, a] : apps_) {
    switch (a.state) {
      case AppState::kFinished:
        ++m.apps_completed;
        break;
      case AppState::kFailed:
        ++m.apps_failed;
        break;
      case AppState::kKilled:
        ++m.apps_killed;
        break;
      default:
        break;
    }
  }
  m.apps_running = m.apps_submitted - m.apps_pending - m.apps_completed - m.apps_failed -
                   m.apps_killed;
  m.containers_allocated = LiveContainers();
  m.version = version_;
  return m;
}

int64_t Ledger::LiveContainers() const {
  int64_t live = 0;
  for (const auto &[id, c] : containers_) {
    if (c.state != ContainerState::kReleased) ++live;
  }
  return live;
}

std::vector<JournalEntry> Ledger::JournalSince(uint64_t since) const {
  if (since >= journal_.size()) return {};
  return std::vector<JournalEntry>(journal_.begin() + static_cast<std::ptrdiff_t>(since),
                                   journal_.end());
}

// --- JSON ---

void to_json(nlohmann::json &j, const Resource &r) {
  j = {{"vcores", r.vcores}, {"memoryMB", r.memory_mb}};
}

void to_json(nlohmann::json &j, const Container &c) {
  j = {{"id", c.id},
       {"appId", c.app_id},
       {"node", c.node},
       {"vcores", c.resource.vcores},
       {"memoryMB", c.resource.memory_mb},
       {"role", ToString(c.role)},
       {"state", ToString(c.state)},
       {"allocatedMonoUs", c.allocated_us},
       {"startedMonoUs", c.started_us},
       {"releasedMonoUs", c.released_us}};
  if (c.exit_code) j["exitCode"] = *c.exit_code;
}

void to_json(nlohmann::json &j, const JournalEntry &e) {
  j = {{"version", e.version},
       {"monoUs", e.mono_us},
       {"kind", e.kind},
       {"appId", e.app_id},
       {"containerId", e.container_id},
       {"role", e.role},
       {"node", e.node},
       {"vcores", e.resource.vcores},
       {"memoryMB", e.resource.memory_mb},
       {"allocatedVirtualCores", e.allocated_after.vcores},
       {"allocatedMB", e.allocated_after.memory_mb},
       {"detail", e.detail}};
}

void from_json(const nlohmann::json &j, JournalEntry &e) {
  e.version = j.at("version").get<uint64_t>();
  e.mono_us = j.at("monoUs").get<int64_t>();
  e.kind = j.at("kind").get<std::string>();
  e.app_id = j.at("appId").get<std::string>();
  e.container_id = j.at("containerId").get<std::string>();
  e.role = j.at("role").get<std::string>();
  e.node = j.at("node").get<int64_t>();
  e.resource = {j.at("vcores").get<int64_t>(), j.at("memoryMB").get<int64_t>()};
  e.allocated_after = {j.at("allocatedVirtualCores").get<int64_t>(),
                       j.at("allocatedMB").get<int64_t>()};
  e.detail = j.at("detail").get<std::string>();
}

nlohmann::json MetricsToJson(const Metrics &m) {
  return {{"clusterMetrics",
           {{"totalVirtualCores", m.total.vcores},
            {"totalMB", m.total.memory_mb},
            {"allocatedVirtualCores", m.allocated.vcores},
            {"allocatedMB", m.allocated.memory_mb},
            {"reservedVirtualCores", m.reserved.vcores},
            {"reservedMB", m.reserved.memory_mb},
            {"pendingVirtualCores", m.pending.vcores},
            {"pendingMB", m.pending.memory_mb},
            {"availableVirtualCores", m.available.vcores},
            {"availableMB", m.available.memory_mb},
            {"appsSubmitted", m.apps_submitted},
            {"appsPending", m.apps_pending},
            {"appsRunning", m.apps_running},
            {"appsCompleted", m.apps_completed},
            {"appsFailed", m.apps_failed},
            {"appsKilled", m.apps_killed},
            {"activeNodes", m.active_nodes},
            {"totalNodes", m.node_count},
            {"containersAllocated", m.containers_allocated},
            {"ledgerVersion", m.version}}}};
}

Metrics MetricsFromJson(const nlohmann::json &doc) {
  const auto &j = doc.at("clusterMetrics");
  Metrics m;
  m.total = {j.at("totalVirtualCores").get<int64_t>(), j.at("totalMB").get<int64_t>()};
  m.allocated = {j.at("allocatedVirtualCores").get<int64_t>(), j.at("allocatedMB").get<int64_t>()};
  m.reserved = {j.at("reservedVirtualCores").get<int64_t>(), j.at("reservedMB").get<int64_t>()};
  m.pending = {j.at("pendingVirtualCores").get<int64_t>(), j.at("pendingMB").get<int64_t>()};
  m.available = {j.at("availableVirtualCores").get<int64_t>(), j.at("availableMB").get<int64_t>()};
  m.apps_submitted = j.at("appsSubmitted").get<int64_t>();
  m.apps_pending = j.at("appsPending").get<int64_t>();
  m.apps_running = j.at("appsRunning").get<int64_t>();
  m.apps_completed = j.at("appsCompleted").get<int64_t>();
  m.apps_failed = j.at("appsFailed").get<int64_t>();
  m.apps_killed = j.at("appsKilled").get<int64_t>();
  m.active_nodes = j.at("activeNodes").get<int64_t>();
  m.node_count = j.at("totalNodes").get<int64_t>();
  m.containers_allocated = j.at("containersAllocated").get<int64_t>();
  m.version = j.at("ledgerVersion").get<uint64_t>();
  return m;
}

void to_json(nlohmann::json &j, const LaunchCommand &c) {
  j = {{"container_id", c.container_id}, {"argv", c.argv},
       {"env", c.env},                   {"stdout", c.stdout_path},
       {"stderr", c.stderr_path},        {"cwd", c.cwd}};
}

void from_json(const nlohmann::json &j, LaunchCommand &c) {
  c.container_id = j.at("container_id").get<std::string>();
  c.argv = j.at("argv").get<std::vector<std::string>>();
  c.env = j.at("env").get<std::map<std::string, std::string>>();
  c.stdout_path = j.at("stdout").get<std::string>();
  c.stderr_path = j.at("stderr").get<std::string>();
  c.cwd = j.at("cwd").get<std::string>();
}

void to_json(nlohmann::json &j, const NodeCommand &c) {
  switch (c.op) {
    case NodeCommand::Op::kLaunch:
      j = {{"op", "launch"}, {"launch", c.launch}};
      break;
    case NodeCommand::Op::kKill:
      j = {{"op", "kill"}, {"container_id", c.container_id}};
      break;
    case NodeCommand::Op::kShutdown:
      j = {{"op", "shutdown"}};
      break;
  }
}

void from_json(const nlohmann::json &j, NodeCommand &c) {
  std::string op = j.at("op").get<std::string>();
  if (op == "launch") {
    c.op = NodeCommand::Op::kLaunch;
    c.launch = j.at("launch").get<LaunchCommand>();
    c.container_id = c.launch.container_id;
  } else if (op == "kill") {
    c.op = NodeCommand::Op::kKill;
    c.container_id = j.at("container_id").get<std::string>();
  } else if (op == "shutdown") {
    c.op = NodeCommand::Op::kShutdown;
  } else {
    throw Error(ErrorCode::kMalformedInput, "unknown node command " + op);
  }
}

void to_json(nlohmann::json &j, const ContainerSpec &s) {
  j = {{"vcores", s.resource.vcores},
       {"memory_mb", s.resource.memory_mb},
       {"command", s.command},
       {"env", s.env}};
}

void from_json(const nlohmann::json &j, ContainerSpec &s) {
  s.resource.vcores = j.value("vcores", int64_t{0});
  s.resource.memory_mb = j.value("memory_mb", int64_t{0});
  s.command = j.value("command", std::vector<std::string>{});
  s.env = j.value("env", std::map<std::string, std::string>{});
}

void to_json(nlohmann::json &j, const AppSpec &s) {
  j = {{"name", s.name}, {"am_spec", s.am}, {"task_spec", s.task}};
}

void from_json(const nlohmann::json &j, AppSpec &s) {
  s.name = j.value("name", std::string());
  if (j.contains("am_spec")) s.am = j.at("am_spec").get<ContainerSpec>();
  s.task = j.at("task_spec").get<ContainerSpec>();
}

}  // namespace pilotlet::minicluster
