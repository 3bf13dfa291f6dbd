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

#include "pilotlet/minicluster/rm_server.h"

#include <signal.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <iostream>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/minicluster/ledger.h"
#include "pilotlet/minicluster/rm_client.h"

namespace pilotlet::minicluster {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kPortAttempts = 11;
constexpr int kMaxWaitMs = 30000;
constexpr int kHttpThreads = 64;
constexpr auto kNodeGrace = std::chrono::seconds(8);
constexpr auto kContainerGrace = std::chrono::seconds(2);
constexpr auto kKillEscalation = std::chrono::seconds(3);
constexpr auto kUnreachableLimit = std::chrono::seconds(10);

std::atomic<bool> g_signalled{false};

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownApp:
      return 404;
    case ErrorCode::kValidation:
    case ErrorCode::kImpossibleRequest:
    case ErrorCode::kMalformedInput:
      return 400;
    default:
      return 500;
  }
}

void Reply(httplib::Response &res, const json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response &res, const Error &e) {
  Reply(res, {{"error", ToString(e.code())}, {"message", e.what()}, {"details", e.details()}},
        HttpStatus(e.code()));
}

int QueryInt(const httplib::Request &req, const std::string &key, int fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    return std::stoi(req.get_param_value(key));
  } catch (const std::exception &) {
    throw Error(ErrorCode::kMalformedInput, "query parameter " + key + " is not an integer");
  }
}

json AppJson(const Ledger &ledger, const App &app) {
  json containers = json::array();
  for (const auto &cid : app.containers) containers.push_back(ledger.GetContainer(cid));
  json j = {{"id", app.id},
            {"name", app.name},
            {"state", ToString(app.state)},
            {"exitCode", nullptr},
            {"logPath", app.log_path.string()},
            {"containers", containers},
            {"submittedMonoUs", app.submitted_us},
            {"finishedMonoUs", app.finished_us},
            {"ledgerVersion", ledger.version()}};
  if (app.exit_code) j["exitCode"] = *app.exit_code;
  return j;
}

class ResourceManager {
 public:
  ResourceManager(ClusterConfig config, ServeOptions options)
      : config_(std::move(config)), options_(std::move(options)) {}

  int Run();

 private:
  template <typename F>
  httplib::Server::Handler Guarded(F f) {
    return [f](const httplib::Request &req, httplib::Response &res) {
      try {
        f(req, res);
      } catch (const Error &e) {
        ReplyError(res, e);
      } catch (const json::exception &e) {
        ReplyError(res, Error(ErrorCode::kMalformedInput, e.what()));
      } catch (const std::exception &e) {
        ReplyError(res, Error(ErrorCode::kIoFailed, e.what()));
      }
    };
  }

  void Routes();
  void InstallClusterRoutes();
  void InstallNodeRoutes();
  void InstallSparkRoutes();
  std::optional<int> Bind();
  void SpawnNodeManagers();
  void StopNodeManagers();
  /// Waits until `app_id` is terminal, bounded by `kMaxWaitMs`.
  AppState KillAndWait(std::unique_lock<std::mutex> &lock, const std::string &app_id);
  void RequireSpark() const {
    if (config_.flavor != ClusterFlavor::kSparkLike) {
      throw Error(ErrorCode::kValidation, "not a Spark-like cluster");
    }
  }

  ClusterConfig config_;
  ServeOptions options_;
  httplib::Server server_;
  std::string url_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::unique_ptr<Ledger> ledger_;
  bool shutdown_requested_ = false;
  bool stopping_ = false;

  std::vector<ChildProcess> node_managers_;
};

void ResourceManager::Routes() {
  server_.new_task_queue = [] { return new httplib::ThreadPool(kHttpThreads); };
  server_.set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server_.set_keep_alive_timeout(1);
  InstallClusterRoutes();
  InstallNodeRoutes();
  InstallSparkRoutes();
}

void ResourceManager::InstallClusterRoutes() {
  server_.Get("/ws/v1/cluster/health", Guarded([this](const auto &, auto &res) {
    std::lock_guard lock(mu_);
    Metrics m = ledger_->GetMetrics();
    bool ready = ledger_->AllNodesRegistered() && !stopping_;
    Reply(res,
          {{"ready", ready},
           {"flavor", ToString(config_.flavor)},
           {"activeNodes", m.active_nodes},
           {"nodeCount", m.node_count},
           {"pid", static_cast<int64_t>(getpid())}},
          ready ? 200 : 503);
  }));
  server_.Get("/ws/v1/cluster/metrics", Guarded([this](const auto &, auto &res) {
    std::lock_guard lock(mu_);
    Reply(res, MetricsToJson(ledger_->GetMetrics()));
  }));
  server_.Get("/ws/v1/cluster/apps", Guarded([this](const auto &, auto &res) {
    std::lock_guard lock(mu_);
    json apps = json::array();
    for (const auto &id : ledger_->AppIds()) apps.push_back(AppJson(*ledger_, ledger_->GetApp(id)));
    Reply(res, {{"apps", {{"app", apps}}}});
  }));
  server_.Post("/ws/v1/cluster/apps", Guarded([this](const auto &req, auto &res) {
    AppSpec spec = json::parse(req.body).template get<AppSpec>();
    std::lock_guard lock(mu_);
    std::string id = ledger_->SubmitApp(std::move(spec));
    cv_.notify_all();
    Reply(res, {{"id", id}});
  }));
  server_.Get(R"(/ws/v1/cluster/apps/([^/]+))", Guarded([this](const auto &req, auto &res) {
    std::string id = req.matches[1];
    std::unique_lock lock(mu_);
    ledger_->GetApp(id);
    if (req.has_param("after_version")) {
      uint64_t after = static_cast<uint64_t>(QueryInt(req, "after_version", 0));
      int wait_ms = std::clamp(QueryInt(req, "timeout_ms", 0), 0, kMaxWaitMs);
      cv_.wait_for(lock, std::chrono::milliseconds(wait_ms),
                   [&] { return ledger_->version() > after || stopping_; });
    }
    Reply(res, {{"app", AppJson(*ledger_, ledger_->GetApp(id))}});
  }));
  server_.Put(R"(/ws/v1/cluster/apps/([^/]+)/state)", Guarded([this](const auto &req, auto &res) {
    std::string id = req.matches[1];
    json body = json::parse(req.body);
    if (body.value("state", "") != "KILLED") {
      throw Error(ErrorCode::kValidation, "only KILLED can be requested");
    }
    std::unique_lock lock(mu_);
    AppState s = KillAndWait(lock, id);
    Reply(res, {{"state", ToString(s)}});
  }));
  server_.Post(R"(/ws/v1/cluster/apps/([^/]+)/containers)",
               Guarded([this](const auto &req, auto &res) {
                 std::string id = req.matches[1];
                 std::lock_guard lock(mu_);
                 Container c = ledger_->RequestTaskContainer(id);
                 cv_.notify_all();
                 Reply(res, json(c));
               }));
  server_.Get("/ws/v1/cluster/journal", Guarded([this](const auto &req, auto &res) {
    uint64_t since = static_cast<uint64_t>(QueryInt(req, "since", 0));
    std::lock_guard lock(mu_);
    Reply(res, {{"entries", ledger_->JournalSince(since)}, {"version", ledger_->version()}});
  }));
  server_.Post("/ws/v1/cluster/shutdown", Guarded([this](const auto &, auto &res) {
    std::lock_guard lock(mu_);
    shutdown_requested_ = true;
    cv_.notify_all();
    Reply(res, {{"stopping", true}});
  }));
}

void ResourceManager::InstallNodeRoutes() {
  server_.Post("/ws/v1/node/register", Guarded([this](const auto &req, auto &res) {
    int64_t node = json::parse(req.body).at("node").template get<int64_t>();
    std::lock_guard lock(mu_);
    ledger_->RegisterNode(node);
    cv_.notify_all();
    Reply(res, {{"registered", node}});
  }));
  server_.Get(R"(/ws/v1/node/(\d+)/commands)", Guarded([this](const auto &req, auto &res) {
    int64_t node = std::stoll(req.matches[1]);
    int wait_ms = std::clamp(QueryInt(req, "timeout_ms", 0), 0, kMaxWaitMs);
    std::unique_lock lock(mu_);
    if (node < 0 || node >= static_cast<int64_t>(ledger_->nodes().size())) {
      throw Error(ErrorCode::kValidation, "no node " + std::to_string(node));
    }
    cv_.wait_for(lock, std::chrono::milliseconds(wait_ms),
                 [&] { return ledger_->HasCommands(node); });
    Reply(res, {{"commands", ledger_->TakeCommands(node)}});
  }));
  server_.Post(R"(/ws/v1/node/(\d+)/events)", Guarded([this](const auto &req, auto &res) {
    json body = json::parse(req.body);
    std::string container = body.at("containerId").template get<std::string>();
    std::string event = body.at("event").template get<std::string>();
    std::lock_guard lock(mu_);
    if (event == "started") {
      ledger_->ContainerStarted(container);
    } else if (event == "exited") {
      ledger_->ContainerExited(container, body.at("exitCode").template get<int>());
    } else {
      throw Error(ErrorCode::kValidation, "unknown container event " + event);
    }
    cv_.notify_all();
    Reply(res, {{"ok", true}});
  }));
}

void ResourceManager::InstallSparkRoutes() {
  server_.Get("/json", Guarded([this](const auto &, auto &res) {
    std::lock_guard lock(mu_);
    Metrics m = ledger_->GetMetrics();
    json workers = json::array();
    for (const auto &n : ledger_->nodes()) {
      workers.push_back({{"id", "worker-" + std::to_string(n.index)},
                         {"host", n.hostname},
                         {"cores", n.capacity.vcores},
                         {"coresused", n.allocated.vcores},
                         {"coresfree", n.capacity.vcores - n.allocated.vcores},
                         {"memory", n.capacity.memory_mb},
                         {"memoryused", n.allocated.memory_mb},
                         {"state", n.registered ? "ALIVE" : "UNKNOWN"}});
    }
    json active = json::array();
    json completed = json::array();
    for (const auto &id : ledger_->AppIds()) {
      const App &a = ledger_->GetApp(id);
      (IsTerminal(a.state) ? completed : active).push_back(AppJson(*ledger_, a));
    }
    Reply(res, {{"url", "spark://" + url_.substr(url_.find("://") + 3)},
                {"status", stopping_ ? "STOPPING" : "ALIVE"},
                {"aliveworkers", m.active_nodes},
                {"cores", m.total.vcores},
                {"coresused", m.allocated.vcores},
                {"memory", m.total.memory_mb},
                {"memoryused", m.allocated.memory_mb},
                {"workers", workers},
                {"activeapps", active},
                {"completedapps", completed}});
  }));
  server_.Post("/v1/submissions/create", Guarded([this](const auto &req, auto &res) {
    RequireSpark();
    json body = json::parse(req.body);
    AppSpec spec;
    spec.name = body.value("appName", "");
    spec.task.resource = {body.at("cores").template get<int64_t>(), body.value("memoryMB", int64_t{0})};
    spec.task.command = body.at("command").template get<std::vector<std::string>>();
    if (body.contains("environmentVariables")) {
      spec.task.env = body["environmentVariables"].template get<std::map<std::string, std::string>>();
    }
    std::lock_guard lock(mu_);
    std::string id = ledger_->SubmitApp(std::move(spec));
    cv_.notify_all();
    Reply(res, {{"action", "CreateSubmissionResponse"}, {"submissionId", id}, {"success", true}});
  }));
  server_.Get(R"(/v1/submissions/status/([^/]+))", Guarded([this](const auto &req, auto &res) {
    RequireSpark();
    std::string id = req.matches[1];
    std::lock_guard lock(mu_);
    const App &app = ledger_->GetApp(id);
    Reply(res, {{"action", "SubmissionStatusResponse"},
                {"submissionId", id},
                {"driverState", ToString(app.state)},
                {"success", true},
                {"app", AppJson(*ledger_, app)}});
  }));
  server_.Post(R"(/v1/submissions/kill/([^/]+))", Guarded([this](const auto &req, auto &res) {
    RequireSpark();
    std::string id = req.matches[1];
    std::unique_lock lock(mu_);
    AppState s = KillAndWait(lock, id);
    Reply(res, {{"action", "KillSubmissionResponse"},
                {"submissionId", id},
                {"driverState", ToString(s)},
                {"success", true}});
  }));
}

AppState ResourceManager::KillAndWait(std::unique_lock<std::mutex> &lock, const std::string &app_id) {
  ledger_->KillApp(app_id);
  cv_.notify_all();
  cv_.wait_for(lock, std::chrono::milliseconds(kMaxWaitMs),
               [&] { return IsTerminal(ledger_->GetApp(app_id).state); });
  return ledger_->GetApp(app_id).state;
}

std::optional<int> ResourceManager::Bind() {
  const std::string host = "127.0.0.1";
  int base = options_.port.value_or(config_.rm_port);
  if (base == 0) {
    int port = server_.bind_to_any_port(host);
    if (port > 0) return port;
    return std::nullopt;
  }
  for (int attempt = 0; attempt < kPortAttempts; ++attempt) {
    if (server_.bind_to_port(host, base + attempt)) return base + attempt;
  }
  return std::nullopt;
}

void ResourceManager::SpawnNodeManagers() {
  fs::path rm_binary = SiblingBinary("pilotlet-rm");
  for (size_t i = 0; i < config_.nodes.size(); ++i) {
    fs::path dir = options_.scratch_dir / "nodes" / std::to_string(i);
    fs::create_directories(dir);
    SpawnOptions o;
    o.argv = {rm_binary.string(), "nodemanager", "--rm", url_, "--node", std::to_string(i),
              "--scratch", dir.string()};
    o.stdout_path = dir / "nm.log";
    o.stderr_path = dir / "nm.log";
    o.die_with_parent = true;
    node_managers_.push_back(ChildProcess::Spawn(o));
  }
}

void ResourceManager::StopNodeManagers() {
  auto deadline = Clock::now() + kNodeGrace;
  for (auto &nm : node_managers_) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (!nm.WaitFor(std::max(left, std::chrono::milliseconds(0)))) {
      nm.Terminate(std::chrono::milliseconds(1000));
    } else {
      nm.Terminate(std::chrono::milliseconds(0));
    }
  }
}

int ResourceManager::Run() {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread([signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    g_signalled = true;
  }).detach();

  Routes();
  auto port = Bind();
  if (!port) {
    std::cerr << "pilotlet-rm: " << ToString(ErrorCode::kPortInUse) << ": no free port from "
              << options_.port.value_or(config_.rm_port) << "\n";
    return 3;
  }
  url_ = "http://127.0.0.1:" + std::to_string(*port);
  fs::create_directories(options_.scratch_dir / "apps");
  ledger_ = std::make_unique<Ledger>(
      config_, options_.scratch_dir,
      std::vector<std::string>{SiblingBinary("pilotlet-rm").string(), "appmaster"}, url_);

  std::thread http([this] { server_.listen_after_bind(); });
  SpawnNodeManagers();
  if (options_.endpoint_file) WriteFileAtomic(*options_.endpoint_file, url_ + "\n");
  std::cerr << "pilotlet-rm: serving " << ToString(config_.flavor) << " on " << url_ << "\n";

  {
    std::unique_lock lock(mu_);
    while (!shutdown_requested_ && !g_signalled) {
      cv_.wait_for(lock, std::chrono::milliseconds(100));
    }
    stopping_ = true;
    ledger_->Shutdown();
    cv_.notify_all();
  }
  StopNodeManagers();
  std::error_code ec;
  fs::remove_all(options_.scratch_dir, ec);
  if (options_.endpoint_file) fs::remove(*options_.endpoint_file, ec);
  server_.stop();
  http.join();
  return 0;
}

struct LiveContainer {
  ChildProcess process;
  std::optional<Clock::time_point> kill_at;
};

}  // namespace

int RunResourceManager(const ServeOptions &options) {
  ClusterConfig config;
  try {
    config = LoadConfigs(options.conf_dir);
  } catch (const Error &e) {
    std::cerr << "pilotlet-rm: " << ToString(e.code()) << ": " << e.what() << "\n";
    return 2;
  }
  ServeOptions resolved = options;
  resolved.scratch_dir = fs::absolute(options.scratch_dir);
  ResourceManager rm(std::move(config), std::move(resolved));
  return rm.Run();
}

int RunNodeManager(const std::string &rm_url, int64_t node_index, const fs::path &scratch_dir) {
  fs::create_directories(scratch_dir);
  RmClient rm(rm_url, 10);
  auto last_ok = Clock::now();
  while (true) {
    try {
      rm.RegisterNode(node_index);
      break;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kUnreachable || Clock::now() - last_ok > kUnreachableLimit) {
        std::cerr << "nodemanager " << node_index << ": " << e.what() << "\n";
        return 1;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }

  std::mutex mu;
  std::map<std::string, LiveContainer> live;
  std::atomic<bool> done{false};
  std::thread reaper([&] {
    RmClient reporter(rm_url, 10);
    while (!done) {
      std::vector<std::pair<std::string, int>> exited;
      {
        std::lock_guard lock(mu);
        for (auto it = live.begin(); it != live.end();) {
          if (auto code = it->second.process.TryWait()) {
            it->second.process.Signal(SIGKILL);
            exited.emplace_back(it->first, *code);
            it = live.erase(it);
            continue;
          }
          if (it->second.kill_at && Clock::now() >= *it->second.kill_at) {
            it->second.process.Signal(SIGKILL);
            it->second.kill_at.reset();
          }
          ++it;
        }
      }
      for (const auto &[id, code] : exited) {
        try {
          reporter.ReportContainer(node_index, id, false, code);
        } catch (const Error &e) {
          std::cerr << "nodemanager " << node_index << ": " << e.what() << "\n";
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });

  int rc = 0;
  last_ok = Clock::now();
  bool shutdown = false;
  while (!shutdown) {
    std::vector<NodeCommand> commands;
    try {
      commands = rm.PollCommands(node_index, 1000);
      last_ok = Clock::now();
    } catch (const Error &e) {
      if (Clock::now() - last_ok > kUnreachableLimit) {
        std::cerr << "nodemanager " << node_index << ": resource manager lost: " << e.what() << "\n";
        rc = 1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      continue;
    }
    for (const auto &cmd : commands) {
      switch (cmd.op) {
        case NodeCommand::Op::kLaunch: {
          SpawnOptions o;
          o.argv = cmd.launch.argv;
          o.env = cmd.launch.env;
          o.cwd = cmd.launch.cwd;
          o.stdout_path = cmd.launch.stdout_path;
          o.stderr_path = cmd.launch.stderr_path;
          o.die_with_parent = true;
          try {
            ChildProcess child = ChildProcess::Spawn(o);
            try {
              rm.ReportContainer(node_index, cmd.container_id, true, 0);
            } catch (const Error &) {
            }
            std::lock_guard lock(mu);
            live.emplace(cmd.container_id, LiveContainer{std::move(child), std::nullopt});
          } catch (const Error &e) {
            std::cerr << "nodemanager " << node_index << ": " << e.what() << "\n";
            try {
              rm.ReportContainer(node_index, cmd.container_id, false, 127);
            } catch (const Error &) {
            }
          }
          break;
        }
        case NodeCommand::Op::kKill: {
          std::lock_guard lock(mu);
          auto it = live.find(cmd.container_id);
          if (it != live.end() && !it->second.kill_at) {
            it->second.process.Signal(SIGTERM);
            it->second.kill_at = Clock::now() + kKillEscalation;
          }
          break;
        }
        case NodeCommand::Op::kShutdown:
          shutdown = true;
          break;
      }
    }
  }

  done = true;
  reaper.join();
  for (auto &[id, c] : live) c.process.Signal(SIGTERM);
  auto deadline = Clock::now() + kContainerGrace;
  for (auto &[id, c] : live) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (!c.process.WaitFor(std::max(left, std::chrono::milliseconds(0)))) c.process.Signal(SIGKILL);
    c.process.Wait();
    c.process.Signal(SIGKILL);
  }
  return rc;
}

int RunAppMaster(const std::string &rm_url, const std::string &app_id) {
  RmClient rm(rm_url, 10);
  auto last_ok = Clock::now();
  ContainerReport task;
  while (true) {
    try {
      task = rm.RequestTaskContainer(app_id);
      break;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kUnreachable || Clock::now() - last_ok > kUnreachableLimit) {
        std::cerr << "appmaster " << app_id << ": " << e.what() << "\n";
        return 1;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
  std::cout << "appmaster " << app_id << ": task container " << task.id << " on node "
            << task.node << std::endl;
  uint64_t version = 0;
  last_ok = Clock::now();
  while (true) {
    AppReport report;
    try {
      report = rm.GetApp(app_id, version, 1000);
      last_ok = Clock::now();
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kUnreachable || Clock::now() - last_ok > kUnreachableLimit) {
        std::cerr << "appmaster " << app_id << ": " << e.what() << "\n";
        return 1;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      continue;
    }
    version = report.ledger_version;
    if (IsTerminal(report.state)) return 0;
    for (const auto &c : report.containers) {
      if (c.id == task.id && c.state == ToString(ContainerState::kReleased)) {
        std::cout << "appmaster " << app_id << ": task exited "
                  << (c.exit_code ? std::to_string(*c.exit_code) : "?") << std::endl;
        return 0;
      }
    }
  }
}

RmProcess RmProcess::Start(const Options &options) {
  fs::path scratch = fs::absolute(options.scratch_dir);
  fs::create_directories(scratch);
  fs::path endpoint_file = scratch / "rm.endpoint";
  std::error_code ec;
  fs::remove(endpoint_file, ec);
  fs::path log = options.log_path.value_or(scratch / "rm.log");

  SpawnOptions o;
  o.argv = {SiblingBinary("pilotlet-rm").string(), "serve", "--conf-dir", options.conf_dir.string(),
            "--scratch", scratch.string(), "--endpoint-file", endpoint_file.string()};
  if (options.port) o.argv.insert(o.argv.end(), {"--port", std::to_string(*options.port)});
  o.stdout_path = log;
  o.stderr_path = log;
  o.die_with_parent = options.die_with_parent;

  RmProcess rm;
  rm.process_ = ChildProcess::Spawn(o);
  auto deadline = Clock::now() + std::chrono::microseconds(
                                     static_cast<int64_t>(options.ready_timeout_s * 1e6));
  while (Clock::now() < deadline) {
    if (auto code = rm.process_.TryWait()) {
      throw Error(ErrorCode::kBootFailed, "resource manager exited with " + std::to_string(*code) +
                                              ": " + TailOfFile(log, 2048));
    }
    if (rm.endpoint_.empty() && fs::exists(endpoint_file)) {
      rm.endpoint_ = std::string(Trim(ReadFile(endpoint_file)));
    }
    if (!rm.endpoint_.empty() && ProbeReady(rm.endpoint_, 1.0)) return rm;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  std::string tail = TailOfFile(log, 2048);
  rm.process_.Terminate(std::chrono::milliseconds(2000));
  throw Error(ErrorCode::kBootFailed, "resource manager not ready within " +
                                          std::to_string(options.ready_timeout_s) + " s: " + tail);
}

void RmProcess::Stop(double timeout_s) {
  if (!process_.valid()) return;
  auto start = Clock::now();
  if (!endpoint_.empty()) StopCluster(endpoint_, timeout_s);
  double left = timeout_s - std::chrono::duration<double>(Clock::now() - start).count();
  if (!process_.WaitFor(std::chrono::milliseconds(static_cast<int64_t>(std::max(left, 0.0) * 1000)))) {
    process_.Terminate(std::chrono::milliseconds(1000));
  }
}

bool StopCluster(const std::string &endpoint, double timeout_s) {
  try {
    RmClient(endpoint, 2).Shutdown();
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kUnreachable) return true;
  }
  auto deadline = Clock::now() + std::chrono::microseconds(static_cast<int64_t>(timeout_s * 1e6));
  while (Clock::now() < deadline) {
    try {
      RmClient(endpoint, 1).GetHealth();
    } catch (const Error &e) {
      if (e.code() == ErrorCode::kUnreachable) return true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return false;
}

}  // namespace pilotlet::minicluster
