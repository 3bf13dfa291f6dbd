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

#include "pilotlet/agent/agent.h"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "pilotlet/agent/launch.h"
#include "pilotlet/agent/scheduler.h"
#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/core/process.h"
#include "pilotlet/minicluster/config.h"
#include "pilotlet/minicluster/rm_client.h"
#include "pilotlet/minicluster/rm_server.h"

namespace pilotlet::agent {

namespace fs = std::filesystem;
using minicluster::AppReport;
using minicluster::RmClient;

namespace {

std::chrono::microseconds Micros(double seconds) {
  return std::chrono::microseconds(static_cast<int64_t>(seconds * 1e6));
}

void Log(const std::string &pilot_id, const std::string &msg) {
  std::cerr << "[agent " << pilot_id << "] " << msg << std::endl;
}

/// Runs store writes one at a time, in submission order.
class SerialExecutor {
 public:
  SerialExecutor() : thread_([this] { Loop(); }) {}
  ~SerialExecutor() { Stop(); }

  void Post(std::function<void()> fn) {
    std::lock_guard<std::mutex> lk(mu_);
    queue_.push_back(std::move(fn));
    cv_.notify_all();
  }

  /// Waits until everything posted so far has run.
  void Drain() {
    std::unique_lock<std::mutex> lk(mu_);
    idle_cv_.wait(lk, [&] { return queue_.empty() && !busy_; });
  }

  void Stop() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (stopping_) return;
      stopping_ = true;
      cv_.notify_all();
    }
    if (thread_.joinable()) thread_.join();
  }

 private:
  void Loop() {
    std::unique_lock<std::mutex> lk(mu_);
    while (true) {
      cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      auto fn = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
      lk.unlock();
      fn();
      lk.lock();
      busy_ = false;
      if (queue_.empty()) idle_cv_.notify_all();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::function<void()>> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread thread_;
};

struct Execution {
  store::UnitRecord rec;
  LaunchMethod method = LaunchMethod::kFork;
  fs::path dir;
  std::optional<Slot> slot;
  ChildProcess proc;
  std::string app_id;
  bool executing = false;
  bool canceled = false;
};

TimingRecord AtMono(const std::string &entity, const std::string &event, int64_t mono_us) {
  return {entity, event, mono_us, WallMicros() - (MonotonicMicros() - mono_us)};
}

}  // namespace

class Agent::Impl {
 public:
  Impl(AgentOptions options, std::shared_ptr<store::StateStore> store)
      : opt_(std::move(options)), store_(std::move(store)), agent_id_("agent." + opt_.pilot_id) {}

  int Run();

  void RequestStop(bool cancel) {
    std::lock_guard<std::mutex> lk(mu_);
    if (!stop_) cancel_ = cancel;
    stop_ = true;
    cv_.notify_all();
  }

 private:
  fs::path PilotDir() const { return opt_.sandbox / opt_.pilot_id; }
  bool Stopping() {
    std::lock_guard<std::mutex> lk(mu_);
    return stop_;
  }
  /// Sleeps up to `seconds`; returns false when the agent is stopping.
  bool Sleep(double seconds) {
    std::unique_lock<std::mutex> lk(mu_);
    return !cv_.wait_for(lk, Micros(seconds), [&] { return stop_; });
  }

  void PostUnit(const std::string &unit_id, UnitState state, store::UnitPatch patch = {});
  void PostPilot(std::optional<PilotState> state, store::PilotPatch patch = {});
  void AdvancePilot(PilotState target);
  void FailPilot(const std::string &why);
  void Bootstrap();

  void PullLoop();
  void ScheduleLoop();
  void MonitorLoop();
  void HeartbeatLoop();

  void SchedulePass(std::unique_lock<std::mutex> &lk);
  std::optional<minicluster::Metrics> FetchMetrics();
  void Launch(const std::shared_ptr<Execution> &ex);
  void MarkDispatched();
  void FailUnit(const std::shared_ptr<Execution> &ex, const std::string &why,
                std::optional<int64_t> exit_code = std::nullopt);
  void Finish(const std::shared_ptr<Execution> &ex, int exit_code, const AppReport *report);
  void Release(const std::shared_ptr<Execution> &ex);
  void ObserveApp(const std::shared_ptr<Execution> &ex, const AppReport &report);
  void Reconcile(uint64_t &cursor);
  void KillExecution(const std::shared_ptr<Execution> &ex);
  void Shutdown();

  AgentOptions opt_;
  std::shared_ptr<store::StateStore> store_;
  std::string agent_id_;
  ClusterInfo info_;
  std::unique_ptr<SlotInventory> inventory_;
  std::optional<minicluster::RmProcess> rm_;
  std::string cluster_url_;
  std::unique_ptr<SerialExecutor> updater_;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  bool cancel_ = false;
  bool wake_ = false;
  bool dispatched_ = false;
  std::deque<std::shared_ptr<Execution>> queue_;
  std::map<std::string, std::shared_ptr<Execution>> running_;
};

void Agent::Impl::PostUnit(const std::string &unit_id, UnitState state, store::UnitPatch patch) {
  updater_->Post([this, unit_id, state, patch = std::move(patch)] {
    try {
      store_->UpdateUnit(unit_id, state, patch);
    } catch (const Error &e) {
      // Units ended by the manager reject further transitions.
      if (e.code() != ErrorCode::kIllegalTransition) {
        Log(opt_.pilot_id, unit_id + " -> " + std::string(ToString(state)) + ": " + e.what());
      }
    }
  });
}

void Agent::Impl::PostPilot(std::optional<PilotState> state, store::PilotPatch patch) {
  updater_->Post([this, state, patch = std::move(patch)] {
    try {
      store_->UpdatePilot(opt_.pilot_id, state, patch);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kIllegalTransition) Log(opt_.pilot_id, e.what());
    }
  });
}

void Agent::Impl::AdvancePilot(PilotState target) {
  static constexpr PilotState kPath[] = {PilotState::kPendingLaunch, PilotState::kLaunching,
                                         PilotState::kActive};
  for (PilotState step : kPath) {
    store::PilotRecord current = store_->GetPilot(opt_.pilot_id);
    if (IsTerminal(current.state)) {
      throw Error(ErrorCode::kAlreadyTerminal,
                  "pilot is " + std::string(ToString(current.state)));
    }
    if (static_cast<int>(current.state) < static_cast<int>(step)) {
      try {
        store_->UpdatePilot(opt_.pilot_id, step);
      } catch (const Error &e) {
        if (e.code() != ErrorCode::kIllegalTransition) throw;
      }
    }
    if (step == target) return;
  }
}

void Agent::Impl::FailPilot(const std::string &why) {
  Log(opt_.pilot_id, "pilot failed: " + why);
  store::PilotPatch patch;
  patch.error = why;
  patch.timings.push_back(Stamp(opt_.pilot_id, "agent_stop"));
  try {
    store_->UpdatePilot(opt_.pilot_id, PilotState::kFailed, patch);
  } catch (const Error &e) {
    Log(opt_.pilot_id, e.what());
  }
}

void Agent::Impl::Bootstrap() {
  store::PilotPatch patch;
  if (opt_.mode == ClusterMode::kSpawn) {
    patch.timings.push_back(Stamp(opt_.pilot_id, "cluster_boot_start"));
    if (opt_.boot_delay_s > 0 && !Sleep(opt_.boot_delay_s)) {
      throw Error(ErrorCode::kBootFailed, "stopped during cluster boot");
    }
    fs::path cluster_dir = fs::absolute(PilotDir() / "cluster");
    minicluster::GenerateConfigs(MiniClusterFor(info_, opt_.flavor), cluster_dir / "conf");
    minicluster::RmProcess::Options rm;
    rm.conf_dir = cluster_dir / "conf";
    rm.scratch_dir = cluster_dir / "scratch";
    rm.die_with_parent = true;
    rm.log_path = cluster_dir / "rm.log";
    rm.ready_timeout_s = opt_.boot_timeout_s;
    rm_ = minicluster::RmProcess::Start(rm);
    cluster_url_ = rm_->endpoint();
    patch.timings.push_back(Stamp(opt_.pilot_id, "cluster_boot_end"));
  } else {
    if (!opt_.connect_url || opt_.connect_url->empty()) {
      throw Error(ErrorCode::kConnectFailed, "CONNECT mode needs a cluster URL");
    }
    cluster_url_ = *opt_.connect_url;
    minicluster::Health health;
    try {
      health = RmClient(cluster_url_, 5).GetHealth();
    } catch (const Error &e) {
      throw Error(ErrorCode::kConnectFailed, cluster_url_ + ": " + e.what());
    }
    if (!health.ready) throw Error(ErrorCode::kConnectFailed, cluster_url_ + " is not ready");
    if (health.flavor != opt_.flavor) {
      throw Error(ErrorCode::kConnectFailed, cluster_url_ + " runs a " +
                                                 std::string(ToString(health.flavor)) +
                                                 " cluster");
    }
    TimingRecord ready = Stamp(opt_.pilot_id, "cluster_boot_start");
    patch.timings.push_back(ready);
    ready.event_name = "cluster_boot_end";
    patch.timings.push_back(ready);
  }
  info_.flavor_endpoint = cluster_url_;
  patch.cluster_endpoint = cluster_url_;
  store_->UpdatePilot(opt_.pilot_id, std::nullopt, patch);
}

int Agent::Impl::Run() {
  TimingRecord start = Stamp(opt_.pilot_id, "agent_start");
  try {
    if (!store_) store_ = store::OpenStore(opt_.store_location);
  } catch (const std::exception &e) {
    Log(opt_.pilot_id, std::string("cannot open store: ") + e.what());
    return 1;
  }
  updater_ = std::make_unique<SerialExecutor>();

  try {
    store::PilotPatch patch;
    patch.agent_endpoint = Hostname() + ":" + std::to_string(::getpid());
    patch.last_heartbeat_us = MonotonicMicros();
    patch.timings.push_back(start);
    store_->UpdatePilot(opt_.pilot_id, std::nullopt, patch);
    AdvancePilot(PilotState::kLaunching);
    info_ = opt_.resources ? *opt_.resources : DetectResourcesFromEnvironment();
    inventory_ = std::make_unique<SlotInventory>(info_);
    if (opt_.flavor != ClusterFlavor::kNone) Bootstrap();
    AdvancePilot(PilotState::kActive);
    store::PilotPatch active;
    active.timings.push_back(Stamp(opt_.pilot_id, "agent_active"));
    store_->UpdatePilot(opt_.pilot_id, std::nullopt, active);
  } catch (const Error &e) {
    if (rm_) rm_->Stop(3);
    if (e.code() == ErrorCode::kAlreadyTerminal) {
      Log(opt_.pilot_id, e.what());
      return 0;
    }
    FailPilot(std::string(ToString(e.code())) + ": " + e.what());
    return 1;
  } catch (const std::exception &e) {
    if (rm_) rm_->Stop(3);
    FailPilot(e.what());
    return 1;
  }
  Log(opt_.pilot_id, "active with " + std::to_string(info_.total_cores) + " cores on " +
                         std::to_string(info_.nodes.size()) + " node(s)" +
                         (cluster_url_.empty() ? "" : ", cluster " + cluster_url_));

  std::thread puller([this] { PullLoop(); });
  std::thread scheduler([this] { ScheduleLoop(); });
  std::thread monitor([this] { MonitorLoop(); });
  std::thread heartbeat([this] { HeartbeatLoop(); });
  {
    std::unique_lock<std::mutex> lk(mu_);
    if (opt_.runtime_s > 0) {
      if (!cv_.wait_for(lk, Micros(opt_.runtime_s), [&] { return stop_; })) {
        Log(opt_.pilot_id, "runtime expired");
        stop_ = true;
        cancel_ = false;
        cv_.notify_all();
      }
    } else {
      cv_.wait(lk, [&] { return stop_; });
    }
  }
  puller.join();
  scheduler.join();
  monitor.join();
  heartbeat.join();
  Shutdown();
  return 0;
}

void Agent::Impl::PullLoop() {
  do {
    std::vector<store::UnitRecord> claimed;
    try {
      claimed = store_->ClaimUnits(agent_id_, opt_.pilot_id, opt_.claim_batch);
    } catch (const Error &e) {
      Log(opt_.pilot_id, std::string("claim failed: ") + e.what());
    }
    if (!claimed.empty()) {
      std::lock_guard<std::mutex> lk(mu_);
      for (auto &rec : claimed) {
        auto ex = std::make_shared<Execution>();
        ex->rec = std::move(rec);
        ex->dir = fs::absolute(PilotDir() / ex->rec.unit_id);
        queue_.push_back(std::move(ex));
      }
      wake_ = true;
      cv_.notify_all();
    }
  } while (Sleep(opt_.poll_interval_s));
}

void Agent::Impl::ScheduleLoop() {
  std::unique_lock<std::mutex> lk(mu_);
  while (!stop_) {
    cv_.wait_for(lk, std::chrono::seconds(1), [&] { return stop_ || wake_; });
    if (stop_) break;
    wake_ = false;
    SchedulePass(lk);
  }
}

std::optional<minicluster::Metrics> Agent::Impl::FetchMetrics() {
  for (int attempt = 0; attempt < 3; ++attempt) {
    try {
      return RmClient(cluster_url_, 5).GetMetrics();
    } catch (const Error &e) {
      Log(opt_.pilot_id, std::string("metrics: ") + e.what());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  return std::nullopt;
}

void Agent::Impl::SchedulePass(std::unique_lock<std::mutex> &lk) {
  std::vector<std::shared_ptr<Execution>> approved;
  std::vector<std::pair<std::shared_ptr<Execution>, std::string>> rejected;
  std::optional<minicluster::Resource> headroom;
  minicluster::Resource total;
  bool metrics_down = false;

  for (auto it = queue_.begin(); it != queue_.end();) {
    auto &ex = *it;
    const auto &cu = ex->rec.description;
    try {
      ex->method = ResolveLaunchMethod(cu.launch_method_hint, opt_.flavor, !cluster_url_.empty());
    } catch (const Error &e) {
      rejected.emplace_back(ex, std::string(ToString(e.code())) + ": " + e.what());
      it = queue_.erase(it);
      continue;
    }
    bool place = false;
    if (ex->method == LaunchMethod::kFork) {
      try {
        ex->slot = ScheduleFork(cu.cores, *inventory_);
      } catch (const Error &e) {
        rejected.emplace_back(ex, std::string(ToString(e.code())) + ": " + e.what());
        it = queue_.erase(it);
        continue;
      }
      if (ex->slot) {
        inventory_->Acquire(*ex->slot);
        place = true;
      }
    } else {
      if (!headroom && !metrics_down) {
        lk.unlock();
        auto m = FetchMetrics();
        lk.lock();
        if (m) {
          headroom = Headroom(*m);
          total = m->total;
        } else {
          metrics_down = true;
        }
      }
      if (metrics_down) {
        rejected.emplace_back(ex, "METRICS_UNAVAILABLE: no metrics from " + cluster_url_);
        it = queue_.erase(it);
        continue;
      }
      bool fits_empty = ex->method == LaunchMethod::kYarn
                            ? ScheduleYarn(cu, total, opt_.am) == YarnDecision::kApprove
                            : total.vcores >= cu.cores;
      if (!fits_empty) {
        rejected.emplace_back(ex, "NEVER_FITS: the cluster has " + std::to_string(total.vcores) +
                                      " vcores and " + std::to_string(total.memory_mb) + " MB");
        it = queue_.erase(it);
        continue;
      }
      minicluster::Resource need{cu.cores, cu.memory_mb};
      if (ex->method == LaunchMethod::kYarn) {
        place = ScheduleYarn(cu, *headroom, opt_.am) == YarnDecision::kApprove;
        need += opt_.am;
      } else {
        place = headroom->vcores >= cu.cores;
        need.memory_mb = 0;
      }
      if (place) *headroom -= need;
    }
    if (place) {
      approved.push_back(ex);
      it = queue_.erase(it);
    } else {
      ++it;
    }
  }

  lk.unlock();
  for (auto &[ex, why] : rejected) FailUnit(ex, why);
  for (auto &ex : approved) Launch(ex);
  lk.lock();
}

void Agent::Impl::MarkDispatched() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    if (dispatched_) return;
    dispatched_ = true;
  }
  store::PilotPatch patch;
  patch.timings.push_back(Stamp(opt_.pilot_id, "first_unit_exec"));
  PostPilot(std::nullopt, patch);
}

void Agent::Impl::Launch(const std::shared_ptr<Execution> &ex) {
  const auto &cu = ex->rec.description;
  const std::string &id = ex->rec.unit_id;
  try {
    PrepareSandbox(ex->rec, ex->dir);
    StageIn(cu, ex->dir);
  } catch (const Error &e) {
    FailUnit(ex, std::string(ToString(e.code())) + ": " + e.what());
    return;
  }

  store::UnitPatch patch;
  patch.sandbox_path = ex->dir.string();
  patch.launch_method = ex->method;
  try {
    switch (ex->method) {
      case LaunchMethod::kFork: {
        const NodeInfo &node = info_.nodes[ex->slot->node_index];
        ex->proc = ChildProcess::Spawn(ForkSpawnOptions(ex->rec, ex->dir, *ex->slot, node));
        patch.placement = store::Placement{ex->slot->node_index, ex->slot->core_indices};
        ex->executing = true;
        break;
      }
      case LaunchMethod::kYarn:
        ex->app_id = RmClient(cluster_url_, 10).SubmitApp(ClusterAppSpec(ex->rec, ex->dir, opt_.am));
        patch.app_id = ex->app_id;
        break;
      case LaunchMethod::kSpark:
        ex->app_id = RmClient(cluster_url_, 10).SparkSubmit(ClusterAppSpec(ex->rec, ex->dir, opt_.am));
        break;
    }
  } catch (const Error &e) {
    FailUnit(ex, "SPAWN_FAILED: " + std::string(e.what()));
    return;
  }

  MarkDispatched();
  if (ex->method == LaunchMethod::kFork) {
    PostUnit(id, UnitState::kExecuting, patch);
  } else if (ex->method == LaunchMethod::kYarn) {
    PostUnit(id, UnitState::kAllocating, patch);
  }
  std::lock_guard<std::mutex> lk(mu_);
  running_[id] = ex;
}

void Agent::Impl::FailUnit(const std::shared_ptr<Execution> &ex, const std::string &why,
                           std::optional<int64_t> exit_code) {
  Log(opt_.pilot_id, ex->rec.unit_id + " failed: " + why);
  store::UnitPatch patch;
  patch.error = why;
  patch.exit_code = exit_code;
  if (fs::exists(ex->dir)) patch.sandbox_path = ex->dir.string();
  PostUnit(ex->rec.unit_id, UnitState::kFailed, patch);
  Release(ex);
}

void Agent::Impl::Release(const std::shared_ptr<Execution> &ex) {
  std::lock_guard<std::mutex> lk(mu_);
  if (ex->slot) {
    inventory_->Release(*ex->slot);
    ex->slot.reset();
  }
  running_.erase(ex->rec.unit_id);
  wake_ = true;
  cv_.notify_all();
}

void Agent::Impl::ObserveApp(const std::shared_ptr<Execution> &ex, const AppReport &report) {
  if (!ex->executing) {
    for (const auto &c : report.containers) {
      if (c.role == "AM" || c.started_us == 0) continue;
      ex->executing = true;
      store::UnitPatch patch;
      patch.launch_method = ex->method;
      patch.app_id = ex->app_id;
      PostUnit(ex->rec.unit_id, UnitState::kExecuting, patch);
      break;
    }
  }
  if (!minicluster::IsTerminal(report.state)) return;
  int code = report.exit_code.value_or(1);
  if (auto from_log = AppLogExitCode(TailOfFile(report.log_path, 4096))) code = *from_log;
  Finish(ex, code, &report);
}

void Agent::Impl::Finish(const std::shared_ptr<Execution> &ex, int exit_code,
                         const AppReport *report) {
  const std::string &id = ex->rec.unit_id;
  if (ex->canceled) {
    Release(ex);
    return;
  }
  store::UnitPatch patch;
  patch.exit_code = exit_code;
  patch.stdout_tail = TailOfFile(ex->dir / "stdout");
  patch.stderr_tail = TailOfFile(ex->dir / "stderr");
  if (report) {
    for (const auto &c : report->containers) {
      std::string role = c.role == "AM" ? "am" : "task";
      if (c.allocated_us) patch.timings.push_back(AtMono(id, role + "_allocated", c.allocated_us));
      if (c.started_us) patch.timings.push_back(AtMono(id, role + "_started", c.started_us));
      if (c.released_us) patch.timings.push_back(AtMono(id, role + "_released", c.released_us));
    }
  }
  if (!ex->executing) {
    patch.error = "application ended " + std::string(minicluster::ToString(report->state)) +
                  " before its task started";
    PostUnit(id, UnitState::kFailed, patch);
    Release(ex);
    return;
  }
  PostUnit(id, UnitState::kStagingOut);
  UnitState final_state = exit_code == 0 ? UnitState::kDone : UnitState::kFailed;
  try {
    StageOut(ex->rec.description, ex->dir);
  } catch (const Error &e) {
    patch.error = std::string(ToString(e.code())) + ": " + e.what();
    final_state = UnitState::kFailed;
  }
  if (final_state == UnitState::kFailed && !patch.error) {
    patch.error = "exit code " + std::to_string(exit_code);
  }
  PostUnit(id, final_state, patch);
  Release(ex);
}

void Agent::Impl::KillExecution(const std::shared_ptr<Execution> &ex) {
  try {
    switch (ex->method) {
      case LaunchMethod::kFork:
        if (ex->proc.valid() && !ex->proc.exit_status()) ex->proc.Signal(SIGTERM);
        break;
      case LaunchMethod::kYarn:
        RmClient(cluster_url_, 10).KillApp(ex->app_id);
        break;
      case LaunchMethod::kSpark:
        RmClient(cluster_url_, 10).SparkKill(ex->app_id);
        break;
    }
  } catch (const Error &e) {
    Log(opt_.pilot_id, "kill " + ex->rec.unit_id + ": " + e.what());
  }
}

void Agent::Impl::Reconcile(uint64_t &cursor) {
  store::WatchBatch batch;
  try {
    batch = store_->Watch(opt_.pilot_id, cursor);
  } catch (const Error &e) {
    Log(opt_.pilot_id, std::string("watch: ") + e.what());
    return;
  }
  cursor = batch.cursor;
  for (const auto &e : batch.events) {
    if (e.entity_id == opt_.pilot_id) {
      auto state = ParseEnum<PilotState>(e.new_state);
      if (state && IsTerminal(*state)) RequestStop(true);
      continue;
    }
    if (e.new_state != "CANCELED") continue;
    std::shared_ptr<Execution> ex;
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = running_.find(e.entity_id);
      if (it != running_.end()) {
        ex = it->second;
      } else {
        auto q = std::find_if(queue_.begin(), queue_.end(),
                              [&](const auto &x) { return x->rec.unit_id == e.entity_id; });
        if (q != queue_.end()) queue_.erase(q);
      }
    }
    if (ex && !ex->canceled) {
      ex->canceled = true;
      KillExecution(ex);
    }
  }
}

void Agent::Impl::MonitorLoop() {
  uint64_t cursor = 0;
  try {
    cursor = store_->Watch(opt_.pilot_id, 0).cursor;
  } catch (const Error &) {
  }
  do {
    Reconcile(cursor);
    std::vector<std::shared_ptr<Execution>> live;
    bool cluster_units = false;
    {
      std::lock_guard<std::mutex> lk(mu_);
      for (auto &[id, ex] : running_) {
        live.push_back(ex);
        cluster_units |= ex->method != LaunchMethod::kFork;
      }
    }
    std::map<std::string, AppReport> apps;
    if (cluster_units) {
      try {
        for (auto &a : RmClient(cluster_url_, 10).ListApps()) apps.emplace(a.id, std::move(a));
      } catch (const Error &e) {
        Log(opt_.pilot_id, std::string("list apps: ") + e.what());
      }
    }
    for (auto &ex : live) {
      if (ex->method == LaunchMethod::kFork) {
        if (auto status = ex->proc.TryWait()) Finish(ex, *status, nullptr);
      } else if (auto it = apps.find(ex->app_id); it != apps.end()) {
        ObserveApp(ex, it->second);
      }
    }
  } while (Sleep(opt_.monitor_interval_s));
}

void Agent::Impl::HeartbeatLoop() {
  while (Sleep(opt_.heartbeat_interval_s)) {
    store::PilotPatch patch;
    patch.last_heartbeat_us = MonotonicMicros();
    PostPilot(std::nullopt, patch);
  }
}

void Agent::Impl::Shutdown() {
  bool cancel;
  std::deque<std::shared_ptr<Execution>> queued;
  std::vector<std::shared_ptr<Execution>> live;
  {
    std::lock_guard<std::mutex> lk(mu_);
    cancel = cancel_;
    queued.swap(queue_);
    for (auto &[id, ex] : running_) live.push_back(ex);
  }
  Log(opt_.pilot_id, "shutting down: " + std::to_string(live.size()) + " running, " +
                         std::to_string(queued.size()) + " queued");
  for (auto &ex : queued) {
    store::UnitPatch patch;
    patch.error = "pilot ended before the unit was started";
    PostUnit(ex->rec.unit_id, UnitState::kCanceled, patch);
  }
  for (auto &ex : live) {
    if (ex->method == LaunchMethod::kFork && ex->proc.valid() && !ex->proc.exit_status()) {
      ex->proc.Signal(SIGTERM);
    }
  }
  for (auto &ex : live) {
    if (ex->method == LaunchMethod::kFork) {
      if (ex->proc.valid() && !ex->proc.exit_status()) ex->proc.Terminate(std::chrono::milliseconds(1000));
    } else if (opt_.mode == ClusterMode::kConnect && !ex->canceled) {
      KillExecution(ex);
    }
    if (!ex->canceled) {
      store::UnitPatch patch;
      patch.error = "pilot ended while the unit was running";
      patch.stdout_tail = TailOfFile(ex->dir / "stdout");
      patch.stderr_tail = TailOfFile(ex->dir / "stderr");
      PostUnit(ex->rec.unit_id, UnitState::kCanceled, patch);
    }
    Release(ex);
  }
  if (rm_) {
    rm_->Stop(3);
    rm_.reset();
  }
  store::PilotPatch patch;
  patch.timings.push_back(Stamp(opt_.pilot_id, "agent_stop"));
  PostPilot(cancel ? PilotState::kCanceled : PilotState::kDone, patch);
  updater_->Drain();
  updater_->Stop();
}

Agent::Agent(AgentOptions options, std::shared_ptr<store::StateStore> store)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(store))) {}

Agent::~Agent() = default;

int Agent::Run() { return impl_->Run(); }

void Agent::RequestStop(bool cancel) { impl_->RequestStop(cancel); }

}  // namespace pilotlet::agent
