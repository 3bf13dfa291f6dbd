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

#include "pilotlet/pilotmgr/pilot_manager.h"

#include <chrono>
#include <iostream>
#include <limits>
#include <sstream>

#include "pilotlet/core/process.h"
#include "pilotlet/core/validate.h"

namespace pilotlet::pilotmgr {

namespace fs = std::filesystem;

namespace {

std::string FlavorFlag(ClusterFlavor f) {
  switch (f) {
    case ClusterFlavor::kNone:
      return "none";
    case ClusterFlavor::kYarnLike:
      return "yarn";
    case ClusterFlavor::kSparkLike:
      return "spark";
  }
  return "none";
}

std::string Number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

PilotManager::PilotManager(ManagerOptions options) : options_(std::move(options)) {
  if (options_.store_location.empty() || options_.store_location.rfind("mem://", 0) == 0) {
    throw Error(ErrorCode::kValidation,
                "agents run as separate processes and need a file store, got '" +
                    options_.store_location + "'");
  }
  options_.store_location = fs::absolute(options_.store_location).string();
  store_ = store::OpenStore(options_.store_location);
  watcher_ = std::thread([this] { WatchLoop(); });
}

PilotManager::~PilotManager() {
  std::vector<PilotHandle> live;
  {
    std::lock_guard<std::mutex> lk(mu_);
    for (auto &[id, m] : pilots_) live.push_back(m.handle);
  }
  for (auto &p : live) {
    try {
      CancelPilot(p);
    } catch (const std::exception &e) {
      std::cerr << "cancel " << p.pilot_id() << ": " << e.what() << std::endl;
    }
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    stopping_ = true;
    cv_.notify_all();
  }
  watcher_.join();
}

void PilotManager::AddAdaptor(const std::string &resource,
                              std::shared_ptr<saga::JobAdaptor> adaptor) {
  std::lock_guard<std::mutex> lk(mu_);
  adaptors_[resource] = std::move(adaptor);
}

std::shared_ptr<saga::JobAdaptor> PilotManager::AdaptorFor(const std::string &resource) {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = adaptors_.find(resource);
  if (it != adaptors_.end()) return it->second;
  std::shared_ptr<saga::JobAdaptor> adaptor;
  if (resource == "local") {
    adaptor = std::make_shared<saga::LocalAdaptor>();
  } else if (resource == "simbatch") {
    adaptor = std::make_shared<saga::SimBatchAdaptor>();
  } else {
    throw Error(ErrorCode::kValidation, "no adaptor for resource '" + resource + "'");
  }
  adaptors_[resource] = adaptor;
  return adaptor;
}

std::vector<std::string> PilotManager::AgentArguments(const std::string &pilot_id,
                                                      const PilotDescription &d,
                                                      const fs::path &sandbox) const {
  std::vector<std::string> args = {"--pilot-id", pilot_id,
                                   "--store", options_.store_location,
                                   "--flavor", FlavorFlag(d.cluster_flavor),
                                   "--mode", d.cluster_mode == ClusterMode::kSpawn ? "spawn" : "connect",
                                   "--sandbox", sandbox.string(),
                                   "--boot-delay-s", Number(options_.boot_delay_s),
                                   "--runtime-s", std::to_string(d.runtime_s),
                                   "--poll-interval-s", Number(options_.agent_poll_interval_s),
                                   "--monitor-interval-s", Number(options_.agent_monitor_interval_s),
                                   "--heartbeat-interval-s", Number(options_.agent_heartbeat_interval_s)};
  if (d.connect_url) {
    args.push_back("--connect-url");
    args.push_back(*d.connect_url);
  }
  return args;
}

PilotHandle PilotManager::SubmitPilot(const PilotDescription &d) {
  ValidatePilotDescription(d);
  auto adaptor = AdaptorFor(d.resource_name);

  store::PilotRecord rec;
  rec.description = d;
  rec.description.sandbox_root = fs::absolute(d.sandbox_root).string();
  std::string pilot_id = store_->RegisterPilot(rec);
  store::PilotPatch submitted;
  submitted.timings.push_back(Stamp(pilot_id, "pilot_submit"));
  store_->UpdatePilot(pilot_id, PilotState::kPendingLaunch, submitted);

  fs::path sandbox = rec.description.sandbox_root;
  fs::path pilot_dir = sandbox / pilot_id;
  saga::JobDescription job;
  job.executable = options_.agent_binary ? options_.agent_binary->string()
                                         : SiblingBinary("pilotlet-agent").string();
  job.arguments = AgentArguments(pilot_id, d, sandbox);
  job.environment = options_.agent_env;
  job.working_directory = pilot_dir;
  job.total_cores = d.cores;
  job.memory_mb_per_node = d.memory_mb_per_node;
  job.wall_time_s = static_cast<double>(d.runtime_s) + options_.wall_time_grace_s;
  job.queue = d.queue;
  job.stdout_path = pilot_dir / "agent.out";
  job.stderr_path = pilot_dir / "agent.err";

  saga::JobHandle handle;
  try {
    fs::create_directories(pilot_dir);
    handle = adaptor->Submit(job);
  } catch (const std::exception &e) {
    store::PilotPatch patch;
    patch.error = std::string("SUBMIT_FAILED: ") + e.what();
    store_->UpdatePilot(pilot_id, PilotState::kFailed, patch);
    throw Error(ErrorCode::kSubmitFailed, pilot_id + ": " + e.what());
  }
  PilotHandle pilot(pilot_id, store_, handle);
  std::lock_guard<std::mutex> lk(mu_);
  pilots_[pilot_id] = Managed{pilot, adaptor};
  cv_.notify_all();
  return pilot;
}

PilotState PilotManager::WaitPilot(const PilotHandle &pilot, double timeout_s) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  while (true) {
    PilotState s = pilot.state();
    if (s == PilotState::kActive || IsTerminal(s)) return s;
    if (std::chrono::steady_clock::now() >= deadline) return s;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::vector<UnitHandle> PilotManager::SubmitUnits(const PilotHandle &pilot,
                                                  std::vector<ComputeUnitDescription> units) {
  return SubmitUnits(std::vector<PilotHandle>{pilot}, std::move(units));
}

std::vector<UnitHandle> PilotManager::SubmitUnits(const std::vector<PilotHandle> &pilots,
                                                  std::vector<ComputeUnitDescription> units) {
  std::vector<std::string> violations;
  for (size_t i = 0; i < units.size(); ++i) {
    for (const auto &v : CheckUnitDescription(units[i])) {
      violations.push_back("unit " + std::to_string(i) + ": " + v);
    }
  }
  if (!violations.empty()) {
    throw Error(ErrorCode::kValidation, "invalid unit descriptions", violations);
  }

  std::vector<store::PilotRecord> live;
  for (const auto &p : pilots) {
    store::PilotRecord rec = p.record();
    if (!IsTerminal(rec.state)) live.push_back(std::move(rec));
  }
  if (live.empty()) throw Error(ErrorCode::kNoActivePilot, "no live pilot to run the units");

  std::vector<size_t> target(units.size());
  size_t cursor = 0;
  for (size_t i = 0; i < units.size(); ++i) {
    bool placed = false;
    for (size_t k = 0; k < live.size() && !placed; ++k) {
      size_t p = (cursor + k) % live.size();
      if (units[i].cores <= live[p].description.cores) {
        target[i] = p;
        cursor = p + 1;
        placed = true;
      }
    }
    if (!placed) {
      violations.push_back("unit " + std::to_string(i) + ": needs " +
                           std::to_string(units[i].cores) + " cores, more than any pilot has");
    }
  }
  if (!violations.empty()) {
    throw Error(ErrorCode::kValidation, "units cannot fit any pilot", violations);
  }

  std::vector<std::vector<size_t>> by_pilot(live.size());
  for (size_t i = 0; i < units.size(); ++i) by_pilot[target[i]].push_back(i);
  std::vector<UnitHandle> handles(units.size());
  for (size_t p = 0; p < live.size(); ++p) {
    if (by_pilot[p].empty()) continue;
    std::vector<store::UnitRecord> recs;
    for (size_t i : by_pilot[p]) {
      store::UnitRecord r;
      r.description = std::move(units[i]);
      recs.push_back(std::move(r));
    }
    auto ids = store_->EnqueueUnits(live[p].pilot_id, std::move(recs));
    for (size_t j = 0; j < ids.size(); ++j) {
      handles[by_pilot[p][j]] = UnitHandle(ids[j], live[p].pilot_id, store_);
    }
  }
  return handles;
}

std::map<std::string, UnitState> PilotManager::WaitUnits(const std::vector<UnitHandle> &units,
                                                         double timeout_s) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  std::map<std::string, uint64_t> cursors;
  for (const auto &u : units) {
    if (!cursors.count(u.pilot_id())) {
      cursors[u.pilot_id()] =
          store_->Watch(u.pilot_id(), std::numeric_limits<uint64_t>::max()).cursor;
    }
  }
  std::map<std::string, UnitState> states;
  size_t open = 0;
  for (const auto &u : units) {
    UnitState s = u.state();
    states[u.unit_id()] = s;
    if (!IsTerminal(s)) ++open;
  }
  while (open > 0) {
    if (std::chrono::steady_clock::now() >= deadline) {
      throw WaitTimeout(std::to_string(open) + " of " + std::to_string(states.size()) +
                            " units still running",
                        states);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    for (auto &[pilot, cursor] : cursors) {
      auto batch = store_->Watch(pilot, cursor);
      cursor = batch.cursor;
      for (const auto &e : batch.events) {
        auto it = states.find(e.entity_id);
        if (it == states.end() || IsTerminal(it->second)) continue;
        auto s = ParseEnum<UnitState>(e.new_state);
        if (!s) continue;
        it->second = *s;
        if (IsTerminal(*s)) --open;
      }
    }
  }
  return states;
}

void PilotManager::EndUnits(const std::string &pilot_id, UnitState state, const std::string &why) {
  for (const auto &u : store_->ListUnits(pilot_id)) {
    if (IsTerminal(u.state)) continue;
    store::UnitPatch patch;
    patch.error = why;
    try {
      store_->UpdateUnit(u.unit_id, state, patch);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kIllegalTransition) throw;
    }
  }
}

PilotState PilotManager::CancelPilot(const PilotHandle &pilot) {
  std::shared_ptr<saga::JobAdaptor> adaptor;
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = pilots_.find(pilot.pilot_id());
    if (it != pilots_.end()) adaptor = it->second.adaptor;
  }
  store::PilotRecord rec = pilot.record();
  if (!IsTerminal(rec.state)) {
    try {
      store_->UpdatePilot(pilot.pilot_id(), PilotState::kCanceled);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kIllegalTransition) throw;
    }
  }
  if (adaptor) {
    try {
      adaptor->Cancel(pilot.job());
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kAlreadyTerminal) throw;
    }
  }
  PilotState final_state = pilot.state();
  if (final_state == PilotState::kCanceled) {
    EndUnits(pilot.pilot_id(), UnitState::kCanceled, "pilot canceled");
  }
  std::lock_guard<std::mutex> lk(mu_);
  pilots_.erase(pilot.pilot_id());
  return final_state;
}

void PilotManager::FailPilot(const Managed &m, const std::string &why) {
  std::cerr << "pilot " << m.handle.pilot_id() << " failed: " << why << std::endl;
  store::PilotPatch patch;
  patch.error = why;
  try {
    store_->UpdatePilot(m.handle.pilot_id(), PilotState::kFailed, patch);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kIllegalTransition) throw;
  }
  if (m.handle.state() == PilotState::kFailed) {
    EndUnits(m.handle.pilot_id(), UnitState::kFailed, "pilot failed: " + why);
  }
}

void PilotManager::CheckPilot(const Managed &m) {
  const std::string &id = m.handle.pilot_id();
  store::PilotRecord rec = m.handle.record();
  if (IsTerminal(rec.state)) {
    // The agent ended the pilot itself; units it did not finish are not coming back.
    if (rec.state == PilotState::kFailed) {
      EndUnits(id, UnitState::kFailed, "pilot failed: " + rec.error.value_or("unknown"));
    } else {
      EndUnits(id, UnitState::kCanceled, "pilot ended");
    }
    std::lock_guard<std::mutex> lk(mu_);
    pilots_.erase(id);
    return;
  }
  saga::JobState job = m.adaptor->State(m.handle.job());
  if (saga::IsTerminal(job)) {
    // Reread: the agent may have ended the pilot just before exiting.
    if (IsTerminal(m.handle.state())) return;
    auto info = m.adaptor->Info(m.handle.job());
    FailPilot(m, "agent job ended " + std::string(saga::ToString(job)) +
                     (info.exit_code ? " with exit code " + std::to_string(*info.exit_code) : ""));
    return;
  }
  if (rec.state == PilotState::kPendingLaunch) {
    try {
      store_->UpdatePilot(id, PilotState::kLaunching);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kIllegalTransition) throw;
    }
  }
  if (rec.state == PilotState::kActive && rec.last_heartbeat_us) {
    double silent_s = static_cast<double>(MonotonicMicros() - *rec.last_heartbeat_us) / 1e6;
    if (silent_s > options_.heartbeat_timeout_s) {
      FailPilot(m, "no heartbeat for " + Number(silent_s) + " s");
      try {
        m.adaptor->Cancel(m.handle.job());
      } catch (const Error &) {
      }
    }
  }
}

void PilotManager::WatchLoop() {
  std::unique_lock<std::mutex> lk(mu_);
  while (!stopping_) {
    cv_.wait_for(lk, std::chrono::duration<double>(options_.watch_interval_s));
    if (stopping_) break;
    std::vector<Managed> snapshot;
    for (auto &[id, m] : pilots_) snapshot.push_back(m);
    lk.unlock();
    for (const auto &m : snapshot) {
      try {
        CheckPilot(m);
      } catch (const std::exception &e) {
        std::cerr << "watch " << m.handle.pilot_id() << ": " << e.what() << std::endl;
      }
    }
    lk.lock();
  }
}

}  // namespace pilotlet::pilotmgr
