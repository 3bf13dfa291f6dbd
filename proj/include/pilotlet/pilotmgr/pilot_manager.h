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

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pilotlet/core/error.h"
#include "pilotlet/core/types.h"
#include "pilotlet/saga/job.h"
#include "pilotlet/statestore/state_store.h"

namespace pilotlet::pilotmgr {

/// A pilot as seen from the client. Reads go to the store, so copies may be
/// polled from any thread.
class PilotHandle {
 public:
  PilotHandle() = default;
  PilotHandle(std::string pilot_id, std::shared_ptr<store::StateStore> store,
              saga::JobHandle job)
      : pilot_id_(std::move(pilot_id)), store_(std::move(store)), job_(std::move(job)) {}

  const std::string &pilot_id() const { return pilot_id_; }
  const saga::JobHandle &job() const { return job_; }
  PilotState state() const { return record().state; }
  store::PilotRecord record() const { return store_->GetPilot(pilot_id_); }

 private:
  std::string pilot_id_;
  std::shared_ptr<store::StateStore> store_;
  saga::JobHandle job_;
};

class UnitHandle {
 public:
  UnitHandle() = default;
  UnitHandle(std::string unit_id, std::string pilot_id, std::shared_ptr<store::StateStore> store)
      : unit_id_(std::move(unit_id)), pilot_id_(std::move(pilot_id)), store_(std::move(store)) {}

  const std::string &unit_id() const { return unit_id_; }
  const std::string &pilot_id() const { return pilot_id_; }
  UnitState state() const { return record().state; }
  std::optional<int64_t> exit_code() const { return record().exit_code; }
  std::string stdout_tail() const { return record().stdout_tail; }
  store::UnitRecord record() const { return store_->GetUnit(unit_id_); }

 private:
  std::string unit_id_;
  std::string pilot_id_;
  std::shared_ptr<store::StateStore> store_;
};

/// kTimeout from WaitUnits, with the states reached so far.
class WaitTimeout : public Error {
 public:
  WaitTimeout(const std::string &message, std::map<std::string, UnitState> partial)
      : Error(ErrorCode::kTimeout, message), partial_(std::move(partial)) {}
  const std::map<std::string, UnitState> &partial() const { return partial_; }

 private:
  std::map<std::string, UnitState> partial_;
};

struct ManagerOptions {
  /// Store shared with the agents; a filesystem path.
  std::string store_location;
  /// Agent executable. Defaults to pilotlet-agent next to this program.
  std::optional<std::filesystem::path> agent_binary;
  double boot_delay_s = 0;
  double agent_poll_interval_s = 0.5;
  double agent_monitor_interval_s = 0.2;
  double agent_heartbeat_interval_s = 2.0;
  /// Missing heartbeats for this long fail an ACTIVE pilot.
  double heartbeat_timeout_s = 10;
  /// Added to the pilot runtime for the batch wall-time limit.
  double wall_time_grace_s = 30;
  double watch_interval_s = 0.1;
  /// Extra environment for the agent process.
  std::map<std::string, std::string> agent_env;
};

/// Pilot-Manager and Unit-Manager in one object: launches agents through a
/// job adaptor and hands units to live pilots through the store.
class PilotManager {
 public:
  explicit PilotManager(ManagerOptions options);
  /// Cancels every pilot it started that is still running.
  ~PilotManager();

  PilotManager(const PilotManager &) = delete;
  PilotManager &operator=(const PilotManager &) = delete;

  /// Routes pilots whose resource_name is `resource` to `adaptor`. "local"
  /// and "simbatch" get default adaptors on first use.
  void AddAdaptor(const std::string &resource, std::shared_ptr<saga::JobAdaptor> adaptor);

  std::shared_ptr<store::StateStore> store() const { return store_; }

  /// Throws kValidation (nothing stored) or kSubmitFailed (pilot FAILED).
  PilotHandle SubmitPilot(const PilotDescription &d);
  /// Waits until the pilot is ACTIVE or terminal; returns the state reached.
  PilotState WaitPilot(const PilotHandle &pilot, double timeout_s);

  /// Round-robin over the pilots that are not terminal, skipping pilots too
  /// small for a unit. Throws kValidation (no unit stored) and
  /// kNoActivePilot.
  std::vector<UnitHandle> SubmitUnits(const std::vector<PilotHandle> &pilots,
                                      std::vector<ComputeUnitDescription> units);
  std::vector<UnitHandle> SubmitUnits(const PilotHandle &pilot,
                                      std::vector<ComputeUnitDescription> units);

  /// Blocks until every unit is terminal. Throws WaitTimeout.
  std::map<std::string, UnitState> WaitUnits(const std::vector<UnitHandle> &units,
                                             double timeout_s);

  /// Idempotent. Returns the pilot's final state.
  PilotState CancelPilot(const PilotHandle &pilot);

 private:
  struct Managed {
    PilotHandle handle;
    std::shared_ptr<saga::JobAdaptor> adaptor;
  };

  std::shared_ptr<saga::JobAdaptor> AdaptorFor(const std::string &resource);
  std::vector<std::string> AgentArguments(const std::string &pilot_id,
                                          const PilotDescription &d,
                                          const std::filesystem::path &sandbox) const;
  void EndUnits(const std::string &pilot_id, UnitState state, const std::string &why);
  void FailPilot(const Managed &m, const std::string &why);
  void WatchLoop();
  void CheckPilot(const Managed &m);

  ManagerOptions options_;
  std::shared_ptr<store::StateStore> store_;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::map<std::string, std::shared_ptr<saga::JobAdaptor>> adaptors_;
  std::map<std::string, Managed> pilots_;
  std::thread watcher_;
};

}  // namespace pilotlet::pilotmgr
