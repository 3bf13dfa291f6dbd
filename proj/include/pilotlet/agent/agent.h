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

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "pilotlet/agent/resources.h"
#include "pilotlet/core/types.h"
#include "pilotlet/minicluster/ledger.h"
#include "pilotlet/statestore/state_store.h"

namespace pilotlet::agent {

struct AgentOptions {
  std::string pilot_id;
  std::string store_location;
  ClusterFlavor flavor = ClusterFlavor::kNone;
  ClusterMode mode = ClusterMode::kSpawn;
  std::optional<std::string> connect_url;
  /// Unit sandboxes live under <sandbox>/<pilot_id>/<unit_id>.
  std::filesystem::path sandbox = "pilotlet-sandbox";
  double boot_delay_s = 0;
  /// Store poll interval of the unit puller.
  double poll_interval_s = 0.5;
  double monitor_interval_s = 0.2;
  double heartbeat_interval_s = 2.0;
  /// Wall-clock budget; <= 0 means until stopped.
  double runtime_s = 0;
  size_t claim_batch = 256;
  minicluster::Resource am = {1, 512};
  /// Health-check budget for a spawned mini-cluster.
  double boot_timeout_s = 30;
  /// Resources to use instead of reading the environment.
  std::optional<ClusterInfo> resources;
};

/// The resource-side executor of one pilot. Detects the allocation, brings up
/// or adopts a mini-cluster, then claims, places, launches and monitors the
/// pilot's units until stopped, the runtime expires or the pilot is ended
/// from outside.
class Agent {
 public:
  /// Uses `store` when given, else opens `options.store_location`.
  explicit Agent(AgentOptions options, std::shared_ptr<store::StateStore> store = nullptr);
  ~Agent();

  Agent(const Agent &) = delete;
  Agent &operator=(const Agent &) = delete;

  /// Blocks until the agent is done. Returns 0 on an orderly end and 1 when
  /// the pilot failed.
  int Run();
  /// Safe from any thread and from a signal-handling thread.
  void RequestStop(bool cancel = true);

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pilotlet::agent
