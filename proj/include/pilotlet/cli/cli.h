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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilotlet/core/types.h"
#include "pilotlet/statestore/state_store.h"

namespace pilotlet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `pilotlet` command. `args` excludes the program name.
int ParseAndDispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Makes running commands cancel their pilot and return. Async-signal-safe.
void RequestInterrupt();

struct StatusReport {
  store::PilotRecord pilot;
  /// Every unit state, zero when absent.
  std::map<std::string, int64_t> unit_counts;
  int64_t total_units = 0;
  /// The last ten events of the pilot and its units, oldest first.
  std::vector<store::Event> recent_events;
};

/// Throws kUnknownPilot.
StatusReport BuildStatus(store::StateStore &store, const std::string &pilot_id);
std::string FormatStatusText(const StatusReport &r);
nlohmann::json StatusToJson(const StatusReport &r);

struct ClusterHandle {
  std::string endpoint;
  int64_t pid = 0;
};

/// Starts a detached mini-cluster of `nodes` identical nodes and writes
/// `endpoint` and `pid` files into `dir`.
ClusterHandle ClusterUp(const std::filesystem::path &dir, ClusterFlavor flavor, int64_t nodes,
                        int64_t cores_per_node, int64_t memory_mb_per_node);
/// Stops the cluster recorded in `dir`. Throws kIoFailed without an endpoint
/// file, kTimeout when it does not stop.
void ClusterDown(const std::filesystem::path &dir);

}  // namespace pilotlet::cli
