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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilotlet/core/types.h"

namespace pilotlet::store {

/// Where a FORK unit runs: node index plus the exact cores it holds.
struct Placement {
  int64_t node_index = 0;
  std::vector<int64_t> cores;

  bool operator==(const Placement &) const = default;
};

struct UnitRecord {
  std::string unit_id;
  std::string pilot_id;
  ComputeUnitDescription description;
  UnitState state = UnitState::kNew;
  std::optional<std::string> claimed_by;
  std::optional<int64_t> exit_code;
  std::string stdout_tail;
  std::string stderr_tail;
  std::vector<TimingRecord> timings;
  std::optional<std::string> sandbox_path;
  // Agent-side annotations.
  std::optional<LaunchMethod> launch_method;
  std::optional<Placement> placement;
  std::optional<std::string> app_id;
  std::optional<std::string> error;

  bool operator==(const UnitRecord &) const = default;
};

struct PilotRecord {
  std::string pilot_id;
  PilotDescription description;
  PilotState state = PilotState::kNew;
  std::optional<std::string> agent_endpoint;
  std::optional<std::string> cluster_endpoint;
  std::vector<TimingRecord> timings;
  /// Monotonic micros of the agent's last heartbeat.
  std::optional<int64_t> last_heartbeat_us;
  std::optional<std::string> error;

  bool operator==(const PilotRecord &) const = default;
};

/// Fields merged into a unit record by UpdateUnit. Unset fields are left
/// alone; `timings` are appended.
struct UnitPatch {
  std::optional<std::string> claimed_by;
  std::optional<int64_t> exit_code;
  std::optional<std::string> stdout_tail;
  std::optional<std::string> stderr_tail;
  std::optional<std::string> sandbox_path;
  std::optional<LaunchMethod> launch_method;
  std::optional<Placement> placement;
  std::optional<std::string> app_id;
  std::optional<std::string> error;
  std::vector<TimingRecord> timings;
};

struct PilotPatch {
  std::optional<std::string> agent_endpoint;
  std::optional<std::string> cluster_endpoint;
  std::optional<int64_t> last_heartbeat_us;
  std::optional<std::string> error;
  std::vector<TimingRecord> timings;
};

/// One committed state change. Pilot registration is logged as NONE -> NEW;
/// unit enqueue as NEW -> PENDING.
struct Event {
  uint64_t index = 0;
  int64_t mono_us = 0;
  std::string entity_id;
  std::string old_state;
  std::string new_state;

  bool operator==(const Event &) const = default;
};

struct WatchBatch {
  std::vector<Event> events;
  /// Journal head at read time; pass back as `since` to continue.
  uint64_t cursor = 0;
};

/// "<index> <mono_us> <entity> <old> <new>" without the newline.
std::string FormatEvent(const Event &e);
/// Throws Error(kMalformedInput).
Event ParseEvent(const std::string &line);

void to_json(nlohmann::json &j, const Placement &p);
void from_json(const nlohmann::json &j, Placement &p);
void to_json(nlohmann::json &j, const UnitRecord &r);
void from_json(const nlohmann::json &j, UnitRecord &r);
void to_json(nlohmann::json &j, const PilotRecord &r);
void from_json(const nlohmann::json &j, PilotRecord &r);

}  // namespace pilotlet::store
