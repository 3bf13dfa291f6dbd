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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace pilotlet {

enum class ClusterFlavor { kNone, kYarnLike, kSparkLike };
enum class ClusterMode { kSpawn, kConnect };
enum class LaunchMethodHint { kAuto, kFork, kYarn, kSpark };
/// Launch method after AUTO has been resolved against the pilot's flavor.
enum class LaunchMethod { kFork, kYarn, kSpark };
enum class StagingDirection { kIn, kOut };

enum class PilotState {
  kNew,
  kPendingLaunch,
  kLaunching,
  kActive,
  kDone,
  kFailed,
  kCanceled,
};

enum class UnitState {
  kNew,
  kPending,
  kScheduled,
  kAllocating,
  kExecuting,
  kStagingOut,
  kDone,
  kFailed,
  kCanceled,
};

template <typename E>
struct EnumTable;

#define PILOTLET_ENUM_TABLE(E, N, ...)                                      \
  template <>                                                               \
  struct EnumTable<E> {                                                     \
    static constexpr std::array<std::pair<E, std::string_view>, N> entries{ \
        {__VA_ARGS__}};                                                     \
  }

PILOTLET_ENUM_TABLE(ClusterFlavor, 3, {ClusterFlavor::kNone, "NONE"},
                    {ClusterFlavor::kYarnLike, "YARN_LIKE"},
                    {ClusterFlavor::kSparkLike, "SPARK_LIKE"});
PILOTLET_ENUM_TABLE(ClusterMode, 2, {ClusterMode::kSpawn, "SPAWN"},
                    {ClusterMode::kConnect, "CONNECT"});
PILOTLET_ENUM_TABLE(LaunchMethodHint, 4, {LaunchMethodHint::kAuto, "AUTO"},
                    {LaunchMethodHint::kFork, "FORK"},
                    {LaunchMethodHint::kYarn, "YARN"},
                    {LaunchMethodHint::kSpark, "SPARK"});
PILOTLET_ENUM_TABLE(LaunchMethod, 3, {LaunchMethod::kFork, "FORK"},
                    {LaunchMethod::kYarn, "YARN"}, {LaunchMethod::kSpark, "SPARK"});
PILOTLET_ENUM_TABLE(StagingDirection, 2, {StagingDirection::kIn, "IN"},
                    {StagingDirection::kOut, "OUT"});
PILOTLET_ENUM_TABLE(PilotState, 7, {PilotState::kNew, "NEW"},
                    {PilotState::kPendingLaunch, "PENDING_LAUNCH"},
                    {PilotState::kLaunching, "LAUNCHING"},
                    {PilotState::kActive, "ACTIVE"}, {PilotState::kDone, "DONE"},
                    {PilotState::kFailed, "FAILED"},
                    {PilotState::kCanceled, "CANCELED"});
PILOTLET_ENUM_TABLE(UnitState, 9, {UnitState::kNew, "NEW"},
                    {UnitState::kPending, "PENDING"},
                    {UnitState::kScheduled, "SCHEDULED"},
                    {UnitState::kAllocating, "ALLOCATING"},
                    {UnitState::kExecuting, "EXECUTING"},
                    {UnitState::kStagingOut, "STAGING_OUT"},
                    {UnitState::kDone, "DONE"}, {UnitState::kFailed, "FAILED"},
                    {UnitState::kCanceled, "CANCELED"});

#undef PILOTLET_ENUM_TABLE

template <typename E>
constexpr std::string_view ToString(E value) {
  for (const auto &[v, name] : EnumTable<E>::entries) {
    if (v == value) return name;
  }
  return "?";
}

/// Case-insensitive lookup of the canonical enum spelling.
template <typename E>
std::optional<E> ParseEnum(std::string_view text) {
  for (const auto &[v, name] : EnumTable<E>::entries) {
    if (name.size() != text.size()) continue;
    bool same = true;
    for (size_t i = 0; i < name.size() && same; ++i) {
      char c = text[i];
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      same = (c == name[i]);
    }
    if (same) return v;
  }
  return std::nullopt;
}

/// Parses or throws Error(kMalformedInput).
template <typename E>
E ParseEnumOrThrow(std::string_view text);

template <typename E>
constexpr auto AllValues() {
  std::array<E, EnumTable<E>::entries.size()> out{};
  for (size_t i = 0; i < out.size(); ++i) out[i] = EnumTable<E>::entries[i].first;
  return out;
}

bool IsTerminal(PilotState s);
bool IsTerminal(UnitState s);

struct StagingDirective {
  /// IN: any path readable by the agent. OUT: path relative to the unit's
  /// work directory.
  std::string source;
  /// IN: path relative to the unit's work directory. OUT: path relative to
  /// the unit sandbox.
  std::string target;
  StagingDirection direction = StagingDirection::kIn;

  bool operator==(const StagingDirective &) const = default;
};

struct PilotDescription {
  std::string resource_name = "local";
  int64_t cores = 1;
  int64_t memory_mb_per_node = 1024;
  int64_t runtime_s = 600;
  std::optional<std::string> queue;
  ClusterFlavor cluster_flavor = ClusterFlavor::kNone;
  ClusterMode cluster_mode = ClusterMode::kSpawn;
  std::optional<std::string> connect_url;
  std::string sandbox_root = "pilotlet-sandbox";

  bool operator==(const PilotDescription &) const = default;
};

struct ComputeUnitDescription {
  std::string executable;
  std::vector<std::string> arguments;
  std::map<std::string, std::string> environment;
  int64_t cores = 1;
  int64_t memory_mb = 1024;
  LaunchMethodHint launch_method_hint = LaunchMethodHint::kAuto;
  std::vector<StagingDirective> input_staging;
  std::vector<StagingDirective> output_staging;

  bool operator==(const ComputeUnitDescription &) const = default;
};

/// A named event on an entity. Intervals are computed from `mono_us` only;
/// `wall_us` is for logs.
struct TimingRecord {
  std::string entity_id;
  std::string event_name;
  int64_t mono_us = 0;
  int64_t wall_us = 0;

  bool operator==(const TimingRecord &) const = default;
};

/// Stamps `event_name` for `entity_id` with the current clocks.
TimingRecord Stamp(std::string entity_id, std::string event_name);

int64_t MonotonicMicros();
int64_t WallMicros();

/// Seconds between the first `from` and the first `to` event in `timings`, or
/// nullopt when either is missing.
std::optional<double> IntervalSeconds(const std::vector<TimingRecord> &timings,
                                      std::string_view from, std::string_view to);
const TimingRecord *FindTiming(const std::vector<TimingRecord> &timings,
                               std::string_view event_name);

// JSON mappings used by records, workload files and the wire.
void to_json(nlohmann::json &j, const StagingDirective &d);
void from_json(const nlohmann::json &j, StagingDirective &d);
void to_json(nlohmann::json &j, const PilotDescription &d);
void from_json(const nlohmann::json &j, PilotDescription &d);
void to_json(nlohmann::json &j, const ComputeUnitDescription &d);
void from_json(const nlohmann::json &j, ComputeUnitDescription &d);
void to_json(nlohmann::json &j, const TimingRecord &t);
void from_json(const nlohmann::json &j, TimingRecord &t);

}  // namespace pilotlet
