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

#include "pilotlet/core/types.h"

#include <chrono>

#include "pilotlet/core/error.h"
#include "pilotlet/core/workload.h"

namespace pilotlet {

template <typename E>
E ParseEnumOrThrow(std::string_view text) {
  auto v = ParseEnum<E>(text);
  if (!v) {
    throw Error(ErrorCode::kMalformedInput, "unknown enum value '" + std::string(text) + "'");
  }
  return *v;
}

template ClusterFlavor ParseEnumOrThrow<ClusterFlavor>(std::string_view);
template ClusterMode ParseEnumOrThrow<ClusterMode>(std::string_view);
template LaunchMethodHint ParseEnumOrThrow<LaunchMethodHint>(std::string_view);
template LaunchMethod ParseEnumOrThrow<LaunchMethod>(std::string_view);
template StagingDirection ParseEnumOrThrow<StagingDirection>(std::string_view);
template PilotState ParseEnumOrThrow<PilotState>(std::string_view);
template UnitState ParseEnumOrThrow<UnitState>(std::string_view);

bool IsTerminal(PilotState s) {
  return s == PilotState::kDone || s == PilotState::kFailed || s == PilotState::kCanceled;
}

bool IsTerminal(UnitState s) {
  return s == UnitState::kDone || s == UnitState::kFailed || s == UnitState::kCanceled;
}

int64_t MonotonicMicros() {
  // steady_clock is CLOCK_MONOTONIC on Linux, so values compare across
  // processes on one host.
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int64_t WallMicros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

TimingRecord Stamp(std::string entity_id, std::string event_name) {
  return TimingRecord{std::move(entity_id), std::move(event_name), MonotonicMicros(),
                      WallMicros()};
}

const TimingRecord *FindTiming(const std::vector<TimingRecord> &timings,
                               std::string_view event_name) {
  for (const auto &t : timings) {
    if (t.event_name == event_name) return &t;
  }
  return nullptr;
}

std::optional<double> IntervalSeconds(const std::vector<TimingRecord> &timings,
                                      std::string_view from, std::string_view to) {
  const TimingRecord *a = FindTiming(timings, from);
  const TimingRecord *b = FindTiming(timings, to);
  if (a == nullptr || b == nullptr) return std::nullopt;
  return static_cast<double>(b->mono_us - a->mono_us) / 1e6;
}

void to_json(nlohmann::json &j, const StagingDirective &d) {
  j = nlohmann::json{{"source", d.source},
                     {"target", d.target},
                     {"direction", ToString(d.direction)}};
}

namespace {

template <typename T>
T ParseStrict(const nlohmann::json &j,
              T (*parse)(const nlohmann::json &, const std::string &,
                         std::vector<std::string> &)) {
  std::vector<std::string> violations;
  T value = parse(j, "", violations);
  if (!violations.empty()) {
    throw Error(ErrorCode::kValidation, "invalid document", std::move(violations));
  }
  return value;
}

}  // namespace

void from_json(const nlohmann::json &j, StagingDirective &d) {
  d = ParseStrict<StagingDirective>(j, &ParseStagingDirective);
}

void to_json(nlohmann::json &j, const PilotDescription &d) {
  j = nlohmann::json{{"resource_name", d.resource_name},
                     {"cores", d.cores},
                     {"memory_mb_per_node", d.memory_mb_per_node},
                     {"runtime_s", d.runtime_s},
                     {"cluster_flavor", ToString(d.cluster_flavor)},
                     {"cluster_mode", ToString(d.cluster_mode)},
                     {"sandbox_root", d.sandbox_root}};
  if (d.queue) j["queue"] = *d.queue;
  if (d.connect_url) j["connect_url"] = *d.connect_url;
}

void from_json(const nlohmann::json &j, PilotDescription &d) {
  d = ParseStrict<PilotDescription>(j, &ParsePilotDescription);
}

void to_json(nlohmann::json &j, const ComputeUnitDescription &d) {
  j = nlohmann::json{{"executable", d.executable},
                     {"arguments", d.arguments},
                     {"environment", d.environment},
                     {"cores", d.cores},
                     {"memory_mb", d.memory_mb},
                     {"launch_method_hint", ToString(d.launch_method_hint)},
                     {"input_staging", d.input_staging},
                     {"output_staging", d.output_staging}};
}

void from_json(const nlohmann::json &j, ComputeUnitDescription &d) {
  d = ParseStrict<ComputeUnitDescription>(j, &ParseUnitDescription);
}

void to_json(nlohmann::json &j, const TimingRecord &t) {
  j = nlohmann::json{{"entity_id", t.entity_id},
                     {"event_name", t.event_name},
                     {"mono_us", t.mono_us},
                     {"wall_us", t.wall_us}};
}

void from_json(const nlohmann::json &j, TimingRecord &t) {
  t.entity_id = j.at("entity_id").get<std::string>();
  t.event_name = j.at("event_name").get<std::string>();
  t.mono_us = j.at("mono_us").get<int64_t>();
  t.wall_us = j.at("wall_us").get<int64_t>();
}

}  // namespace pilotlet
