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

#include "pilotlet/statestore/records.h"

#include <sstream>

#include "pilotlet/core/error.h"

namespace pilotlet::store {

using nlohmann::json;

namespace {

template <typename T>
void PutOptional(json &j, const char *key, const std::optional<T> &v) {
  if (v) j[key] = *v;
}

template <typename T>
void GetOptional(const json &j, const char *key, std::optional<T> &out) {
  if (j.contains(key) && !j[key].is_null()) {
    out = j[key].get<T>();
  } else {
    out.reset();
  }
}

}  // namespace

std::string FormatEvent(const Event &e) {
  std::ostringstream out;
  out << e.index << ' ' << e.mono_us << ' ' << e.entity_id << ' ' << e.old_state << ' '
      << e.new_state;
  return out.str();
}

Event ParseEvent(const std::string &line) {
  std::istringstream in(line);
  Event e;
  if (!(in >> e.index >> e.mono_us >> e.entity_id >> e.old_state >> e.new_state)) {
    throw Error(ErrorCode::kMalformedInput, "bad journal line: " + line);
  }
  return e;
}

void to_json(json &j, const Placement &p) {
  j = json{{"node_index", p.node_index}, {"cores", p.cores}};
}

void from_json(const json &j, Placement &p) {
  p.node_index = j.at("node_index").get<int64_t>();
  p.cores = j.at("cores").get<std::vector<int64_t>>();
}

void to_json(json &j, const UnitRecord &r) {
  j = json{{"unit_id", r.unit_id},
           {"pilot_id", r.pilot_id},
           {"description", r.description},
           {"state", ToString(r.state)},
           {"stdout_tail", r.stdout_tail},
           {"stderr_tail", r.stderr_tail},
           {"timings", r.timings}};
  PutOptional(j, "claimed_by", r.claimed_by);
  PutOptional(j, "exit_code", r.exit_code);
  PutOptional(j, "sandbox_path", r.sandbox_path);
  if (r.launch_method) j["launch_method"] = ToString(*r.launch_method);
  PutOptional(j, "placement", r.placement);
  PutOptional(j, "app_id", r.app_id);
  PutOptional(j, "error", r.error);
}

void from_json(const json &j, UnitRecord &r) {
  r.unit_id = j.at("unit_id").get<std::string>();
  r.pilot_id = j.at("pilot_id").get<std::string>();
  r.description = j.at("description").get<ComputeUnitDescription>();
  r.state = ParseEnumOrThrow<UnitState>(j.at("state").get<std::string>());
  r.stdout_tail = j.value("stdout_tail", "");
  r.stderr_tail = j.value("stderr_tail", "");
  r.timings = j.value("timings", std::vector<TimingRecord>{});
  GetOptional(j, "claimed_by", r.claimed_by);
  GetOptional(j, "exit_code", r.exit_code);
  GetOptional(j, "sandbox_path", r.sandbox_path);
  if (j.contains("launch_method")) {
    r.launch_method = ParseEnumOrThrow<LaunchMethod>(j["launch_method"].get<std::string>());
  } else {
    r.launch_method.reset();
  }
  GetOptional(j, "placement", r.placement);
  GetOptional(j, "app_id", r.app_id);
  GetOptional(j, "error", r.error);
}

void to_json(json &j, const PilotRecord &r) {
  j = json{{"pilot_id", r.pilot_id},
           {"description", r.description},
           {"state", ToString(r.state)},
           {"timings", r.timings}};
  PutOptional(j, "agent_endpoint", r.agent_endpoint);
  PutOptional(j, "cluster_endpoint", r.cluster_endpoint);
  PutOptional(j, "last_heartbeat_us", r.last_heartbeat_us);
  PutOptional(j, "error", r.error);
}

void from_json(const json &j, PilotRecord &r) {
  r.pilot_id = j.at("pilot_id").get<std::string>();
  r.description = j.at("description").get<PilotDescription>();
  r.state = ParseEnumOrThrow<PilotState>(j.at("state").get<std::string>());
  r.timings = j.value("timings", std::vector<TimingRecord>{});
  GetOptional(j, "agent_endpoint", r.agent_endpoint);
  GetOptional(j, "cluster_endpoint", r.cluster_endpoint);
  GetOptional(j, "last_heartbeat_us", r.last_heartbeat_us);
  GetOptional(j, "error", r.error);
}

}  // namespace pilotlet::store
