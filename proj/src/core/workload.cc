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

#include "pilotlet/core/workload.h"

#include <set>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/core/validate.h"

namespace pilotlet {

using nlohmann::json;

namespace {

// Reads typed fields out of an object, recording a violation (and leaving the
// default in place) whenever something does not fit.
class FieldReader {
 public:
  FieldReader(const json &j, std::string where, std::vector<std::string> &violations,
              std::set<std::string> allowed)
      : j_(j), where_(std::move(where)), violations_(violations) {
    if (!j_.is_object()) {
      Fail("", "expected an object");
      return;
    }
    for (const auto &[key, value] : j_.items()) {
      if (!allowed.count(key)) Fail(key, "unknown key");
    }
  }

  bool ok() const { return j_.is_object(); }

  void String(const char *key, std::string &out) {
    if (!Has(key)) return;
    if (!j_[key].is_string()) return Fail(key, "expected a string");
    out = j_[key].get<std::string>();
  }

  void OptionalString(const char *key, std::optional<std::string> &out) {
    if (!Has(key) || j_[key].is_null()) return;
    if (!j_[key].is_string()) return Fail(key, "expected a string");
    out = j_[key].get<std::string>();
  }

  void Integer(const char *key, int64_t &out) {
    if (!Has(key)) return;
    if (!j_[key].is_number_integer()) return Fail(key, "expected an integer");
    out = j_[key].get<int64_t>();
  }

  template <typename E>
  void Enum(const char *key, E &out) {
    if (!Has(key)) return;
    if (!j_[key].is_string()) return Fail(key, "expected a string");
    auto parsed = ParseEnum<E>(j_[key].get<std::string>());
    if (!parsed) return Fail(key, "unknown value '" + j_[key].get<std::string>() + "'");
    out = *parsed;
  }

  void StringList(const char *key, std::vector<std::string> &out) {
    if (!Has(key)) return;
    if (!j_[key].is_array()) return Fail(key, "expected an array of strings");
    out.clear();
    for (const auto &item : j_[key]) {
      if (!item.is_string()) return Fail(key, "expected an array of strings");
      out.push_back(item.get<std::string>());
    }
  }

  void StringMap(const char *key, std::map<std::string, std::string> &out) {
    if (!Has(key)) return;
    if (!j_[key].is_object()) return Fail(key, "expected an object of strings");
    out.clear();
    for (const auto &[k, value] : j_[key].items()) {
      if (!value.is_string()) return Fail(key + std::string(".") + k, "expected a string");
      out[k] = value.get<std::string>();
    }
  }

  void Staging(const char *key, std::vector<StagingDirective> &out) {
    if (!Has(key)) return;
    if (!j_[key].is_array()) return Fail(key, "expected an array");
    out.clear();
    size_t i = 0;
    for (const auto &item : j_[key]) {
      out.push_back(ParseStagingDirective(
          item, Path(key) + "[" + std::to_string(i++) + "]", violations_));
    }
  }

  bool Has(const char *key) const { return j_.is_object() && j_.contains(key); }

  void Fail(const std::string &key, const std::string &what) {
    violations_.push_back(Path(key) + ": " + what);
  }

 private:
  std::string Path(const std::string &key) const {
    if (key.empty()) return where_.empty() ? std::string("<root>") : where_;
    return where_.empty() ? key : where_ + "." + key;
  }

  const json &j_;
  std::string where_;
  std::vector<std::string> &violations_;
};

}  // namespace

StagingDirective ParseStagingDirective(const json &j, const std::string &where,
                                       std::vector<std::string> &violations) {
  StagingDirective d;
  FieldReader r(j, where, violations, {"source", "target", "direction"});
  if (!r.ok()) return d;
  r.String("source", d.source);
  r.String("target", d.target);
  r.Enum("direction", d.direction);
  return d;
}

PilotDescription ParsePilotDescription(const json &j, const std::string &where,
                                       std::vector<std::string> &violations) {
  PilotDescription d;
  FieldReader r(j, where, violations,
                {"resource_name", "cores", "memory_mb_per_node", "runtime_s", "queue",
                 "cluster_flavor", "cluster_mode", "connect_url", "sandbox_root"});
  if (!r.ok()) return d;
  r.String("resource_name", d.resource_name);
  r.Integer("cores", d.cores);
  r.Integer("memory_mb_per_node", d.memory_mb_per_node);
  r.Integer("runtime_s", d.runtime_s);
  r.OptionalString("queue", d.queue);
  r.Enum("cluster_flavor", d.cluster_flavor);
  r.Enum("cluster_mode", d.cluster_mode);
  r.OptionalString("connect_url", d.connect_url);
  r.String("sandbox_root", d.sandbox_root);
  return d;
}

ComputeUnitDescription ParseUnitDescription(const json &j, const std::string &where,
                                            std::vector<std::string> &violations) {
  ComputeUnitDescription d;
  FieldReader r(j, where, violations,
                {"executable", "arguments", "environment", "cores", "memory_mb",
                 "launch_method_hint", "input_staging", "output_staging"});
  if (!r.ok()) return d;
  if (!r.Has("executable")) r.Fail("executable", "required key missing");
  r.String("executable", d.executable);
  r.StringList("arguments", d.arguments);
  r.StringMap("environment", d.environment);
  r.Integer("cores", d.cores);
  r.Integer("memory_mb", d.memory_mb);
  r.Enum("launch_method_hint", d.launch_method_hint);
  r.Staging("input_staging", d.input_staging);
  r.Staging("output_staging", d.output_staging);
  return d;
}

Workload ParseWorkload(const json &doc) {
  std::vector<std::string> violations;
  Workload w;
  if (!doc.is_object()) {
    throw Error(ErrorCode::kValidation, "workload must be a JSON object",
                {"<root>: expected an object"});
  }
  for (const auto &[key, value] : doc.items()) {
    if (key != "pilot" && key != "units") violations.push_back(key + ": unknown key");
  }
  if (doc.contains("pilot")) {
    w.pilot = ParsePilotDescription(doc["pilot"], "pilot", violations);
    for (auto &v : CheckPilotDescription(w.pilot)) violations.push_back("pilot: " + v);
  } else {
    violations.emplace_back("pilot: required key missing");
  }
  if (doc.contains("units")) {
    if (!doc["units"].is_array()) {
      violations.emplace_back("units: expected an array");
    } else {
      size_t i = 0;
      for (const auto &u : doc["units"]) {
        std::string where = "units[" + std::to_string(i++) + "]";
        w.units.push_back(ParseUnitDescription(u, where, violations));
        for (auto &v : CheckUnitDescription(w.units.back())) {
          violations.push_back(where + ": " + v);
        }
      }
    }
  }
  if (!violations.empty()) {
    std::string first = violations.front();
    throw Error(ErrorCode::kValidation, "invalid workload: " + first,
                std::move(violations));
  }
  return w;
}

Workload LoadWorkloadFile(const std::filesystem::path &path) {
  std::string text = ReadFile(path);
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kValidation, "workload file is not valid JSON: " + path.string(),
                {"<root>: not valid JSON"});
  }
  return ParseWorkload(doc);
}

json WorkloadToJson(const Workload &w) {
  return json{{"pilot", w.pilot}, {"units", w.units}};
}

}  // namespace pilotlet
