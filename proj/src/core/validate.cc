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

#include "pilotlet/core/validate.h"

#include <filesystem>

#include "pilotlet/core/error.h"

namespace pilotlet {

bool IsContainedRelativePath(std::string_view path) {
  if (path.empty()) return false;
  std::filesystem::path p{std::string(path)};
  if (p.is_absolute()) return false;
  for (const auto &part : p) {
    if (part == "..") return false;
  }
  return true;
}

std::vector<std::string> CheckPilotDescription(const PilotDescription &d) {
  std::vector<std::string> v;
  if (d.resource_name.empty()) v.emplace_back("resource_name must be non-empty");
  if (d.cores < 1) v.emplace_back("cores >= 1 violated");
  if (d.memory_mb_per_node < 1) v.emplace_back("memory_mb_per_node >= 1 violated");
  if (d.runtime_s < 1) v.emplace_back("runtime_s >= 1 violated");
  if (d.sandbox_root.empty()) v.emplace_back("sandbox_root must be non-empty");
  if (d.cluster_mode == ClusterMode::kConnect) {
    if (!d.connect_url || d.connect_url->empty()) {
      v.emplace_back("connect_url required when cluster_mode=CONNECT");
    }
    if (d.cluster_flavor == ClusterFlavor::kNone) {
      v.emplace_back("cluster_flavor must not be NONE when cluster_mode=CONNECT");
    }
  }
  return v;
}

std::vector<std::string> CheckStagingDirective(const StagingDirective &d) {
  std::vector<std::string> v;
  if (d.source.empty()) v.emplace_back("staging source must be non-empty");
  if (!IsContainedRelativePath(d.target)) {
    v.emplace_back("staging target '" + d.target +
                   "' must be a relative path without '..' components");
  }
  if (d.direction == StagingDirection::kOut && !d.source.empty() &&
      !IsContainedRelativePath(d.source)) {
    v.emplace_back("output staging source '" + d.source +
                   "' must be a relative path without '..' components");
  }
  return v;
}

std::vector<std::string> CheckUnitDescription(const ComputeUnitDescription &d) {
  std::vector<std::string> v;
  if (d.executable.empty()) v.emplace_back("executable must be non-empty");
  if (d.cores < 1) v.emplace_back("cores >= 1 violated");
  if (d.memory_mb < 1) v.emplace_back("memory_mb >= 1 violated");
  auto check_list = [&v](const std::vector<StagingDirective> &list, StagingDirection want,
                         const char *name) {
    for (size_t i = 0; i < list.size(); ++i) {
      std::string where = std::string(name) + "[" + std::to_string(i) + "]: ";
      if (list[i].direction != want) {
        v.push_back(where + "direction must be " + std::string(ToString(want)));
      }
      for (auto &msg : CheckStagingDirective(list[i])) v.push_back(where + msg);
    }
  };
  check_list(d.input_staging, StagingDirection::kIn, "input_staging");
  check_list(d.output_staging, StagingDirection::kOut, "output_staging");
  return v;
}

const PilotDescription &ValidatePilotDescription(const PilotDescription &d) {
  auto violations = CheckPilotDescription(d);
  if (!violations.empty()) {
    std::string first = violations.front();
    throw Error(ErrorCode::kValidation, "invalid pilot description: " + first,
                std::move(violations));
  }
  return d;
}

const ComputeUnitDescription &ValidateUnitDescription(const ComputeUnitDescription &d) {
  auto violations = CheckUnitDescription(d);
  if (!violations.empty()) {
    std::string first = violations.front();
    throw Error(ErrorCode::kValidation, "invalid unit description: " + first,
                std::move(violations));
  }
  return d;
}

}  // namespace pilotlet
