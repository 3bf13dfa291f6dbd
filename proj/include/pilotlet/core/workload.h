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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilotlet/core/types.h"

namespace pilotlet {

/// A workload file: {"pilot": {...}, "units": [{...}, ...]}.
struct Workload {
  PilotDescription pilot;
  std::vector<ComputeUnitDescription> units;
};

// The parsers are strict: unknown keys and wrong types are violations. They
// append to `violations` (prefixed with `where`) rather than throwing, so a
// caller sees every problem at once. Missing keys take the struct defaults,
// except `executable`, which is required.
PilotDescription ParsePilotDescription(const nlohmann::json &j, const std::string &where,
                                       std::vector<std::string> &violations);
ComputeUnitDescription ParseUnitDescription(const nlohmann::json &j,
                                            const std::string &where,
                                            std::vector<std::string> &violations);
StagingDirective ParseStagingDirective(const nlohmann::json &j, const std::string &where,
                                       std::vector<std::string> &violations);

/// Parses and validates a workload document; throws Error(kValidation) with
/// every violation (syntax, unknown keys, invariants).
Workload ParseWorkload(const nlohmann::json &doc);
Workload LoadWorkloadFile(const std::filesystem::path &path);

nlohmann::json WorkloadToJson(const Workload &w);

}  // namespace pilotlet
