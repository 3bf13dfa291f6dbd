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

#include <string>
#include <string_view>
#include <vector>

#include "pilotlet/core/types.h"

namespace pilotlet {

/// Every violated invariant, in a fixed order. Empty means valid.
std::vector<std::string> CheckPilotDescription(const PilotDescription &d);
std::vector<std::string> CheckUnitDescription(const ComputeUnitDescription &d);
std::vector<std::string> CheckStagingDirective(const StagingDirective &d);

/// Returns `d` unchanged, or throws Error(kValidation) whose details list
/// every violation.
const PilotDescription &ValidatePilotDescription(const PilotDescription &d);
const ComputeUnitDescription &ValidateUnitDescription(const ComputeUnitDescription &d);

/// True when `path` is relative and none of its components is "..".
bool IsContainedRelativePath(std::string_view path);

}  // namespace pilotlet
