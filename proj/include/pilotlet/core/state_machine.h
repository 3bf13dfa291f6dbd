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

#include <optional>

#include "pilotlet/core/types.h"

namespace pilotlet {

// Pilot lifecycle:
//   NEW -> PENDING_LAUNCH -> LAUNCHING -> ACTIVE -> {DONE, FAILED, CANCELED}
//   any non-terminal -> {FAILED, CANCELED}
bool IsLegalTransition(PilotState from, PilotState to);

// Unit lifecycle:
//   NEW -> PENDING -> SCHEDULED -> {ALLOCATING | EXECUTING}
//   ALLOCATING -> EXECUTING -> STAGING_OUT -> DONE
//   any non-terminal -> {FAILED, CANCELED}
// SCHEDULED -> ALLOCATING additionally requires the YARN launch method. An
// unknown method (nullopt) never satisfies that guard.
bool IsLegalTransition(UnitState from, UnitState to,
                       std::optional<LaunchMethod> method = std::nullopt);

/// Returns `to` or throws Error(kIllegalTransition, details = {from, to}).
PilotState Transition(PilotState from, PilotState to);
UnitState Transition(UnitState from, UnitState to,
                     std::optional<LaunchMethod> method = std::nullopt);

}  // namespace pilotlet
