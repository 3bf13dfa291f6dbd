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

#include "pilotlet/core/state_machine.h"

#include <string>

#include "pilotlet/core/error.h"

namespace pilotlet {

bool IsLegalTransition(PilotState from, PilotState to) {
  using S = PilotState;
  if (IsTerminal(from)) return false;
  if (to == S::kFailed || to == S::kCanceled) return true;
  switch (from) {
    case S::kNew:
      return to == S::kPendingLaunch;
    case S::kPendingLaunch:
      return to == S::kLaunching;
    case S::kLaunching:
      return to == S::kActive;
    case S::kActive:
      return to == S::kDone;
    default:
      return false;
  }
}

bool IsLegalTransition(UnitState from, UnitState to, std::optional<LaunchMethod> method) {
  using S = UnitState;
  if (IsTerminal(from)) return false;
  if (to == S::kFailed || to == S::kCanceled) return true;
  switch (from) {
    case S::kNew:
      return to == S::kPending;
    case S::kPending:
      return to == S::kScheduled;
    case S::kScheduled:
      if (to == S::kAllocating) return method == LaunchMethod::kYarn;
      return to == S::kExecuting;
    case S::kAllocating:
      return to == S::kExecuting;
    case S::kExecuting:
      return to == S::kStagingOut;
    case S::kStagingOut:
      return to == S::kDone;
    default:
      return false;
  }
}

PilotState Transition(PilotState from, PilotState to) {
  if (!IsLegalTransition(from, to)) {
    throw Error(ErrorCode::kIllegalTransition,
                std::string(ToString(from)) + " -> " + std::string(ToString(to)),
                {std::string(ToString(from)), std::string(ToString(to))});
  }
  return to;
}

UnitState Transition(UnitState from, UnitState to, std::optional<LaunchMethod> method) {
  if (!IsLegalTransition(from, to, method)) {
    throw Error(ErrorCode::kIllegalTransition,
                std::string(ToString(from)) + " -> " + std::string(ToString(to)),
                {std::string(ToString(from)), std::string(ToString(to))});
  }
  return to;
}

}  // namespace pilotlet
