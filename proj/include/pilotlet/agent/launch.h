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
#include <optional>
#include <string>
#include <string_view>

#include "pilotlet/agent/resources.h"
#include "pilotlet/agent/scheduler.h"
#include "pilotlet/core/process.h"
#include "pilotlet/minicluster/ledger.h"
#include "pilotlet/statestore/records.h"

namespace pilotlet::agent {

/// AUTO picks the pilot's cluster flavor, FORK without one. Throws
/// kValidation when the hint names a cluster the pilot does not run.
LaunchMethod ResolveLaunchMethod(LaunchMethodHint hint, ClusterFlavor flavor, bool has_cluster);

/// Creates `<unit_dir>/work` and writes `<unit_dir>/unit.json`. Throws
/// kIoFailed.
void PrepareSandbox(const store::UnitRecord &rec, const std::filesystem::path &unit_dir);

/// Copies IN sources into the work directory. Throws kStagingFailed.
void StageIn(const ComputeUnitDescription &cu, const std::filesystem::path &unit_dir);
/// Copies OUT sources from the work directory into the unit sandbox. Throws
/// kStagingFailed.
void StageOut(const ComputeUnitDescription &cu, const std::filesystem::path &unit_dir);

/// Process options for a FORK unit. The assigned cores are announced in
/// PILOTLET_CORES; nothing pins the process to them. Throws kSpawnFailed when
/// the executable cannot be found.
SpawnOptions ForkSpawnOptions(const store::UnitRecord &rec, const std::filesystem::path &unit_dir,
                              const Slot &slot, const NodeInfo &node);

/// One application per unit: the task container runs `pilotlet-agent exec`
/// on the unit sandbox.
minicluster::AppSpec ClusterAppSpec(const store::UnitRecord &rec,
                                    const std::filesystem::path &unit_dir,
                                    const minicluster::Resource &am);

/// The code of the last `EXIT <code>` line, if any.
std::optional<int> AppLogExitCode(std::string_view log);

/// Runs a unit inside a mini-cluster container: reads `<unit_dir>/unit.json`,
/// redirects output into the unit sandbox and execs the executable from
/// `<unit_dir>/work`. Returns only on failure, with 127.
int ExecUnit(const std::filesystem::path &unit_dir);

}  // namespace pilotlet::agent
