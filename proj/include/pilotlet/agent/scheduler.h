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

#include <cstdint>
#include <optional>
#include <vector>

#include "pilotlet/agent/resources.h"
#include "pilotlet/core/types.h"
#include "pilotlet/minicluster/ledger.h"

namespace pilotlet::agent {

struct Slot {
  int64_t node_index = 0;
  std::vector<int64_t> core_indices;
  /// Memory is not tracked for FORK placement.
  int64_t memory_mb = 0;

  bool operator==(const Slot &) const = default;
};

/// Per-core occupancy of the pilot's nodes.
class SlotInventory {
 public:
  explicit SlotInventory(const ClusterInfo &info);

  size_t node_count() const { return busy_.size(); }
  int64_t NodeCores(size_t node) const { return static_cast<int64_t>(busy_[node].size()); }
  bool Busy(size_t node, int64_t core) const { return busy_[node][core]; }
  int64_t FreeCores(size_t node) const;
  int64_t TotalCores() const;
  int64_t TotalFree() const;
  int64_t LargestNode() const;

  /// Throws kValidation when any core of `slot` is already taken.
  void Acquire(const Slot &slot);
  /// Throws kValidation when any core of `slot` is not taken.
  void Release(const Slot &slot);

 private:
  std::vector<std::vector<bool>> busy_;
};

/// First fit over nodes in index order, lowest-numbered free cores first.
/// nullopt means defer. Throws kNeverFits when `cores` exceeds the largest
/// node.
std::optional<Slot> ScheduleFork(int64_t cores, const SlotInventory &inventory);

enum class YarnDecision { kApprove, kDefer };

/// Approves when the headroom covers the unit plus its application master.
YarnDecision ScheduleYarn(const ComputeUnitDescription &cu, const minicluster::Resource &headroom,
                          const minicluster::Resource &am);

/// Cluster headroom a new application can count on: what is neither
/// allocated, reserved for a started application, nor owed to queued ones.
minicluster::Resource Headroom(const minicluster::Metrics &m);

}  // namespace pilotlet::agent
