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

#include "pilotlet/agent/scheduler.h"

#include <algorithm>

#include "pilotlet/core/error.h"

namespace pilotlet::agent {

SlotInventory::SlotInventory(const ClusterInfo &info) {
  for (const auto &n : info.nodes) busy_.emplace_back(static_cast<size_t>(n.cores), false);
}

int64_t SlotInventory::FreeCores(size_t node) const {
  return std::count(busy_[node].begin(), busy_[node].end(), false);
}

int64_t SlotInventory::TotalCores() const {
  int64_t total = 0;
  for (const auto &n : busy_) total += static_cast<int64_t>(n.size());
  return total;
}

int64_t SlotInventory::TotalFree() const {
  int64_t total = 0;
  for (size_t i = 0; i < busy_.size(); ++i) total += FreeCores(i);
  return total;
}

int64_t SlotInventory::LargestNode() const {
  int64_t best = 0;
  for (const auto &n : busy_) best = std::max(best, static_cast<int64_t>(n.size()));
  return best;
}

void SlotInventory::Acquire(const Slot &slot) {
  auto &node = busy_.at(slot.node_index);
  for (int64_t c : slot.core_indices) {
    if (node.at(c)) {
      throw Error(ErrorCode::kValidation, "core " + std::to_string(c) + " on node " +
                                              std::to_string(slot.node_index) + " is taken");
    }
  }
  for (int64_t c : slot.core_indices) node[c] = true;
}

void SlotInventory::Release(const Slot &slot) {
  auto &node = busy_.at(slot.node_index);
  for (int64_t c : slot.core_indices) {
    if (!node.at(c)) {
      throw Error(ErrorCode::kValidation, "core " + std::to_string(c) + " on node " +
                                              std::to_string(slot.node_index) + " is free");
    }
  }
  for (int64_t c : slot.core_indices) node[c] = false;
}

std::optional<Slot> ScheduleFork(int64_t cores, const SlotInventory &inventory) {
  if (cores <= 0) throw Error(ErrorCode::kValidation, "cores must be positive");
  if (cores > inventory.LargestNode()) {
    throw Error(ErrorCode::kNeverFits, "unit needs " + std::to_string(cores) +
                                           " cores; the largest node has " +
                                           std::to_string(inventory.LargestNode()));
  }
  for (size_t n = 0; n < inventory.node_count(); ++n) {
    if (inventory.FreeCores(n) < cores) continue;
    Slot slot;
    slot.node_index = static_cast<int64_t>(n);
    for (int64_t c = 0; c < inventory.NodeCores(n) && static_cast<int64_t>(slot.core_indices.size()) < cores; ++c) {
      if (!inventory.Busy(n, c)) slot.core_indices.push_back(c);
    }
    return slot;
  }
  return std::nullopt;
}

YarnDecision ScheduleYarn(const ComputeUnitDescription &cu, const minicluster::Resource &headroom,
                          const minicluster::Resource &am) {
  bool cores_ok = headroom.vcores >= cu.cores + am.vcores;
  bool memory_ok = headroom.memory_mb >= cu.memory_mb + am.memory_mb;
  return cores_ok && memory_ok ? YarnDecision::kApprove : YarnDecision::kDefer;
}

minicluster::Resource Headroom(const minicluster::Metrics &m) {
  return m.available - m.reserved - m.pending;
}

}  // namespace pilotlet::agent
