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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pilotlet/statestore/records.h"

namespace pilotlet::store {

/// The coordination substrate between the Unit-Manager and agents.
///
/// Every mutating call is atomic and linearizable; ClaimUnits is atomic
/// across records. All state changes are appended to a totally ordered,
/// append-only journal whose replay yields the current state of every
/// entity.
class StateStore {
 public:
  virtual ~StateStore() = default;

  /// Assigns "pilot.NNNN" when `rec.pilot_id` is empty. The stored state is
  /// always NEW. Throws kDuplicateId.
  virtual std::string RegisterPilot(PilotRecord rec) = 0;
  virtual PilotRecord GetPilot(const std::string &pilot_id) = 0;
  /// Moves the pilot to `new_state` (when set and different from the current
  /// state) and merges `patch`. Throws kUnknownPilot, kIllegalTransition.
  virtual PilotRecord UpdatePilot(const std::string &pilot_id,
                                  std::optional<PilotState> new_state,
                                  const PilotPatch &patch = {}) = 0;
  virtual std::vector<std::string> ListPilots() = 0;

  /// Stores all units in PENDING with a cu_submit timing, or none of them.
  /// Assigns "unit.NNNNNN" ids where empty. Throws kUnknownPilot,
  /// kDuplicateId.
  virtual std::vector<std::string> EnqueueUnits(const std::string &pilot_id,
                                                std::vector<UnitRecord> records) = 0;
  /// Moves up to `max_n` of the pilot's oldest PENDING units to SCHEDULED,
  /// claimed by `agent_id`. Throws kUnknownPilot.
  virtual std::vector<UnitRecord> ClaimUnits(const std::string &agent_id,
                                             const std::string &pilot_id,
                                             size_t max_n) = 0;
  /// Throws kUnknownUnit, kIllegalTransition.
  virtual UnitRecord UpdateUnit(const std::string &unit_id, UnitState new_state,
                                const UnitPatch &patch = {}) = 0;
  virtual UnitRecord GetUnit(const std::string &unit_id) = 0;
  /// Units bound to the pilot, in enqueue order.
  virtual std::vector<UnitRecord> ListUnits(const std::string &pilot_id) = 0;

  /// Events for the pilot and its units committed after `since`, in commit
  /// order. Throws kUnknownPilot.
  virtual WatchBatch Watch(const std::string &pilot_id, uint64_t since) = 0;
  /// The whole journal, in commit order.
  virtual std::vector<Event> Journal() = 0;
};

/// Opens a store from a location string: "mem://" (a fresh in-memory store)
/// or a filesystem path (file-backed).
std::shared_ptr<StateStore> OpenStore(const std::string &location);

/// Shared implementation of the store semantics over a small set of storage
/// primitives. The in-memory and file backends differ only in those
/// primitives, which keeps them observationally identical.
class JournaledStateStore : public StateStore {
 public:
  std::string RegisterPilot(PilotRecord rec) override;
  PilotRecord GetPilot(const std::string &pilot_id) override;
  PilotRecord UpdatePilot(const std::string &pilot_id, std::optional<PilotState> new_state,
                          const PilotPatch &patch) override;
  std::vector<std::string> ListPilots() override;
  std::vector<std::string> EnqueueUnits(const std::string &pilot_id,
                                        std::vector<UnitRecord> records) override;
  std::vector<UnitRecord> ClaimUnits(const std::string &agent_id,
                                     const std::string &pilot_id, size_t max_n) override;
  UnitRecord UpdateUnit(const std::string &unit_id, UnitState new_state,
                        const UnitPatch &patch) override;
  UnitRecord GetUnit(const std::string &unit_id) override;
  std::vector<UnitRecord> ListUnits(const std::string &pilot_id) override;
  WatchBatch Watch(const std::string &pilot_id, uint64_t since) override;
  std::vector<Event> Journal() override;

 protected:
  // --- storage primitives; called with the store lock held ---
  virtual void Lock() = 0;
  virtual void Unlock() = 0;
  /// Journal events committed after `after_index` (possibly by another
  /// process), in order.
  virtual std::vector<Event> ReadJournalAfter(uint64_t after_index) = 0;
  /// Appends all events in one write.
  virtual void AppendJournal(const std::vector<Event> &events) = 0;
  virtual std::optional<PilotRecord> LoadPilot(const std::string &id) = 0;
  virtual void SavePilot(const PilotRecord &rec) = 0;
  virtual std::optional<UnitRecord> LoadUnit(const std::string &id) = 0;
  virtual void SaveUnit(const UnitRecord &rec) = 0;

 private:
  class Guard;

  // Index rebuilt incrementally from the journal.
  struct EntityIndex {
    std::string pilot_id;  // self for pilots
    bool is_pilot = false;
    std::string state;
    uint64_t pending_key = 0;
  };

  void SyncLocked();
  void ApplyLocked(const Event &e);
  /// Stamps index and time on `events`, appends them and updates the index.
  void CommitLocked(std::vector<Event> events);
  std::string NextIdLocked(const char *prefix, size_t &counter, int width);

  std::mutex mu_;
  uint64_t head_ = 0;
  std::vector<Event> events_;
  std::map<std::string, EntityIndex> entities_;
  std::map<std::string, std::vector<std::string>> units_by_pilot_;
  // pilot -> (enqueue commit index -> unit id) for units currently PENDING.
  std::map<std::string, std::map<uint64_t, std::string>> pending_;
  size_t pilot_counter_ = 0;
  size_t unit_counter_ = 0;
};

class MemoryStateStore : public JournaledStateStore {
 protected:
  void Lock() override {}
  void Unlock() override {}
  std::vector<Event> ReadJournalAfter(uint64_t after_index) override;
  void AppendJournal(const std::vector<Event> &events) override;
  std::optional<PilotRecord> LoadPilot(const std::string &id) override;
  void SavePilot(const PilotRecord &rec) override;
  std::optional<UnitRecord> LoadUnit(const std::string &id) override;
  void SaveUnit(const UnitRecord &rec) override;

 private:
  std::vector<Event> journal_;
  std::map<std::string, PilotRecord> pilots_;
  std::map<std::string, UnitRecord> units_;
};

/// Layout under `root`:
///   pilots/<id>.rec, units/<id>.rec   one JSON document each
///   journal.log                       FormatEvent() lines
///   .lock                             flock() for cross-process exclusion
/// Any number of processes may open the same root.
class FileStateStore : public JournaledStateStore {
 public:
  explicit FileStateStore(std::filesystem::path root);
  ~FileStateStore() override;

  const std::filesystem::path &root() const { return root_; }

 protected:
  void Lock() override;
  void Unlock() override;
  std::vector<Event> ReadJournalAfter(uint64_t after_index) override;
  void AppendJournal(const std::vector<Event> &events) override;
  std::optional<PilotRecord> LoadPilot(const std::string &id) override;
  void SavePilot(const PilotRecord &rec) override;
  std::optional<UnitRecord> LoadUnit(const std::string &id) override;
  void SaveUnit(const UnitRecord &rec) override;

 private:
  std::filesystem::path root_;
  int lock_fd_ = -1;
  int64_t journal_offset_ = 0;
  uint64_t journal_last_index_ = 0;
};

}  // namespace pilotlet::store
