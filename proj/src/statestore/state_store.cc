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

#include "pilotlet/statestore/state_store.h"

#include <cctype>
#include <cstdio>
#include <set>

#include "pilotlet/core/error.h"
#include "pilotlet/core/state_machine.h"

namespace pilotlet::store {

namespace {

constexpr const char *kNoState = "NONE";

std::string LowerName(std::string_view name) {
  std::string out(name);
  for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string UnitEventName(UnitState s) {
  switch (s) {
    case UnitState::kPending:
      return "cu_submit";
    case UnitState::kExecuting:
      return "cu_exec_start";
    default:
      return LowerName(ToString(s));
  }
}

void CheckId(const std::string &id) {
  bool ok = !id.empty() && id.size() <= 128 && id != "." && id != "..";
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) {
      ok = false;
    }
  }
  if (!ok) {
    throw Error(ErrorCode::kValidation, "identifier '" + id + "' must match [A-Za-z0-9._-]+",
                {"bad identifier '" + id + "'"});
  }
}

void MergePatch(UnitRecord &rec, const UnitPatch &p) {
  if (p.claimed_by) rec.claimed_by = p.claimed_by;
  if (p.exit_code) rec.exit_code = p.exit_code;
  if (p.stdout_tail) rec.stdout_tail = *p.stdout_tail;
  if (p.stderr_tail) rec.stderr_tail = *p.stderr_tail;
  if (p.sandbox_path) rec.sandbox_path = p.sandbox_path;
  if (p.launch_method) rec.launch_method = p.launch_method;
  if (p.placement) rec.placement = p.placement;
  if (p.app_id) rec.app_id = p.app_id;
  if (p.error) rec.error = p.error;
  for (const auto &t : p.timings) rec.timings.push_back(t);
}

void MergePatch(PilotRecord &rec, const PilotPatch &p) {
  if (p.agent_endpoint) rec.agent_endpoint = p.agent_endpoint;
  if (p.cluster_endpoint) rec.cluster_endpoint = p.cluster_endpoint;
  if (p.last_heartbeat_us) rec.last_heartbeat_us = p.last_heartbeat_us;
  if (p.error) rec.error = p.error;
  for (const auto &t : p.timings) rec.timings.push_back(t);
}

}  // namespace

class JournaledStateStore::Guard {
 public:
  explicit Guard(JournaledStateStore &s) : s_(s), lock_(s.mu_) {
    s_.Lock();
    try {
      s_.SyncLocked();
    } catch (...) {
      s_.Unlock();
      throw;
    }
  }
  ~Guard() { s_.Unlock(); }

 private:
  JournaledStateStore &s_;
  std::lock_guard<std::mutex> lock_;
};

void JournaledStateStore::SyncLocked() {
  for (const auto &e : ReadJournalAfter(head_)) ApplyLocked(e);
}

void JournaledStateStore::ApplyLocked(const Event &e) {
  auto it = entities_.find(e.entity_id);
  if (it == entities_.end()) {
    EntityIndex idx;
    if (e.old_state == kNoState) {
      idx.is_pilot = true;
      idx.pilot_id = e.entity_id;
      ++pilot_counter_;
    } else {
      auto rec = LoadUnit(e.entity_id);
      if (!rec) throw Error(ErrorCode::kStoreFailed, "journal names missing unit " + e.entity_id);
      idx.pilot_id = rec->pilot_id;
      units_by_pilot_[idx.pilot_id].push_back(e.entity_id);
      ++unit_counter_;
    }
    it = entities_.emplace(e.entity_id, std::move(idx)).first;
  }
  EntityIndex &idx = it->second;
  if (!idx.is_pilot) {
    if (idx.state == "PENDING") pending_[idx.pilot_id].erase(idx.pending_key);
    if (e.new_state == "PENDING") {
      idx.pending_key = e.index;
      pending_[idx.pilot_id][e.index] = e.entity_id;
    }
  }
  idx.state = e.new_state;
  head_ = e.index;
  events_.push_back(e);
}

void JournaledStateStore::CommitLocked(std::vector<Event> events) {
  if (events.empty()) return;
  int64_t now = MonotonicMicros();
  uint64_t index = head_;
  for (auto &e : events) {
    e.index = ++index;
    e.mono_us = now;
  }
  AppendJournal(events);
  for (const auto &e : events) ApplyLocked(e);
}

std::string JournaledStateStore::NextIdLocked(const char *prefix, size_t &counter, int width) {
  size_t n = counter;
  while (true) {
    ++n;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s.%0*zu", prefix, width, n);
    if (!entities_.count(buf)) return buf;
  }
}

std::string JournaledStateStore::RegisterPilot(PilotRecord rec) {
  Guard g(*this);
  if (rec.pilot_id.empty()) rec.pilot_id = NextIdLocked("pilot", pilot_counter_, 4);
  CheckId(rec.pilot_id);
  if (entities_.count(rec.pilot_id)) {
    throw Error(ErrorCode::kDuplicateId, "pilot " + rec.pilot_id + " already registered");
  }
  rec.state = PilotState::kNew;
  SavePilot(rec);
  CommitLocked({Event{0, 0, rec.pilot_id, kNoState, "NEW"}});
  return rec.pilot_id;
}

PilotRecord JournaledStateStore::GetPilot(const std::string &pilot_id) {
  Guard g(*this);
  auto it = entities_.find(pilot_id);
  if (it == entities_.end() || !it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownPilot, pilot_id);
  }
  auto rec = LoadPilot(pilot_id);
  if (!rec) throw Error(ErrorCode::kStoreFailed, "missing record for " + pilot_id);
  return *rec;
}

PilotRecord JournaledStateStore::UpdatePilot(const std::string &pilot_id,
                                             std::optional<PilotState> new_state,
                                             const PilotPatch &patch) {
  Guard g(*this);
  auto it = entities_.find(pilot_id);
  if (it == entities_.end() || !it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownPilot, pilot_id);
  }
  auto rec = LoadPilot(pilot_id);
  if (!rec) throw Error(ErrorCode::kStoreFailed, "missing record for " + pilot_id);
  PilotState old = rec->state;
  bool changes_state = new_state && *new_state != old;
  if (changes_state) {
    Transition(old, *new_state);
  } else if (IsTerminal(old) && new_state) {
    // Re-asserting a terminal state is not a transition.
    throw Error(ErrorCode::kIllegalTransition,
                std::string(ToString(old)) + " -> " + std::string(ToString(*new_state)),
                {std::string(ToString(old)), std::string(ToString(*new_state))});
  }
  MergePatch(*rec, patch);
  if (changes_state) {
    rec->state = *new_state;
    rec->timings.push_back(Stamp(pilot_id, LowerName(ToString(*new_state))));
  }
  SavePilot(*rec);
  if (changes_state) {
    CommitLocked({Event{0, 0, pilot_id, std::string(ToString(old)),
                        std::string(ToString(*new_state))}});
  }
  return *rec;
}

std::vector<std::string> JournaledStateStore::ListPilots() {
  Guard g(*this);
  std::vector<std::string> out;
  for (const auto &[id, idx] : entities_) {
    if (idx.is_pilot) out.push_back(id);
  }
  return out;
}

std::vector<std::string> JournaledStateStore::EnqueueUnits(const std::string &pilot_id,
                                                           std::vector<UnitRecord> records) {
  Guard g(*this);
  auto it = entities_.find(pilot_id);
  if (it == entities_.end() || !it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownPilot, pilot_id);
  }
  // Validate everything before the first write.
  std::set<std::string> batch_ids;
  size_t counter = unit_counter_;
  for (auto &rec : records) {
    if (rec.unit_id.empty()) {
      do {
        rec.unit_id = NextIdLocked("unit", counter, 6);
        ++counter;
      } while (batch_ids.count(rec.unit_id));
    }
    CheckId(rec.unit_id);
    if (entities_.count(rec.unit_id) || !batch_ids.insert(rec.unit_id).second) {
      throw Error(ErrorCode::kDuplicateId, "unit " + rec.unit_id + " already exists");
    }
  }
  std::vector<Event> events;
  std::vector<std::string> ids;
  TimingRecord submit = Stamp("", "cu_submit");
  for (auto &rec : records) {
    rec.pilot_id = pilot_id;
    rec.state = UnitState::kPending;
    rec.claimed_by.reset();
    rec.exit_code.reset();
    submit.entity_id = rec.unit_id;
    rec.timings.push_back(submit);
    SaveUnit(rec);
    events.push_back(Event{0, 0, rec.unit_id, "NEW", "PENDING"});
    ids.push_back(rec.unit_id);
  }
  CommitLocked(std::move(events));
  return ids;
}

std::vector<UnitRecord> JournaledStateStore::ClaimUnits(const std::string &agent_id,
                                                        const std::string &pilot_id,
                                                        size_t max_n) {
  Guard g(*this);
  auto it = entities_.find(pilot_id);
  if (it == entities_.end() || !it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownPilot, pilot_id);
  }
  std::vector<UnitRecord> claimed;
  std::vector<Event> events;
  auto &queue = pending_[pilot_id];
  int64_t now_mono = MonotonicMicros();
  int64_t now_wall = WallMicros();
  for (auto q = queue.begin(); q != queue.end() && claimed.size() < max_n; ++q) {
    auto rec = LoadUnit(q->second);
    if (!rec) throw Error(ErrorCode::kStoreFailed, "missing record for " + q->second);
    rec->state = UnitState::kScheduled;
    rec->claimed_by = agent_id;
    rec->timings.push_back(TimingRecord{rec->unit_id, "scheduled", now_mono, now_wall});
    SaveUnit(*rec);
    events.push_back(Event{0, 0, rec->unit_id, "PENDING", "SCHEDULED"});
    claimed.push_back(std::move(*rec));
  }
  CommitLocked(std::move(events));
  return claimed;
}

UnitRecord JournaledStateStore::UpdateUnit(const std::string &unit_id, UnitState new_state,
                                           const UnitPatch &patch) {
  Guard g(*this);
  auto it = entities_.find(unit_id);
  if (it == entities_.end() || it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownUnit, unit_id);
  }
  auto rec = LoadUnit(unit_id);
  if (!rec) throw Error(ErrorCode::kStoreFailed, "missing record for " + unit_id);
  UnitState old = rec->state;
  bool changes_state = new_state != old;
  std::optional<LaunchMethod> method = patch.launch_method ? patch.launch_method
                                                           : rec->launch_method;
  if (changes_state) {
    Transition(old, new_state, method);
  } else if (IsTerminal(old)) {
    throw Error(ErrorCode::kIllegalTransition,
                std::string(ToString(old)) + " -> " + std::string(ToString(new_state)),
                {std::string(ToString(old)), std::string(ToString(new_state))});
  }
  MergePatch(*rec, patch);
  if (changes_state) {
    rec->state = new_state;
    rec->timings.push_back(Stamp(unit_id, UnitEventName(new_state)));
  }
  SaveUnit(*rec);
  if (changes_state) {
    CommitLocked({Event{0, 0, unit_id, std::string(ToString(old)),
                        std::string(ToString(new_state))}});
  }
  return *rec;
}

UnitRecord JournaledStateStore::GetUnit(const std::string &unit_id) {
  Guard g(*this);
  auto it = entities_.find(unit_id);
  if (it == entities_.end() || it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownUnit, unit_id);
  }
  auto rec = LoadUnit(unit_id);
  if (!rec) throw Error(ErrorCode::kStoreFailed, "missing record for " + unit_id);
  return *rec;
}

std::vector<UnitRecord> JournaledStateStore::ListUnits(const std::string &pilot_id) {
  Guard g(*this);
  auto it = entities_.find(pilot_id);
  if (it == entities_.end() || !it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownPilot, pilot_id);
  }
  std::vector<UnitRecord> out;
  for (const auto &id : units_by_pilot_[pilot_id]) {
    auto rec = LoadUnit(id);
    if (rec) out.push_back(std::move(*rec));
  }
  return out;
}

WatchBatch JournaledStateStore::Watch(const std::string &pilot_id, uint64_t since) {
  Guard g(*this);
  auto it = entities_.find(pilot_id);
  if (it == entities_.end() || !it->second.is_pilot) {
    throw Error(ErrorCode::kUnknownPilot, pilot_id);
  }
  WatchBatch batch;
  batch.cursor = head_;
  // Event indices are dense and start at 1.
  for (size_t i = static_cast<size_t>(since); i < events_.size(); ++i) {
    const Event &e = events_[i];
    if (entities_[e.entity_id].pilot_id == pilot_id) batch.events.push_back(e);
  }
  return batch;
}

std::vector<Event> JournaledStateStore::Journal() {
  Guard g(*this);
  return events_;
}

// --- in-memory backend ---

std::vector<Event> MemoryStateStore::ReadJournalAfter(uint64_t after_index) {
  if (after_index >= journal_.size()) return {};
  return std::vector<Event>(journal_.begin() + static_cast<std::ptrdiff_t>(after_index),
                            journal_.end());
}

void MemoryStateStore::AppendJournal(const std::vector<Event> &events) {
  journal_.insert(journal_.end(), events.begin(), events.end());
}

std::optional<PilotRecord> MemoryStateStore::LoadPilot(const std::string &id) {
  auto it = pilots_.find(id);
  if (it == pilots_.end()) return std::nullopt;
  return it->second;
}

void MemoryStateStore::SavePilot(const PilotRecord &rec) { pilots_[rec.pilot_id] = rec; }

std::optional<UnitRecord> MemoryStateStore::LoadUnit(const std::string &id) {
  auto it = units_.find(id);
  if (it == units_.end()) return std::nullopt;
  return it->second;
}

void MemoryStateStore::SaveUnit(const UnitRecord &rec) { units_[rec.unit_id] = rec; }

std::shared_ptr<StateStore> OpenStore(const std::string &location) {
  if (location == "mem://" || location == "mem") return std::make_shared<MemoryStateStore>();
  std::string path = location;
  if (path.rfind("file://", 0) == 0) path = path.substr(7);
  if (path.empty()) throw Error(ErrorCode::kValidation, "empty store location");
  return std::make_shared<FileStateStore>(path);
}

}  // namespace pilotlet::store
