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

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/statestore/state_store.h"

namespace pilotlet::store {

namespace fs = std::filesystem;

FileStateStore::FileStateStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "pilots", ec);
  fs::create_directories(root_ / "units", ec);
  if (ec) throw Error(ErrorCode::kIoFailed, "cannot create store at " + root_.string());
  lock_fd_ = open((root_ / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) {
    throw Error(ErrorCode::kIoFailed, "cannot open lock file in " + root_.string());
  }
  int j = open((root_ / "journal.log").c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (j < 0) throw Error(ErrorCode::kIoFailed, "cannot open journal in " + root_.string());
  close(j);
}

FileStateStore::~FileStateStore() {
  if (lock_fd_ >= 0) close(lock_fd_);
}

void FileStateStore::Lock() {
  while (flock(lock_fd_, LOCK_EX) != 0) {
    if (errno != EINTR) throw Error(ErrorCode::kStoreFailed, "flock failed");
  }
}

void FileStateStore::Unlock() { flock(lock_fd_, LOCK_UN); }

std::vector<Event> FileStateStore::ReadJournalAfter(uint64_t after_index) {
  std::vector<Event> events;
  int fd = open((root_ / "journal.log").c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::kStoreFailed, "cannot read journal");
  // The base only asks for what follows its own head, which is where our
  // offset points; anything else is a programming error.
  if (after_index != journal_last_index_) {
    close(fd);
    throw Error(ErrorCode::kStoreFailed, "journal cursor out of sync");
  }
  std::string data;
  char buf[65536];
  if (lseek(fd, journal_offset_, SEEK_SET) < 0) {
    close(fd);
    throw Error(ErrorCode::kStoreFailed, "journal seek failed");
  }
  while (true) {
    ssize_t n = read(fd, buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    data.append(buf, static_cast<size_t>(n));
  }
  close(fd);
  size_t consumed = 0;
  while (true) {
    size_t nl = data.find('\n', consumed);
    if (nl == std::string::npos) break;
    std::string line = data.substr(consumed, nl - consumed);
    consumed = nl + 1;
    if (line.empty()) continue;
    Event e = ParseEvent(line);
    journal_last_index_ = e.index;
    events.push_back(std::move(e));
  }
  journal_offset_ += static_cast<int64_t>(consumed);
  return events;
}

void FileStateStore::AppendJournal(const std::vector<Event> &events) {
  std::string text;
  for (const auto &e : events) text += FormatEvent(e) + "\n";
  int fd = open((root_ / "journal.log").c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::kStoreFailed, "cannot append to journal");
  size_t off = 0;
  while (off < text.size()) {
    ssize_t n = write(fd, text.data() + off, text.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      close(fd);
      throw Error(ErrorCode::kStoreFailed, "journal write failed");
    }
    off += static_cast<size_t>(n);
  }
  close(fd);
  // The guard synced to EOF before this commit, so our lines directly follow
  // the offset.
  journal_offset_ += static_cast<int64_t>(text.size());
  journal_last_index_ = events.back().index;
}

std::optional<PilotRecord> FileStateStore::LoadPilot(const std::string &id) {
  auto path = root_ / "pilots" / (id + ".rec");
  if (!fs::exists(path)) return std::nullopt;
  return nlohmann::json::parse(ReadFile(path)).get<PilotRecord>();
}

void FileStateStore::SavePilot(const PilotRecord &rec) {
  WriteFileAtomic(root_ / "pilots" / (rec.pilot_id + ".rec"), nlohmann::json(rec).dump());
}

std::optional<UnitRecord> FileStateStore::LoadUnit(const std::string &id) {
  auto path = root_ / "units" / (id + ".rec");
  if (!fs::exists(path)) return std::nullopt;
  return nlohmann::json::parse(ReadFile(path)).get<UnitRecord>();
}

void FileStateStore::SaveUnit(const UnitRecord &rec) {
  WriteFileAtomic(root_ / "units" / (rec.unit_id + ".rec"), nlohmann::json(rec).dump());
}

}  // namespace pilotlet::store
