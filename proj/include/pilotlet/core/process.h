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

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pilotlet {

struct SpawnOptions {
  /// argv[0] is resolved through PATH when it contains no '/'.
  std::vector<std::string> argv;
  /// Added to (or overriding) the parent's environment.
  std::map<std::string, std::string> env;
  std::filesystem::path cwd;
  /// Unset means inherit; the file is truncated.
  std::optional<std::filesystem::path> stdout_path;
  std::optional<std::filesystem::path> stderr_path;
  /// Child leads its own process group, so Signal() reaches its descendants.
  bool new_process_group = true;
  /// PR_SET_PDEATHSIG=SIGKILL. Fires when the spawning *thread* exits, so only
  /// set this from long-lived threads.
  bool die_with_parent = false;
};

/// A child process owned by exactly one ChildProcess object. Exit status is
/// reported shell-style: the exit code, or 128+signal. exec failure exits 127.
///
/// The destructor does not kill or reap; call Terminate() or Wait().
class ChildProcess {
 public:
  static ChildProcess Spawn(const SpawnOptions &options);

  ChildProcess() = default;
  ChildProcess(ChildProcess &&other) noexcept;
  ChildProcess &operator=(ChildProcess &&other) noexcept;
  ChildProcess(const ChildProcess &) = delete;
  ChildProcess &operator=(const ChildProcess &) = delete;

  pid_t pid() const { return pid_; }
  bool valid() const { return pid_ > 0; }

  /// Non-blocking reap. Returns the exit status once the child has exited.
  std::optional<int> TryWait();
  /// Blocking reap.
  int Wait();
  /// Waits up to `timeout`; nullopt if still running.
  std::optional<int> WaitFor(std::chrono::milliseconds timeout);
  /// Sends `sig` to the process group (or the process if it has none).
  void Signal(int sig) const;
  /// SIGTERM, then SIGKILL after `grace`; always reaps.
  int Terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

  std::optional<int> exit_status() const { return exit_status_; }

 private:
  pid_t pid_ = -1;
  bool own_group_ = false;
  std::optional<int> exit_status_;
};

/// True if a process with this pid exists and is not a zombie.
bool ProcessAlive(pid_t pid);

/// Resolves `name` to an executable path via PATH (or checks it directly when
/// it contains '/'). nullopt when not found or not executable.
std::optional<std::filesystem::path> ResolveExecutable(const std::string &name);

/// Location of a pilotlet executable: $PILOTLET_BIN_DIR/<name> when set, else
/// next to the running executable.
std::filesystem::path SiblingBinary(const std::string &name);

}  // namespace pilotlet
