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

#include "pilotlet/core/process.h"
#include "pilotlet/minicluster/config.h"

namespace pilotlet::minicluster {

struct ServeOptions {
  std::filesystem::path conf_dir;
  /// Apps, node directories and logs. Removed on shutdown.
  std::filesystem::path scratch_dir;
  /// Receives "http://127.0.0.1:<port>\n" once the port is bound.
  std::optional<std::filesystem::path> endpoint_file;
  /// Overrides cluster.conf's rm_port when set.
  std::optional<int> port;
};

/// Runs a resource manager until shutdown is requested over HTTP or by
/// SIGTERM/SIGINT. Returns the process exit code.
int RunResourceManager(const ServeOptions &options);

/// A node manager: registers with the RM, launches and kills containers on
/// command, reports their exits. Returns when told to shut down or when the
/// RM stays unreachable.
int RunNodeManager(const std::string &rm_url, int64_t node_index,
                   const std::filesystem::path &scratch_dir);

/// A YARN-style application master: asks for the task container, then waits
/// for it to be released.
int RunAppMaster(const std::string &rm_url, const std::string &app_id);

/// A resource manager started as a child process.
class RmProcess {
 public:
  struct Options {
    std::filesystem::path conf_dir;
    std::filesystem::path scratch_dir;
    std::optional<int> port;
    /// Kill the RM if the starting thread exits. Off, the RM outlives the
    /// caller until stopped.
    bool die_with_parent = false;
    std::optional<std::filesystem::path> log_path;
    double ready_timeout_s = 30;
  };

  /// Spawns `pilotlet-rm serve` and waits for it to report ready. Throws
  /// kBootFailed when it does not within the timeout.
  static RmProcess Start(const Options &options);

  RmProcess() = default;
  RmProcess(RmProcess &&) = default;
  RmProcess &operator=(RmProcess &&) = default;

  const std::string &endpoint() const { return endpoint_; }
  pid_t pid() const { return process_.pid(); }
  /// Shuts the RM down over HTTP and reaps it, killing it if it does not
  /// exit within `timeout_s`.
  void Stop(double timeout_s = 10);

 private:
  ChildProcess process_;
  std::string endpoint_;
};

/// Asks the RM at `endpoint` to shut down and waits until it stops
/// answering. A stopped RM is a no-op. Returns false on timeout.
bool StopCluster(const std::string &endpoint, double timeout_s = 10);

}  // namespace pilotlet::minicluster
