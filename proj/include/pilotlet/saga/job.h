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
#include <optional>
#include <string>
#include <vector>

#include "pilotlet/core/types.h"

namespace pilotlet::saga {

enum class JobState { kQueued, kRunning, kDone, kFailed, kCanceled };

std::string_view ToString(JobState s);
bool IsTerminal(JobState s);

/// Environment contract every adaptor fulfils for the processes it starts.
inline constexpr const char *kNodefileEnv = "PILOTLET_NODEFILE";
inline constexpr const char *kCoresPerNodeEnv = "PILOTLET_CORES_PER_NODE";
inline constexpr const char *kMemPerNodeEnv = "PILOTLET_MEM_MB_PER_NODE";
inline constexpr const char *kJobIdEnv = "PILOTLET_JOB_ID";

struct JobDescription {
  std::string executable;
  std::vector<std::string> arguments;
  std::map<std::string, std::string> environment;
  std::filesystem::path working_directory;
  int64_t total_cores = 1;
  /// 0 disables the limit. Jobs exceeding it are killed and end FAILED.
  double wall_time_s = 0;
  std::optional<std::string> queue;
  /// Empty means a file in the adaptor's per-job directory.
  std::filesystem::path stdout_path;
  std::filesystem::path stderr_path;
  /// Memory the job wants per node; 0 means the adaptor default.
  int64_t memory_mb_per_node = 0;
};

/// All violations; empty when valid.
std::vector<std::string> CheckJobDescription(const JobDescription &d);

struct JobHandle {
  std::string job_id;
  std::string adaptor_name;
  TimingRecord submit_time;
};

/// Cores granted on one host.
struct NodeGrant {
  int64_t node_index = 0;
  std::string hostname;
  int64_t cores = 0;
};

struct JobInfo {
  JobState state = JobState::kQueued;
  std::optional<int> exit_code;
  std::vector<NodeGrant> grants;
  std::filesystem::path nodefile;
  std::filesystem::path stdout_path;
  std::filesystem::path stderr_path;
  TimingRecord submit_time;
  std::optional<TimingRecord> start_time;
  std::optional<TimingRecord> end_time;
};

/// Uniform job submission over a resource manager.
///
/// All methods are safe to call concurrently.
class JobAdaptor {
 public:
  virtual ~JobAdaptor() = default;

  virtual std::string name() const = 0;
  /// Throws kValidation, kSubmitFailed.
  virtual JobHandle Submit(const JobDescription &d) = 0;
  /// Throws kUnknownJob.
  virtual JobState State(const JobHandle &h) = 0;
  virtual JobInfo Info(const JobHandle &h) = 0;
  /// Terminates (or dequeues) the job and returns kCanceled. Canceling a
  /// canceled job returns kCanceled; a DONE or FAILED job throws
  /// kAlreadyTerminal.
  virtual JobState Cancel(const JobHandle &h) = 0;
  /// Blocks until the job is terminal or `timeout_s` passes; returns the
  /// state at that point.
  virtual JobState Wait(const JobHandle &h, double timeout_s) = 0;
  /// Leaves running jobs alive when the adaptor is destroyed.
  virtual void Detach() = 0;
};

namespace internal {
class Engine;
}

struct LocalAdaptorConfig {
  /// Per-job directories (nodefile, default stdout/stderr). Empty picks a
  /// fresh directory under the system temp dir.
  std::filesystem::path scratch_dir;
  std::string hostname = "localhost";
  int64_t default_memory_mb_per_node = 4096;
};

/// Runs each job as a direct child process on this host, immediately.
class LocalAdaptor : public JobAdaptor {
 public:
  explicit LocalAdaptor(LocalAdaptorConfig config = {});
  ~LocalAdaptor() override;

  std::string name() const override { return "local"; }
  JobHandle Submit(const JobDescription &d) override;
  JobState State(const JobHandle &h) override;
  JobInfo Info(const JobHandle &h) override;
  JobState Cancel(const JobHandle &h) override;
  JobState Wait(const JobHandle &h, double timeout_s) override;
  void Detach() override;

 private:
  std::unique_ptr<internal::Engine> engine_;
};

struct SimBatchConfig {
  int64_t node_count = 1;
  int64_t cores_per_node = 16;
  int64_t memory_mb_per_node = 32768;
  /// Queue wait per job: constant, or uniform in [min, max] when
  /// `queue_wait_max_s` > `queue_wait_s`.
  double queue_wait_s = 0;
  double queue_wait_max_s = 0;
  uint64_t seed = 0;
  std::filesystem::path scratch_dir;
};

/// An in-process batch queue over a simulated node inventory. Nodes are
/// named simnode-<i>; each has a directory under the scratch dir. Jobs are
/// granted cores first-fit by node index, in submission order among jobs
/// whose queue wait has elapsed, without backfilling.
class SimBatchAdaptor : public JobAdaptor {
 public:
  explicit SimBatchAdaptor(SimBatchConfig config = {});
  ~SimBatchAdaptor() override;

  std::string name() const override { return "simbatch"; }
  JobHandle Submit(const JobDescription &d) override;
  JobState State(const JobHandle &h) override;
  JobInfo Info(const JobHandle &h) override;
  JobState Cancel(const JobHandle &h) override;
  JobState Wait(const JobHandle &h, double timeout_s) override;
  void Detach() override;

  const SimBatchConfig &config() const { return config_; }

 private:
  SimBatchConfig config_;
  std::unique_ptr<internal::Engine> engine_;
};

/// Writes the nodefile for `grants`: each hostname repeated once per core,
/// LF-terminated.
std::string FormatNodefile(const std::vector<NodeGrant> &grants);

}  // namespace pilotlet::saga
