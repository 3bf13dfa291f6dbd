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

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "pilotlet/core/process.h"
#include "pilotlet/saga/job.h"

namespace pilotlet::saga::internal {

/// Hooks that distinguish one adaptor from another. All hooks run under the
/// engine lock.
struct EnginePolicy {
  std::string adaptor_name;
  std::filesystem::path scratch_dir;
  /// Remove `scratch_dir` on destruction unless detached.
  bool owns_scratch = false;
  /// Start jobs inside Submit rather than from the queue.
  bool immediate = false;
  /// Throws kSubmitFailed for jobs this resource can never run.
  std::function<void(const JobDescription &)> admit;
  std::function<double()> queue_wait_s;
  std::function<std::optional<std::vector<NodeGrant>>(const JobDescription &)> allocate;
  std::function<void(const std::vector<NodeGrant> &)> release;
  std::function<std::map<std::string, std::string>(const JobDescription &)> env;
};

/// Process-backed job lifecycle shared by the adaptors. One monitor thread
/// dispatches queued jobs, reaps exits and enforces wall time and cancel
/// escalation.
class Engine {
 public:
  explicit Engine(EnginePolicy policy);
  ~Engine();

  JobHandle Submit(const JobDescription &d);
  JobState State(const JobHandle &h);
  JobInfo Info(const JobHandle &h);
  JobState Cancel(const JobHandle &h);
  JobState Wait(const JobHandle &h, double timeout_s);
  void Detach();

 private:
  struct Job {
    std::string id;
    JobDescription desc;
    JobInfo info;
    int64_t eligible_us = 0;
    int64_t started_us = 0;
    ChildProcess proc;
    bool cancel_requested = false;
    int64_t kill_deadline_us = 0;
    bool killed = false;
    bool walltime_exceeded = false;
  };

  Job &FindLocked(const JobHandle &h);
  void StartLocked(Job &job, std::vector<NodeGrant> grants);
  void FinishLocked(Job &job, JobState state, std::optional<int> exit_code);
  void ReapLocked();
  void DispatchLocked();
  void Run();

  EnginePolicy policy_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable done_;
  std::map<std::string, std::unique_ptr<Job>> jobs_;
  std::deque<std::string> queue_;
  std::set<std::string> running_;
  uint64_t counter_ = 0;
  bool stop_ = false;
  bool detached_ = false;
  std::thread monitor_;
};

/// A fresh directory under the system temp dir.
std::filesystem::path MakeScratchDir(const std::string &tag);

}  // namespace pilotlet::saga::internal
