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

#include "engine.h"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"

namespace pilotlet::saga {

namespace fs = std::filesystem;

std::string_view ToString(JobState s) {
  switch (s) {
    case JobState::kQueued:
      return "QUEUED";
    case JobState::kRunning:
      return "RUNNING";
    case JobState::kDone:
      return "DONE";
    case JobState::kFailed:
      return "FAILED";
    case JobState::kCanceled:
      return "CANCELED";
  }
  return "UNKNOWN";
}

bool IsTerminal(JobState s) {
  return s == JobState::kDone || s == JobState::kFailed || s == JobState::kCanceled;
}

std::vector<std::string> CheckJobDescription(const JobDescription &d) {
  std::vector<std::string> v;
  if (d.executable.empty()) v.push_back("executable must be non-empty");
  if (d.total_cores < 1) v.push_back("total_cores >= 1 required");
  if (d.wall_time_s < 0) v.push_back("wall_time_s must not be negative");
  if (d.memory_mb_per_node < 0) v.push_back("memory_mb_per_node must not be negative");
  return v;
}

std::string FormatNodefile(const std::vector<NodeGrant> &grants) {
  std::string out;
  for (const auto &g : grants) {
    for (int64_t i = 0; i < g.cores; ++i) out += g.hostname + "\n";
  }
  return out;
}

namespace internal {

namespace {

constexpr int64_t kCancelGraceUs = 3000000;
constexpr auto kMonitorPeriod = std::chrono::milliseconds(20);

}  // namespace

fs::path MakeScratchDir(const std::string &tag) {
  static std::atomic<int> counter{0};
  fs::path dir = fs::temp_directory_path() /
                 ("pilotlet-" + tag + "-" + std::to_string(getpid()) + "-" +
                  std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Engine::Engine(EnginePolicy policy) : policy_(std::move(policy)) {
  std::error_code ec;
  fs::create_directories(policy_.scratch_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailed, "cannot create " + policy_.scratch_dir.string());
  }
  monitor_ = std::thread([this] { Run(); });
}

Engine::~Engine() {
  std::unique_lock<std::mutex> lk(mu_);
  if (!detached_) {
    for (auto &id : queue_) FinishLocked(*jobs_[id], JobState::kCanceled, std::nullopt);
    queue_.clear();
    int64_t deadline = MonotonicMicros() + kCancelGraceUs;
    for (const auto &id : running_) {
      Job &job = *jobs_[id];
      job.cancel_requested = true;
      job.kill_deadline_us = deadline;
      job.proc.Signal(SIGTERM);
    }
    wake_.notify_all();
    done_.wait_for(lk, std::chrono::microseconds(2 * kCancelGraceUs),
                   [this] { return running_.empty(); });
  }
  stop_ = true;
  wake_.notify_all();
  lk.unlock();
  monitor_.join();
  if (policy_.owns_scratch && !detached_) {
    std::error_code ec;
    fs::remove_all(policy_.scratch_dir, ec);
  }
}

JobHandle Engine::Submit(const JobDescription &d) {
  auto violations = CheckJobDescription(d);
  if (!violations.empty()) {
    std::string first = violations.front();
    throw Error(ErrorCode::kValidation, "invalid job description: " + first,
                std::move(violations));
  }
  std::unique_lock<std::mutex> lk(mu_);
  if (policy_.admit) policy_.admit(d);
  char id[64];
  std::snprintf(id, sizeof(id), "%s.%06llu", policy_.adaptor_name.c_str(),
                static_cast<unsigned long long>(++counter_));
  auto job = std::make_unique<Job>();
  job->id = id;
  job->desc = d;
  job->info.state = JobState::kQueued;
  job->info.submit_time = Stamp(id, "job_submit");
  fs::path dir = policy_.scratch_dir / id;
  fs::create_directories(dir);
  job->info.nodefile = dir / "nodefile";
  job->info.stdout_path = d.stdout_path.empty() ? dir / "stdout" : d.stdout_path;
  job->info.stderr_path = d.stderr_path.empty() ? dir / "stderr" : d.stderr_path;
  double wait = policy_.queue_wait_s ? policy_.queue_wait_s() : 0.0;
  job->eligible_us = job->info.submit_time.mono_us + static_cast<int64_t>(wait * 1e6);
  Job &ref = *job;
  jobs_.emplace(ref.id, std::move(job));
  JobHandle handle{ref.id, policy_.adaptor_name, ref.info.submit_time};
  if (policy_.immediate) {
    auto grants = policy_.allocate(d);
    if (!grants) {
      jobs_.erase(handle.job_id);
      throw Error(ErrorCode::kSubmitFailed, "no capacity for " + handle.job_id);
    }
    try {
      StartLocked(ref, std::move(*grants));
    } catch (const Error &e) {
      jobs_.erase(handle.job_id);
      throw Error(ErrorCode::kSubmitFailed, e.what());
    }
  } else {
    queue_.push_back(ref.id);
    wake_.notify_all();
  }
  return handle;
}

void Engine::StartLocked(Job &job, std::vector<NodeGrant> grants) {
  job.info.grants = std::move(grants);
  try {
    WriteFile(job.info.nodefile, FormatNodefile(job.info.grants));
    WriteFile(job.info.stdout_path, "");
    WriteFile(job.info.stderr_path, "");
    SpawnOptions opts;
    opts.argv.push_back(job.desc.executable);
    opts.argv.insert(opts.argv.end(), job.desc.arguments.begin(), job.desc.arguments.end());
    opts.env = job.desc.environment;
    if (policy_.env) {
      for (auto &[k, v] : policy_.env(job.desc)) opts.env[k] = v;
    }
    opts.env[kNodefileEnv] = job.info.nodefile.string();
    opts.env[kJobIdEnv] = job.id;
    opts.cwd = job.desc.working_directory.empty() ? job.info.nodefile.parent_path()
                                                  : job.desc.working_directory;
    opts.stdout_path = job.info.stdout_path;
    opts.stderr_path = job.info.stderr_path;
    opts.new_process_group = true;
    job.proc = ChildProcess::Spawn(opts);
  } catch (...) {
    if (policy_.release) policy_.release(job.info.grants);
    throw;
  }
  job.info.state = JobState::kRunning;
  job.info.start_time = Stamp(job.id, "job_start");
  job.started_us = job.info.start_time->mono_us;
  running_.insert(job.id);
}

void Engine::FinishLocked(Job &job, JobState state, std::optional<int> exit_code) {
  if (job.info.state == JobState::kRunning && policy_.release) policy_.release(job.info.grants);
  running_.erase(job.id);
  job.info.state = state;
  job.info.exit_code = exit_code;
  job.info.end_time = Stamp(job.id, "job_end");
  done_.notify_all();
}

void Engine::ReapLocked() {
  int64_t now = MonotonicMicros();
  std::vector<std::string> ids(running_.begin(), running_.end());
  for (const auto &id : ids) {
    Job &job = *jobs_[id];
    if (auto status = job.proc.TryWait()) {
      JobState s = JobState::kFailed;
      if (job.cancel_requested) {
        s = JobState::kCanceled;
      } else if (*status == 0 && !job.walltime_exceeded) {
        s = JobState::kDone;
      }
      FinishLocked(job, s, *status);
      continue;
    }
    if (job.killed) continue;
    if (job.cancel_requested && now >= job.kill_deadline_us) {
      job.proc.Signal(SIGKILL);
      job.killed = true;
    } else if (!job.cancel_requested && job.desc.wall_time_s > 0 &&
               now - job.started_us > static_cast<int64_t>(job.desc.wall_time_s * 1e6)) {
      job.walltime_exceeded = true;
      job.proc.Signal(SIGKILL);
      job.killed = true;
    }
  }
}

void Engine::DispatchLocked() {
  int64_t now = MonotonicMicros();
  for (auto it = queue_.begin(); it != queue_.end();) {
    Job &job = *jobs_[*it];
    if (now < job.eligible_us) {
      ++it;
      continue;
    }
    auto grants = policy_.allocate(job.desc);
    if (!grants) break;
    try {
      StartLocked(job, std::move(*grants));
    } catch (const Error &) {
      FinishLocked(job, JobState::kFailed, std::nullopt);
    }
    it = queue_.erase(it);
  }
}

void Engine::Run() {
  std::unique_lock<std::mutex> lk(mu_);
  while (!stop_) {
    ReapLocked();
    DispatchLocked();
    wake_.wait_for(lk, kMonitorPeriod);
  }
}

Engine::Job &Engine::FindLocked(const JobHandle &h) {
  auto it = jobs_.find(h.job_id);
  if (it == jobs_.end() || h.adaptor_name != policy_.adaptor_name) {
    throw Error(ErrorCode::kUnknownJob, h.job_id);
  }
  return *it->second;
}

JobState Engine::State(const JobHandle &h) {
  std::lock_guard<std::mutex> lk(mu_);
  return FindLocked(h).info.state;
}

JobInfo Engine::Info(const JobHandle &h) {
  std::lock_guard<std::mutex> lk(mu_);
  return FindLocked(h).info;
}

JobState Engine::Cancel(const JobHandle &h) {
  std::unique_lock<std::mutex> lk(mu_);
  Job &job = FindLocked(h);
  switch (job.info.state) {
    case JobState::kCanceled:
      return JobState::kCanceled;
    case JobState::kDone:
    case JobState::kFailed:
      throw Error(ErrorCode::kAlreadyTerminal,
                  h.job_id + " is " + std::string(ToString(job.info.state)));
    case JobState::kQueued:
      queue_.erase(std::find(queue_.begin(), queue_.end(), job.id));
      FinishLocked(job, JobState::kCanceled, std::nullopt);
      return JobState::kCanceled;
    case JobState::kRunning:
      break;
  }
  if (!job.cancel_requested) {
    job.cancel_requested = true;
    job.kill_deadline_us = MonotonicMicros() + kCancelGraceUs;
    job.proc.Signal(SIGTERM);
    wake_.notify_all();
  }
  done_.wait(lk, [&] { return IsTerminal(job.info.state); });
  return job.info.state;
}

JobState Engine::Wait(const JobHandle &h, double timeout_s) {
  std::unique_lock<std::mutex> lk(mu_);
  Job &job = FindLocked(h);
  done_.wait_for(lk, std::chrono::duration<double>(timeout_s),
                 [&] { return IsTerminal(job.info.state); });
  return job.info.state;
}

void Engine::Detach() {
  std::lock_guard<std::mutex> lk(mu_);
  detached_ = true;
}

}  // namespace internal
}  // namespace pilotlet::saga
