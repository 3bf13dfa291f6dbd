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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <thread>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/core/process.h"
#include "pilotlet/saga/job.h"
#include "test_util.h"

namespace pilotlet::saga {
namespace {

using namespace std::chrono_literals;

JobDescription Shell(const std::string &script, int64_t cores = 1) {
  JobDescription d;
  d.executable = "/bin/sh";
  d.arguments = {"-c", script};
  d.total_cores = cores;
  return d;
}

std::unique_ptr<JobAdaptor> MakeAdaptor(const std::string &name) {
  if (name == "local") return std::make_unique<LocalAdaptor>();
  SimBatchConfig c;
  c.node_count = 2;
  c.cores_per_node = 4;
  c.memory_mb_per_node = 8192;
  return std::make_unique<SimBatchAdaptor>(c);
}

class AdaptorConformance : public ::testing::TestWithParam<std::string> {
 protected:
  void SetUp() override { adaptor_ = MakeAdaptor(GetParam()); }
  std::unique_ptr<JobAdaptor> adaptor_;
};

TEST_P(AdaptorConformance, TrueReachesDoneWithExitZero) {
  JobDescription d;
  d.executable = "/bin/true";
  auto h = adaptor_->Submit(d);
  EXPECT_EQ(h.adaptor_name, GetParam());
  EXPECT_EQ(adaptor_->Wait(h, 10), JobState::kDone);
  auto info = adaptor_->Info(h);
  EXPECT_EQ(info.exit_code, 0);
  ASSERT_TRUE(info.start_time && info.end_time);
  EXPECT_LE(info.submit_time.mono_us, info.start_time->mono_us);
  EXPECT_LE(info.start_time->mono_us, info.end_time->mono_us);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(adaptor_->State(h), JobState::kDone);
}

TEST_P(AdaptorConformance, NonZeroExitFails) {
  auto h = adaptor_->Submit(Shell("exit 3"));
  EXPECT_EQ(adaptor_->Wait(h, 10), JobState::kFailed);
  EXPECT_EQ(adaptor_->Info(h).exit_code, 3);
}

TEST_P(AdaptorConformance, InjectsNodeDiscoveryEnvironment) {
  auto h = adaptor_->Submit(
      Shell("cat \"$PILOTLET_NODEFILE\"; echo \"$PILOTLET_CORES_PER_NODE $PILOTLET_MEM_MB_PER_NODE\"",
            3));
  ASSERT_EQ(adaptor_->Wait(h, 10), JobState::kDone);
  auto info = adaptor_->Info(h);
  auto lines = SplitLines(ReadFile(info.stdout_path));
  ASSERT_EQ(lines.size(), 4u);
  std::map<std::string, int64_t> hosts;
  for (int i = 0; i < 3; ++i) ++hosts[lines[i]];
  int64_t granted = 0;
  for (const auto &g : info.grants) {
    EXPECT_EQ(hosts[g.hostname], g.cores);
    granted += g.cores;
  }
  EXPECT_EQ(granted, 3);
  auto fields = SplitLines(std::string(lines[3]) + "\n");
  EXPECT_NE(lines[3].find(' '), std::string::npos);
  EXPECT_EQ(ReadFile(info.nodefile), FormatNodefile(info.grants));
}

TEST_P(AdaptorConformance, UserEnvironmentAndWorkingDirectory) {
  auto dir = testing_util::TempDir("wd");
  auto d = Shell("echo \"$GREETING\" > here.txt");
  d.environment["GREETING"] = "hello";
  d.working_directory = dir;
  auto h = adaptor_->Submit(d);
  ASSERT_EQ(adaptor_->Wait(h, 10), JobState::kDone);
  EXPECT_EQ(ReadFile(dir / "here.txt"), "hello\n");
  std::filesystem::remove_all(dir);
}

TEST_P(AdaptorConformance, UnknownJob) {
  JobHandle bogus{"nope", GetParam(), {}};
  try {
    adaptor_->State(bogus);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownJob);
  }
  EXPECT_THROW(adaptor_->Cancel(bogus), Error);
}

TEST_P(AdaptorConformance, InvalidDescriptionIsRejected) {
  JobDescription d;
  d.total_cores = 0;
  try {
    adaptor_->Submit(d);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_EQ(e.details().size(), 2u);
  }
}

TEST_P(AdaptorConformance, CancelRunningKillsProcessGroup) {
  auto h = adaptor_->Submit(Shell("echo $$; sleep 30 & wait"));
  ASSERT_TRUE(testing_util::WaitUntil(
      [&] {
        auto info = adaptor_->Info(h);
        return info.state == JobState::kRunning && !ReadFile(info.stdout_path).empty();
      },
      10));
  pid_t pid = std::stoi(SplitLines(ReadFile(adaptor_->Info(h).stdout_path))[0]);
  ASSERT_TRUE(ProcessAlive(pid));
  auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(adaptor_->Cancel(h), JobState::kCanceled);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 5s);
  EXPECT_FALSE(ProcessAlive(pid));
  EXPECT_EQ(adaptor_->State(h), JobState::kCanceled);
  EXPECT_EQ(adaptor_->Cancel(h), JobState::kCanceled);
}

TEST_P(AdaptorConformance, CancelDoneIsAlreadyTerminal) {
  JobDescription d;
  d.executable = "/bin/true";
  auto h = adaptor_->Submit(d);
  ASSERT_EQ(adaptor_->Wait(h, 10), JobState::kDone);
  try {
    adaptor_->Cancel(h);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlreadyTerminal);
  }
}

// Polled states form a path through QUEUED*, RUNNING*, DONE*.
TEST_P(AdaptorConformance, PollTraceIsMonotone) {
  auto h = adaptor_->Submit(Shell("sleep 1"));
  std::vector<JobState> trace;
  while (true) {
    trace.push_back(adaptor_->State(h));
    if (IsTerminal(trace.back())) break;
    std::this_thread::sleep_for(100ms);
  }
  for (int i = 0; i < 5; ++i) trace.push_back(adaptor_->State(h));
  auto rank = [](JobState s) { return static_cast<int>(s); };
  for (size_t i = 1; i < trace.size(); ++i) EXPECT_LE(rank(trace[i - 1]), rank(trace[i]));
  EXPECT_EQ(trace.back(), JobState::kDone);
  EXPECT_GE(std::count(trace.begin(), trace.end(), JobState::kRunning), 5);
}

TEST_P(AdaptorConformance, WallTimeKillsJob) {
  auto d = Shell("sleep 30");
  d.wall_time_s = 0.5;
  auto h = adaptor_->Submit(d);
  EXPECT_EQ(adaptor_->Wait(h, 10), JobState::kFailed);
}

TEST_P(AdaptorConformance, ConcurrentSubmitters) {
  std::vector<std::thread> threads;
  std::vector<std::vector<JobHandle>> handles(4);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) {
        JobDescription d;
        d.executable = "/bin/true";
        handles[t].push_back(adaptor_->Submit(d));
      }
    });
  }
  for (auto &t : threads) t.join();
  std::set<std::string> ids;
  for (auto &hs : handles) {
    for (auto &h : hs) {
      ids.insert(h.job_id);
      EXPECT_EQ(adaptor_->Wait(h, 20), JobState::kDone);
    }
  }
  EXPECT_EQ(ids.size(), 20u);
}

INSTANTIATE_TEST_SUITE_P(Adaptors, AdaptorConformance, ::testing::Values("local", "simbatch"),
                         [](const auto &info) { return info.param; });

TEST(LocalAdaptor, MissingExecutableFails) {
  LocalAdaptor a;
  JobDescription d;
  d.executable = "/does/not/exist";
  auto h = a.Submit(d);
  EXPECT_EQ(h.adaptor_name, "local");
  EXPECT_EQ(a.Wait(h, 10), JobState::kFailed);
  EXPECT_EQ(a.Info(h).exit_code, 127);
}

TEST(LocalAdaptor, StartsImmediately) {
  LocalAdaptor a;
  auto h = a.Submit(Shell("sleep 0.3"));
  EXPECT_EQ(a.State(h), JobState::kRunning);
  EXPECT_EQ(a.Wait(h, 10), JobState::kDone);
}

TEST(LocalAdaptor, MemoryOverrideIsInjected) {
  LocalAdaptor a;
  auto d = Shell("echo $PILOTLET_CORES_PER_NODE $PILOTLET_MEM_MB_PER_NODE");
  d.total_cores = 16;
  d.memory_mb_per_node = 32768;
  auto h = a.Submit(d);
  ASSERT_EQ(a.Wait(h, 10), JobState::kDone);
  EXPECT_EQ(ReadFile(a.Info(h).stdout_path), "16 32768\n");
}

TEST(SimBatch, MissingExecutableIsSubmitFailed) {
  SimBatchAdaptor a;
  JobDescription d;
  d.executable = "/does/not/exist";
  try {
    a.Submit(d);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kSubmitFailed);
  }
}

TEST(SimBatch, OversizedJobIsSubmitFailed) {
  SimBatchConfig c;
  c.node_count = 2;
  c.cores_per_node = 4;
  SimBatchAdaptor a(c);
  try {
    a.Submit(Shell("true", 9));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kSubmitFailed);
  }
}

TEST(SimBatch, QueueWaitIsHonored) {
  SimBatchConfig c;
  c.queue_wait_s = 2.0;
  SimBatchAdaptor a(c);
  auto h = a.Submit(Shell("sleep 0.2"));
  EXPECT_EQ(a.State(h), JobState::kQueued);
  ASSERT_TRUE(testing_util::WaitUntil([&] { return a.State(h) != JobState::kQueued; }, 5, 0.01));
  auto info = a.Info(h);
  ASSERT_TRUE(info.start_time);
  double waited = (info.start_time->mono_us - info.submit_time.mono_us) / 1e6;
  EXPECT_NEAR(waited, 2.0, 0.5);
  EXPECT_EQ(a.Wait(h, 10), JobState::kDone);
}

TEST(SimBatch, CancelQueuedNeverRuns) {
  SimBatchConfig c;
  c.queue_wait_s = 1.0;
  SimBatchAdaptor a(c);
  auto marker = testing_util::TempDir("never") / "ran";
  auto h = a.Submit(Shell("touch " + marker.string()));
  EXPECT_EQ(a.Cancel(h), JobState::kCanceled);
  std::this_thread::sleep_for(1500ms);
  EXPECT_FALSE(std::filesystem::exists(marker));
  EXPECT_FALSE(a.Info(h).start_time);
  std::filesystem::remove_all(marker.parent_path());
}

TEST(SimBatch, GrantsAreFirstFitByNodeIndex) {
  SimBatchConfig c;
  c.node_count = 3;
  c.cores_per_node = 4;
  SimBatchAdaptor a(c);
  auto h1 = a.Submit(Shell("sleep 1", 3));
  auto h2 = a.Submit(Shell("sleep 1", 4));
  ASSERT_TRUE(testing_util::WaitUntil([&] { return a.State(h2) == JobState::kRunning; }, 5));
  auto g1 = a.Info(h1).grants;
  auto g2 = a.Info(h2).grants;
  ASSERT_EQ(g1.size(), 1u);
  EXPECT_EQ(g1[0].hostname, "simnode-0");
  EXPECT_EQ(g1[0].cores, 3);
  ASSERT_EQ(g2.size(), 2u);
  EXPECT_EQ(g2[0].hostname, "simnode-0");
  EXPECT_EQ(g2[0].cores, 1);
  EXPECT_EQ(g2[1].hostname, "simnode-1");
  EXPECT_EQ(g2[1].cores, 3);
}

TEST(SimBatch, FifoWithoutOvertaking) {
  SimBatchConfig c;
  c.node_count = 1;
  c.cores_per_node = 4;
  SimBatchAdaptor a(c);
  auto big1 = a.Submit(Shell("sleep 0.5", 3));
  auto big2 = a.Submit(Shell("sleep 0.1", 3));
  auto small = a.Submit(Shell("sleep 0.1", 1));
  ASSERT_EQ(a.Wait(small, 10), JobState::kDone);
  ASSERT_EQ(a.Wait(big2, 10), JobState::kDone);
  auto s2 = a.Info(big2).start_time->mono_us;
  auto s3 = a.Info(small).start_time->mono_us;
  EXPECT_LE(s2, s3);
  EXPECT_GE(s2, a.Info(big1).end_time->mono_us);
}

// Randomized storm: allocation intervals never hold more than N*C cores.
TEST(SimBatch, CapacityNeverExceeded) {
  SimBatchConfig c;
  c.node_count = 2;
  c.cores_per_node = 3;
  c.queue_wait_s = 0;
  c.queue_wait_max_s = 0.2;
  c.seed = 5;
  SimBatchAdaptor a(c);
  std::mt19937_64 rng(99);
  std::vector<JobHandle> handles;
  for (int i = 0; i < 40; ++i) {
    int64_t cores = 1 + static_cast<int64_t>(rng() % 6);
    double sleep = 0.01 * static_cast<double>(rng() % 10);
    handles.push_back(a.Submit(Shell("sleep " + std::to_string(sleep), cores)));
  }
  std::vector<std::pair<int64_t, int64_t>> deltas;
  for (auto &h : handles) {
    ASSERT_EQ(a.Wait(h, 60), JobState::kDone);
    auto info = a.Info(h);
    int64_t cores = 0;
    for (auto &g : info.grants) cores += g.cores;
    deltas.push_back({info.start_time->mono_us, cores});
    deltas.push_back({info.end_time->mono_us, -cores});
  }
  std::sort(deltas.begin(), deltas.end());
  int64_t in_use = 0;
  for (auto &[t, d] : deltas) {
    in_use += d;
    ASSERT_LE(in_use, 6);
    ASSERT_GE(in_use, 0);
  }
}

TEST(Nodefile, RepeatsHostPerCore) {
  EXPECT_EQ(FormatNodefile({{0, "n0", 2}, {1, "n1", 1}}), "n0\nn0\nn1\n");
  EXPECT_EQ(FormatNodefile({}), "");
}

}  // namespace
}  // namespace pilotlet::saga
