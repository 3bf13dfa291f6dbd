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
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "pilotlet/core/error.h"
#include "pilotlet/minicluster/rm_client.h"
#include "pilotlet/pilotmgr/pilot_manager.h"
#include "pilotlet/saga/job.h"
#include "test_util.h"

namespace pilotlet::pilotmgr {
namespace {

namespace fs = std::filesystem;
using testing_util::TempDir;
using testing_util::WaitUntil;

template <typename Fn>
ErrorCode CodeOf(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kValidation;
}

ComputeUnitDescription Cmd(std::vector<std::string> argv, int64_t cores = 1) {
  ComputeUnitDescription d;
  d.executable = argv.front();
  d.arguments.assign(argv.begin() + 1, argv.end());
  d.cores = cores;
  d.memory_mb = 64;
  return d;
}

class ManagerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = TempDir("pmgr");
    options_.store_location = (dir_ / "store").string();
    options_.agent_poll_interval_s = 0.05;
    options_.agent_monitor_interval_s = 0.05;
    options_.agent_heartbeat_interval_s = 0.5;
    options_.watch_interval_s = 0.05;
  }

  PilotManager &Manager() {
    if (!mgr_) mgr_ = std::make_unique<PilotManager>(options_);
    return *mgr_;
  }

  PilotDescription Pilot(int64_t cores = 4, ClusterFlavor flavor = ClusterFlavor::kNone) {
    PilotDescription d;
    d.cores = cores;
    d.memory_mb_per_node = 16384;
    d.runtime_s = 600;
    d.cluster_flavor = flavor;
    d.sandbox_root = (dir_ / "sandbox").string();
    return d;
  }

  PilotHandle ActivePilot(const PilotDescription &d) {
    PilotHandle p = Manager().SubmitPilot(d);
    EXPECT_EQ(Manager().WaitPilot(p, 30), PilotState::kActive) << p.record().error.value_or("");
    return p;
  }

  /// A pilot whose batch job never leaves the queue during the test.
  PilotHandle QueuedPilot(int64_t cores) {
    saga::SimBatchConfig cfg;
    cfg.queue_wait_s = 600;
    cfg.scratch_dir = dir_ / "simbatch-queued";
    Manager().AddAdaptor("queued", std::make_shared<saga::SimBatchAdaptor>(cfg));
    PilotDescription d = Pilot(cores);
    d.resource_name = "queued";
    return Manager().SubmitPilot(d);
  }

  fs::path dir_;
  ManagerOptions options_;
  std::unique_ptr<PilotManager> mgr_;
};

class FailingAdaptor : public saga::JobAdaptor {
 public:
  std::string name() const override { return "failing"; }
  saga::JobHandle Submit(const saga::JobDescription &) override {
    throw Error(ErrorCode::kSubmitFailed, "queue closed");
  }
  saga::JobState State(const saga::JobHandle &) override { return saga::JobState::kFailed; }
  saga::JobInfo Info(const saga::JobHandle &) override { return {}; }
  saga::JobState Cancel(const saga::JobHandle &) override { return saga::JobState::kFailed; }
  saga::JobState Wait(const saga::JobHandle &, double) override { return saga::JobState::kFailed; }
  void Detach() override {}
};

TEST_F(ManagerTest, MemoryStoreIsRejected) {
  options_.store_location = "mem://x";
  EXPECT_EQ(CodeOf([&] { PilotManager m(options_); }), ErrorCode::kValidation);
}

TEST_F(ManagerTest, LocalPilotBecomesActiveWithinTenSeconds) {
  PilotHandle p = Manager().SubmitPilot(Pilot());
  EXPECT_EQ(Manager().WaitPilot(p, 10), PilotState::kActive);
  auto rec = p.record();
  EXPECT_TRUE(rec.last_heartbeat_us.has_value());
  EXPECT_TRUE(fs::exists(dir_ / "sandbox" / p.pilot_id() / "agent.out"));
  std::vector<std::string> trace;
  for (const auto &e : Manager().store()->Journal()) {
    if (e.entity_id == p.pilot_id()) trace.push_back(e.new_state);
  }
  std::vector<std::string> expected = {"NEW", "PENDING_LAUNCH", "LAUNCHING", "ACTIVE"};
  ASSERT_GE(trace.size(), expected.size());
  EXPECT_EQ(std::vector<std::string>(trace.begin(), trace.begin() + 4), expected);
}

TEST_F(ManagerTest, InvalidDescriptionStoresNothing) {
  PilotDescription d = Pilot();
  d.cores = 0;
  EXPECT_EQ(CodeOf([&] { Manager().SubmitPilot(d); }), ErrorCode::kValidation);
  d = Pilot();
  d.resource_name = "nowhere";
  EXPECT_EQ(CodeOf([&] { Manager().SubmitPilot(d); }), ErrorCode::kValidation);
  EXPECT_TRUE(Manager().store()->ListPilots().empty());
}

TEST_F(ManagerTest, SubmitFailureFailsThePilot) {
  Manager().AddAdaptor("broken", std::make_shared<FailingAdaptor>());
  PilotDescription d = Pilot();
  d.resource_name = "broken";
  EXPECT_EQ(CodeOf([&] { Manager().SubmitPilot(d); }), ErrorCode::kSubmitFailed);
  auto ids = Manager().store()->ListPilots();
  ASSERT_EQ(ids.size(), 1u);
  auto rec = Manager().store()->GetPilot(ids[0]);
  EXPECT_EQ(rec.state, PilotState::kFailed);
  EXPECT_NE(rec.error.value_or("").find("SUBMIT_FAILED"), std::string::npos);
}

TEST_F(ManagerTest, YarnSpawnEndpointAnswersAndStopsOnCancel) {
  PilotHandle p = ActivePilot(Pilot(4, ClusterFlavor::kYarnLike));
  auto endpoint = p.record().cluster_endpoint;
  ASSERT_TRUE(endpoint && !endpoint->empty());
  minicluster::RmClient rm(*endpoint, 5);
  auto m = rm.GetMetrics();
  EXPECT_EQ(m.available.vcores, m.total.vcores - m.allocated.vcores);
  EXPECT_GT(m.total.vcores, 0);

  EXPECT_EQ(Manager().CancelPilot(p), PilotState::kCanceled);
  bool down = WaitUntil(
      [&] {
        try {
          minicluster::RmClient probe(*endpoint, 0.5);
          probe.GetHealth();
          return false;
        } catch (const Error &) {
          return true;
        }
      },
      5);
  EXPECT_TRUE(down);
}

TEST_F(ManagerTest, TenUnitsLandPendingOnOnePilot) {
  PilotHandle p = QueuedPilot(4);
  std::vector<ComputeUnitDescription> units(10, Cmd({"/bin/true"}));
  auto handles = Manager().SubmitUnits(p, units);
  ASSERT_EQ(handles.size(), 10u);
  auto recs = Manager().store()->ListUnits(p.pilot_id());
  ASSERT_EQ(recs.size(), 10u);
  for (const auto &r : recs) EXPECT_EQ(r.state, UnitState::kPending);
  for (const auto &h : handles) EXPECT_EQ(h.pilot_id(), p.pilot_id());
}

TEST_F(ManagerTest, TwoPilotsAlternate) {
  PilotHandle a = QueuedPilot(4);
  PilotHandle b = QueuedPilot(4);
  std::vector<ComputeUnitDescription> units(10, Cmd({"/bin/true"}));
  auto handles = Manager().SubmitUnits({a, b}, units);
  ASSERT_EQ(handles.size(), 10u);
  for (size_t i = 0; i < handles.size(); ++i) {
    EXPECT_EQ(handles[i].pilot_id(), (i % 2 == 0 ? a : b).pilot_id()) << i;
  }
  EXPECT_EQ(Manager().store()->ListUnits(a.pilot_id()).size(), 5u);
  EXPECT_EQ(Manager().store()->ListUnits(b.pilot_id()).size(), 5u);
}

TEST_F(ManagerTest, RoundRobinCountsDifferByAtMostOne) {
  std::mt19937_64 rng(11);
  std::vector<PilotHandle> pilots;
  for (int i = 0; i < 5; ++i) pilots.push_back(QueuedPilot(2));
  for (int trial = 0; trial < 20; ++trial) {
    size_t k = 1 + rng() % pilots.size();
    size_t n = rng() % 40;
    std::vector<PilotHandle> chosen(pilots.begin(), pilots.begin() + k);
    auto handles = Manager().SubmitUnits(chosen, std::vector<ComputeUnitDescription>(n, Cmd({"/bin/true"})));
    std::map<std::string, size_t> counts;
    for (const auto &p : chosen) counts[p.pilot_id()] = 0;
    for (const auto &h : handles) ++counts.at(h.pilot_id());
    auto [lo, hi] = std::minmax_element(counts.begin(), counts.end(),
                                        [](auto &x, auto &y) { return x.second < y.second; });
    EXPECT_LE(hi->second - lo->second, 1u) << "k=" << k << " n=" << n;
  }
}

TEST_F(ManagerTest, CapacityCheckMatchesOracle) {
  std::mt19937_64 rng(5);
  std::vector<int64_t> sizes = {2, 3, 8};
  std::vector<PilotHandle> pilots;
  for (int64_t c : sizes) pilots.push_back(QueuedPilot(c));
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ComputeUnitDescription> units;
    bool all_fit = true;
    for (size_t i = 0, n = 1 + rng() % 6; i < n; ++i) {
      int64_t cores = 1 + static_cast<int64_t>(rng() % 10);
      all_fit = all_fit && cores <= *std::max_element(sizes.begin(), sizes.end());
      units.push_back(Cmd({"/bin/true"}, cores));
    }
    size_t before = 0;
    for (const auto &p : pilots) before += Manager().store()->ListUnits(p.pilot_id()).size();
    if (all_fit) {
      auto handles = Manager().SubmitUnits(pilots, units);
      for (size_t i = 0; i < handles.size(); ++i) {
        auto rec = Manager().store()->GetPilot(handles[i].pilot_id());
        EXPECT_LE(units[i].cores, rec.description.cores) << i;
      }
    } else {
      EXPECT_EQ(CodeOf([&] { Manager().SubmitUnits(pilots, units); }), ErrorCode::kValidation);
      size_t after = 0;
      for (const auto &p : pilots) after += Manager().store()->ListUnits(p.pilot_id()).size();
      EXPECT_EQ(before, after);
    }
  }
}

TEST_F(ManagerTest, UnitTooLargeForSinglePilotIsValidation) {
  PilotHandle p = QueuedPilot(4);
  EXPECT_EQ(CodeOf([&] { Manager().SubmitUnits(p, {Cmd({"/bin/true"}, 5)}); }),
            ErrorCode::kValidation);
  EXPECT_TRUE(Manager().store()->ListUnits(p.pilot_id()).empty());
}

TEST_F(ManagerTest, InvalidUnitRejectsWholeBatch) {
  PilotHandle p = QueuedPilot(4);
  std::vector<ComputeUnitDescription> units(3, Cmd({"/bin/true"}));
  units[2].executable.clear();
  try {
    Manager().SubmitUnits(p, units);
    ADD_FAILURE() << "accepted an invalid unit";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    ASSERT_FALSE(e.details().empty());
    EXPECT_EQ(e.details()[0].rfind("unit 2", 0), 0u) << e.details()[0];
  }
  EXPECT_TRUE(Manager().store()->ListUnits(p.pilot_id()).empty());
}

TEST_F(ManagerTest, NoLivePilotIsRejected) {
  PilotHandle p = QueuedPilot(4);
  Manager().CancelPilot(p);
  EXPECT_EQ(CodeOf([&] { Manager().SubmitUnits(p, {Cmd({"/bin/true"})}); }),
            ErrorCode::kNoActivePilot);
  EXPECT_EQ(CodeOf([&] { Manager().SubmitUnits(std::vector<PilotHandle>{}, {Cmd({"/bin/true"})}); }),
            ErrorCode::kNoActivePilot);
}

TEST_F(ManagerTest, QuickUnitsFinish) {
  PilotHandle p = ActivePilot(Pilot());
  auto handles = Manager().SubmitUnits(p, std::vector<ComputeUnitDescription>(3, Cmd({"/bin/true"})));
  auto states = Manager().WaitUnits(handles, 30);
  ASSERT_EQ(states.size(), 3u);
  for (const auto &h : handles) {
    EXPECT_EQ(states.at(h.unit_id()), UnitState::kDone);
    EXPECT_EQ(h.exit_code(), 0);
  }
}

TEST_F(ManagerTest, ZeroTimeoutReportsPartialStates) {
  PilotHandle p = ActivePilot(Pilot());
  auto handles = Manager().SubmitUnits(p, std::vector<ComputeUnitDescription>(2, Cmd({"sleep", "30"})));
  try {
    Manager().WaitUnits(handles, 0);
    ADD_FAILURE() << "no timeout";
  } catch (const WaitTimeout &e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
    ASSERT_EQ(e.partial().size(), 2u);
    for (const auto &[id, s] : e.partial()) EXPECT_FALSE(IsTerminal(s)) << id;
  }
}

TEST_F(ManagerTest, ExitCodeOnePropagates) {
  PilotHandle p = ActivePilot(Pilot());
  auto handles = Manager().SubmitUnits(
      p, {Cmd({"/bin/true"}), Cmd({"/bin/sh", "-c", "echo out; exit 1"}), Cmd({"/bin/true"})});
  auto states = Manager().WaitUnits(handles, 30);
  EXPECT_EQ(states.at(handles[0].unit_id()), UnitState::kDone);
  EXPECT_EQ(states.at(handles[1].unit_id()), UnitState::kFailed);
  EXPECT_EQ(states.at(handles[2].unit_id()), UnitState::kDone);
  EXPECT_EQ(handles[1].exit_code(), 1);
  EXPECT_NE(handles[1].stdout_tail().find("out"), std::string::npos);
}

TEST_F(ManagerTest, CancelCascadesToPendingUnits) {
  PilotHandle p = ActivePilot(Pilot(1));
  auto blocker = Manager().SubmitUnits(p, {Cmd({"sleep", "60"})});
  ASSERT_TRUE(WaitUntil([&] { return blocker[0].state() == UnitState::kExecuting; }, 20));
  auto waiting = Manager().SubmitUnits(p, std::vector<ComputeUnitDescription>(5, Cmd({"/bin/true"})));
  for (const auto &h : waiting) EXPECT_FALSE(IsTerminal(h.state()));

  EXPECT_EQ(Manager().CancelPilot(p), PilotState::kCanceled);
  for (const auto &h : waiting) EXPECT_EQ(h.state(), UnitState::kCanceled);
  EXPECT_EQ(blocker[0].state(), UnitState::kCanceled);
  EXPECT_EQ(Manager().CancelPilot(p), PilotState::kCanceled);
  EXPECT_EQ(p.state(), PilotState::kCanceled);
}

TEST_F(ManagerTest, DeadAgentFailsPilotAndUnits) {
  fs::path script = dir_ / "fake-agent.sh";
  std::ofstream(script) << "#!/bin/sh\nsleep 0.5\nexit 9\n";
  fs::permissions(script, fs::perms::owner_all);
  options_.agent_binary = script;
  PilotHandle p = Manager().SubmitPilot(Pilot());
  auto handles = Manager().SubmitUnits(p, std::vector<ComputeUnitDescription>(3, Cmd({"/bin/true"})));
  ASSERT_TRUE(WaitUntil([&] { return p.state() == PilotState::kFailed; }, 10));
  EXPECT_NE(p.record().error.value_or("").find("exit code 9"), std::string::npos);
  auto states = Manager().WaitUnits(handles, 5);
  for (const auto &[id, s] : states) EXPECT_EQ(s, UnitState::kFailed) << id;
}

TEST_F(ManagerTest, SilentAgentIsFailedAndCanceled) {
  options_.agent_heartbeat_interval_s = 60;
  options_.heartbeat_timeout_s = 1;
  PilotHandle p = ActivePilot(Pilot());
  ASSERT_TRUE(WaitUntil([&] { return p.state() == PilotState::kFailed; }, 10));
  EXPECT_NE(p.record().error.value_or("").find("heartbeat"), std::string::npos);
}

TEST_F(ManagerTest, UnitsAreConservedOnRandomWorkloads) {
  std::mt19937_64 rng(2026);
  std::vector<size_t> sizes = {100, 350, 1000};
  for (size_t n : sizes) {
    int64_t pilot_cores = 2 + static_cast<int64_t>(rng() % 3);
    std::vector<PilotHandle> pilots = {ActivePilot(Pilot(pilot_cores)), ActivePilot(Pilot(pilot_cores))};
    std::vector<ComputeUnitDescription> units;
    for (size_t i = 0; i < n; ++i) {
      int64_t cores = 1 + static_cast<int64_t>(rng() % pilot_cores);
      switch (rng() % 4) {
        case 0:
          units.push_back(Cmd({"/bin/false"}, cores));
          break;
        case 1:
          units.push_back(Cmd({"/bin/sh", "-c", "exit 3"}, cores));
          break;
        default:
          units.push_back(Cmd({"/bin/true"}, cores));
      }
    }
    auto handles = Manager().SubmitUnits(pilots, units);
    bool cancel_one = rng() % 2 == 0;
    if (cancel_one) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      Manager().CancelPilot(pilots[1]);
    }
    auto states = Manager().WaitUnits(handles, 300);

    std::set<std::string> submitted;
    for (const auto &h : handles) submitted.insert(h.unit_id());
    ASSERT_EQ(submitted.size(), n);
    std::map<std::string, int> terminal_events;
    for (const auto &e : Manager().store()->Journal()) {
      if (!submitted.count(e.entity_id)) continue;
      auto s = ParseEnum<UnitState>(e.new_state);
      if (s && IsTerminal(*s)) ++terminal_events[e.entity_id];
    }
    size_t done = 0, failed = 0, canceled = 0;
    for (const auto &id : submitted) {
      EXPECT_EQ(terminal_events[id], 1) << id;
      switch (states.at(id)) {
        case UnitState::kDone: ++done; break;
        case UnitState::kFailed: ++failed; break;
        case UnitState::kCanceled: ++canceled; break;
        default: ADD_FAILURE() << id << " not terminal";
      }
    }
    EXPECT_EQ(done + failed + canceled, n);
    if (!cancel_one) {
      EXPECT_EQ(canceled, 0u);
    }
    for (auto &p : pilots) Manager().CancelPilot(p);
  }
}

TEST_F(ManagerTest, SimBatchPilotRunsUnits) {
  saga::SimBatchConfig cfg;
  cfg.node_count = 2;
  cfg.cores_per_node = 4;
  cfg.memory_mb_per_node = 8192;
  cfg.queue_wait_s = 0.3;
  cfg.scratch_dir = dir_ / "simbatch";
  Manager().AddAdaptor("simbatch", std::make_shared<saga::SimBatchAdaptor>(cfg));
  PilotDescription d = Pilot(8);
  d.resource_name = "simbatch";
  d.memory_mb_per_node = 8192;
  PilotHandle p = ActivePilot(d);
  std::vector<ComputeUnitDescription> units;
  for (int i = 0; i < 6; ++i) {
    units.push_back(Cmd({"/bin/sh", "-c", "echo $PILOTLET_NODE"}, 3));
  }
  auto handles = Manager().SubmitUnits(p, units);
  auto states = Manager().WaitUnits(handles, 60);
  std::set<std::string> nodes;
  for (const auto &h : handles) {
    EXPECT_EQ(states.at(h.unit_id()), UnitState::kDone);
    std::string out = h.stdout_tail();
    nodes.insert(out.substr(0, out.find('\n')));
  }
  EXPECT_EQ(nodes, (std::set<std::string>{"simnode-0", "simnode-1"}));
}

}  // namespace
}  // namespace pilotlet::pilotmgr
