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

#include <random>
#include <set>

#include "pilotlet/core/error.h"
#include "pilotlet/core/state_machine.h"
#include "pilotlet/core/validate.h"
#include "pilotlet/core/workload.h"

namespace pilotlet {
namespace {

PilotDescription WranglerNode() {
  PilotDescription d;
  d.cores = 48;
  d.memory_mb_per_node = 131072;
  d.runtime_s = 600;
  d.cluster_flavor = ClusterFlavor::kYarnLike;
  d.cluster_mode = ClusterMode::kSpawn;
  return d;
}

TEST(ValidatePilotDescription, WranglerSizedYarnSpawnIsValid) {
  PilotDescription d = WranglerNode();
  EXPECT_TRUE(CheckPilotDescription(d).empty());
  EXPECT_EQ(ValidatePilotDescription(d), d);
}

TEST(ValidatePilotDescription, ZeroCoresIsRejected) {
  PilotDescription d = WranglerNode();
  d.cores = 0;
  try {
    ValidatePilotDescription(d);
    FAIL() << "expected VALIDATION";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    ASSERT_EQ(e.details().size(), 1u);
    EXPECT_NE(e.details()[0].find("cores >= 1"), std::string::npos);
  }
}

TEST(ValidatePilotDescription, ConnectWithoutUrlIsRejected) {
  PilotDescription d = WranglerNode();
  d.cluster_mode = ClusterMode::kConnect;
  auto v = CheckPilotDescription(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("connect_url required"), std::string::npos);
}

TEST(ValidatePilotDescription, ReportsEveryViolation) {
  PilotDescription d;
  d.cores = 0;
  d.runtime_s = 0;
  d.memory_mb_per_node = -5;
  d.cluster_mode = ClusterMode::kConnect;
  d.cluster_flavor = ClusterFlavor::kNone;
  EXPECT_EQ(CheckPilotDescription(d).size(), 5u);
}

// Validation is total: arbitrary descriptions give a verdict, never a crash.
TEST(ValidatePilotDescription, TotalOverRandomDescriptions) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int64_t> small(-3, 3);
  for (int i = 0; i < 10000; ++i) {
    PilotDescription d;
    d.cores = small(rng);
    d.memory_mb_per_node = small(rng);
    d.runtime_s = small(rng);
    d.resource_name = (rng() % 4 == 0) ? "" : "local";
    d.sandbox_root = (rng() % 4 == 0) ? "" : "/tmp/x";
    d.cluster_flavor = AllValues<ClusterFlavor>()[rng() % 3];
    d.cluster_mode = AllValues<ClusterMode>()[rng() % 2];
    if (rng() % 2) d.connect_url = (rng() % 2) ? "" : "http://127.0.0.1:1";
    auto v = CheckPilotDescription(d);
    bool should_be_valid = d.cores >= 1 && d.memory_mb_per_node >= 1 && d.runtime_s >= 1 &&
                           !d.resource_name.empty() && !d.sandbox_root.empty() &&
                           (d.cluster_mode == ClusterMode::kSpawn ||
                            (d.connect_url && !d.connect_url->empty() &&
                             d.cluster_flavor != ClusterFlavor::kNone));
    EXPECT_EQ(v.empty(), should_be_valid);
  }
}

TEST(ValidateUnitDescription, StagingEscapesAreRejected) {
  ComputeUnitDescription d;
  d.executable = "/bin/true";
  d.input_staging.push_back({"/etc/hosts", "../hosts", StagingDirection::kIn});
  d.output_staging.push_back({"out.txt", "/abs", StagingDirection::kOut});
  EXPECT_EQ(CheckUnitDescription(d).size(), 2u);
  d.input_staging[0].target = "in/hosts";
  d.output_staging[0].target = "results/out.txt";
  EXPECT_TRUE(CheckUnitDescription(d).empty());
}

TEST(Transition, ListedLegalTransitionSucceeds) {
  EXPECT_EQ(Transition(UnitState::kPending, UnitState::kScheduled), UnitState::kScheduled);
  EXPECT_EQ(Transition(PilotState::kLaunching, PilotState::kActive), PilotState::kActive);
}

TEST(Transition, TerminalAbsorbs) {
  try {
    Transition(UnitState::kDone, UnitState::kExecuting);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kIllegalTransition);
    EXPECT_EQ(e.details(), (std::vector<std::string>{"DONE", "EXECUTING"}));
  }
}

TEST(Transition, AllocatingRequiresYarn) {
  EXPECT_THROW(Transition(UnitState::kScheduled, UnitState::kAllocating, LaunchMethod::kFork),
               Error);
  EXPECT_THROW(Transition(UnitState::kScheduled, UnitState::kAllocating, LaunchMethod::kSpark),
               Error);
  EXPECT_THROW(Transition(UnitState::kScheduled, UnitState::kAllocating), Error);
  EXPECT_EQ(Transition(UnitState::kScheduled, UnitState::kAllocating, LaunchMethod::kYarn),
            UnitState::kAllocating);
}

// The declared graph, written out edge by edge, independent of the switch in
// the implementation.
std::set<std::pair<UnitState, UnitState>> DeclaredUnitEdges(LaunchMethod m) {
  using S = UnitState;
  std::set<std::pair<S, S>> edges = {{S::kNew, S::kPending},
                                     {S::kPending, S::kScheduled},
                                     {S::kScheduled, S::kExecuting},
                                     {S::kAllocating, S::kExecuting},
                                     {S::kExecuting, S::kStagingOut},
                                     {S::kStagingOut, S::kDone}};
  if (m == LaunchMethod::kYarn) edges.insert({S::kScheduled, S::kAllocating});
  for (S s : AllValues<S>()) {
    if (IsTerminal(s)) continue;
    edges.insert({s, S::kFailed});
    edges.insert({s, S::kCanceled});
  }
  return edges;
}

TEST(Transition, UnitLegalityTableMatchesDeclaredGraph) {
  for (LaunchMethod m : AllValues<LaunchMethod>()) {
    auto edges = DeclaredUnitEdges(m);
    for (UnitState a : AllValues<UnitState>()) {
      for (UnitState b : AllValues<UnitState>()) {
        EXPECT_EQ(IsLegalTransition(a, b, m), edges.count({a, b}) == 1)
            << ToString(a) << "->" << ToString(b) << " via " << ToString(m);
      }
    }
  }
}

// Fuzz: random attempts never walk an edge outside the declared graph.
TEST(Transition, RandomWalksStayOnDeclaredGraph) {
  std::mt19937_64 rng(2016);
  auto units = AllValues<UnitState>();
  auto pilots = AllValues<PilotState>();
  for (int seq = 0; seq < 10000; ++seq) {
    LaunchMethod m = AllValues<LaunchMethod>()[rng() % 3];
    auto edges = DeclaredUnitEdges(m);
    UnitState u = UnitState::kNew;
    PilotState p = PilotState::kNew;
    for (int step = 0; step < 12; ++step) {
      UnitState next = units[rng() % units.size()];
      try {
        UnitState got = Transition(u, next, m);
        ASSERT_TRUE(edges.count({u, got})) << ToString(u) << "->" << ToString(got);
        u = got;
      } catch (const Error &e) {
        ASSERT_EQ(e.code(), ErrorCode::kIllegalTransition);
        ASSERT_FALSE(edges.count({u, next}));
      }
      PilotState pn = pilots[rng() % pilots.size()];
      PilotState before = p;
      try {
        p = Transition(p, pn);
        ASSERT_FALSE(IsTerminal(before));
      } catch (const Error &) {
        ASSERT_EQ(p, before);
      }
    }
  }
}

TEST(Workload, ParsesSnakeCaseDocument) {
  auto doc = nlohmann::json::parse(R"({
    "pilot": {"resource_name": "local", "cores": 4, "cluster_flavor": "YARN_LIKE"},
    "units": [{"executable": "/bin/echo", "arguments": ["ok"], "cores": 2,
               "input_staging": [{"source": "/etc/hosts", "target": "hosts", "direction": "IN"}]}]
  })");
  Workload w = ParseWorkload(doc);
  EXPECT_EQ(w.pilot.cores, 4);
  EXPECT_EQ(w.pilot.cluster_flavor, ClusterFlavor::kYarnLike);
  ASSERT_EQ(w.units.size(), 1u);
  EXPECT_EQ(w.units[0].arguments, std::vector<std::string>{"ok"});
  EXPECT_EQ(w.units[0].input_staging[0].target, "hosts");
  EXPECT_EQ(ParseWorkload(WorkloadToJson(w)).units[0], w.units[0]);
}

TEST(Workload, UnknownKeysAreValidationErrors) {
  auto doc = nlohmann::json::parse(R"({
    "pilot": {"cores": 4, "gpus": 2},
    "units": [{"executable": "/bin/true", "priority": 1}],
    "extra": true
  })");
  try {
    ParseWorkload(doc);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_EQ(e.details().size(), 3u);
  }
}

TEST(Timing, IntervalUsesMonotonicComponent) {
  std::vector<TimingRecord> t = {{"p", "agent_start", 1000000, 0},
                                 {"p", "first_unit_exec", 3500000, 0}};
  EXPECT_DOUBLE_EQ(*IntervalSeconds(t, "agent_start", "first_unit_exec"), 2.5);
  EXPECT_FALSE(IntervalSeconds(t, "agent_start", "missing"));
}

}  // namespace
}  // namespace pilotlet
