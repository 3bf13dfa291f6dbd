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
#include <signal.h>

#include <fstream>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/core/process.h"
#include "pilotlet/minicluster/config.h"
#include "pilotlet/minicluster/ledger.h"
#include "pilotlet/minicluster/rm_client.h"
#include "pilotlet/minicluster/rm_server.h"
#include "test_util.h"

namespace pilotlet::minicluster {
namespace {

namespace fs = std::filesystem;
using testing_util::TempDir;
using testing_util::WaitUntil;

ClusterConfig Cluster(ClusterFlavor flavor, std::vector<Resource> nodes) {
  ClusterConfig c;
  c.flavor = flavor;
  for (size_t i = 0; i < nodes.size(); ++i) {
    c.nodes.push_back({"n" + std::to_string(i), nodes[i].vcores, nodes[i].memory_mb});
  }
  return c;
}

AppSpec Task(Resource r, std::vector<std::string> command = {"true"}) {
  AppSpec s;
  s.name = "app";
  s.task.resource = r;
  s.task.command = std::move(command);
  return s;
}

// Plays node managers and application masters in-process: launches start at
// once, kills exit with 137, and an AM asks for its task as soon as it runs.
class FakeCluster {
 public:
  explicit FakeCluster(Ledger &ledger) : ledger_(ledger) {
    for (size_t i = 0; i < ledger.nodes().size(); ++i) ledger.RegisterNode(static_cast<int64_t>(i));
  }

  void Pump() {
    bool again = true;
    while (again) {
      again = false;
      for (size_t n = 0; n < ledger_.nodes().size(); ++n) {
        for (const auto &cmd : ledger_.TakeCommands(static_cast<int64_t>(n))) {
          again = true;
          if (cmd.op == NodeCommand::Op::kLaunch) {
            launches_.push_back(cmd.launch);
            running_.insert(cmd.container_id);
            ledger_.ContainerStarted(cmd.container_id);
            const Container &c = ledger_.GetContainer(cmd.container_id);
            if (c.role == ContainerRole::kAm && am_requests_task_) {
              ledger_.RequestTaskContainer(c.app_id);
            }
          } else if (cmd.op == NodeCommand::Op::kKill) {
            if (running_.erase(cmd.container_id)) ledger_.ContainerExited(cmd.container_id, 137);
          }
        }
      }
    }
  }

  void Exit(const std::string &container_id, int code) {
    ASSERT_TRUE(running_.erase(container_id)) << container_id;
    ledger_.ContainerExited(container_id, code);
    Pump();
  }

  std::optional<std::string> Worker(const std::string &app_id) const {
    for (const auto &cid : ledger_.GetApp(app_id).containers) {
      const Container &c = ledger_.GetContainer(cid);
      if (c.role != ContainerRole::kAm && c.has_process && running_.count(cid)) return cid;
    }
    return std::nullopt;
  }

  /// The task (or driver) exits with `code`; a YARN AM follows with 0.
  void Finish(const std::string &app_id, int code) {
    auto worker = Worker(app_id);
    ASSERT_TRUE(worker) << app_id;
    Exit(*worker, code);
    const App &app = ledger_.GetApp(app_id);
    if (app.am_container && running_.count(*app.am_container)) Exit(*app.am_container, 0);
  }

  bool Running(const std::string &container_id) const { return running_.count(container_id) > 0; }
  const std::vector<LaunchCommand> &launches() const { return launches_; }
  void set_am_requests_task(bool v) { am_requests_task_ = v; }

 private:
  Ledger &ledger_;
  std::set<std::string> running_;
  std::vector<LaunchCommand> launches_;
  bool am_requests_task_ = true;
};

struct LedgerHarness {
  explicit LedgerHarness(ClusterConfig config)
      : dir(TempDir("ledger")), ledger(std::move(config), dir, {"am"}, "http://rm"), cluster(ledger) {}

  fs::path dir;
  Ledger ledger;
  FakeCluster cluster;
};

// Independent accounting: what the live containers hold.
Resource HeldByContainers(const Ledger &ledger) {
  Resource held;
  for (const auto &id : ledger.AppIds()) {
    for (const auto &cid : ledger.GetApp(id).containers) {
      const Container &c = ledger.GetContainer(cid);
      if (c.state != ContainerState::kReleased) held += c.resource;
    }
  }
  return held;
}

std::vector<std::string> LogLines(const fs::path &path) { return SplitLines(ReadFile(path)); }

TEST(ClusterConfigTest, ThreeNodesWriteMasterSlavesAndConf) {
  auto dir = TempDir("conf");
  ClusterConfig c = Cluster(ClusterFlavor::kYarnLike, {{16, 32768}, {16, 32768}, {8, 16384}});
  c.rm_port = 8088;
  GenerateConfigs(c, dir);
  EXPECT_EQ(ReadFile(dir / "master"), "n0\n");
  EXPECT_EQ(ReadFile(dir / "slaves"), "n1\nn2\n");
  EXPECT_EQ(ReadFile(dir / "cluster.conf"),
            "# pilotlet mini-cluster configuration\n"
            "flavor=YARN_LIKE\n"
            "rm_port=8088\n"
            "node_count=3\n"
            "node.0.hostname=n0\nnode.0.vcores=16\nnode.0.memory_mb=32768\n"
            "node.1.hostname=n1\nnode.1.vcores=16\nnode.1.memory_mb=32768\n"
            "node.2.hostname=n2\nnode.2.vcores=8\nnode.2.memory_mb=16384\n");
  EXPECT_EQ(LoadConfigs(dir), c);
}

TEST(ClusterConfigTest, SingleNodeHasEmptySlaves) {
  auto dir = TempDir("conf");
  GenerateConfigs(Cluster(ClusterFlavor::kSparkLike, {{4, 4096}}), dir);
  EXPECT_EQ(ReadFile(dir / "master"), "n0\n");
  EXPECT_TRUE(fs::exists(dir / "slaves"));
  EXPECT_EQ(ReadFile(dir / "slaves"), "");
  EXPECT_EQ(LoadConfigs(dir).flavor, ClusterFlavor::kSparkLike);
}

TEST(ClusterConfigTest, UnwritableDirectoryIsIoFailed) {
  auto dir = TempDir("conf");
  WriteFile(dir / "file", "x");
  try {
    GenerateConfigs(Cluster(ClusterFlavor::kYarnLike, {{1, 1}}), dir / "file" / "sub");
    FAIL() << "expected IO_FAILED";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailed);
  }
}

TEST(ClusterConfigTest, NoNodesIsRejected) {
  try {
    GenerateConfigs(ClusterConfig{}, TempDir("conf"));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
}

TEST(ClusterConfigTest, ParserSkipsCommentsAndRejectsGarbage) {
  ClusterConfig c = ParseClusterConf(
      "# hi\n\nflavor=SPARK_LIKE\nrm_port=0\nnode_count=1\n# mid\nnode.0.hostname=h\n"
      "node.0.vcores=2\nnode.0.memory_mb=3\n");
  ASSERT_EQ(c.nodes.size(), 1u);
  EXPECT_EQ(c.nodes[0], (NodeSpec{"h", 2, 3}));
  for (const char *bad : {"flavor=YARN_LIKE\n", "flavor=X\nrm_port=0\nnode_count=0\n",
                          "flavor=YARN_LIKE\nrm_port=x\nnode_count=0\n", "junk\n"}) {
    try {
      ParseClusterConf(bad);
      FAIL() << bad;
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedInput) << bad;
    }
  }
}

TEST(LedgerTest, FreshClusterMetrics) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}, {16, 32768}}));
  Metrics m = h.ledger.GetMetrics();
  EXPECT_EQ(m.total, (Resource{32, 65536}));
  EXPECT_EQ(m.available, (Resource{32, 65536}));
  EXPECT_EQ(m.active_nodes, 2);
}

TEST(LedgerTest, AmPlusTaskMetrics) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}, {16, 32768}}));
  std::string id = h.ledger.SubmitApp(Task({4, 8192}, {"sleep", "9"}));
  h.cluster.Pump();
  Metrics m = h.ledger.GetMetrics();
  Resource oracle = Resource{32, 65536} - HeldByContainers(h.ledger);
  EXPECT_EQ(oracle, (Resource{27, 56832}));
  EXPECT_EQ(m.available, oracle);
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kRunning);
  EXPECT_EQ(h.ledger.GetApp(id).containers.size(), 2u);
}

TEST(LedgerTest, TwoPhaseLifecycleAndLog) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  h.cluster.set_am_requests_task(false);
  std::string id = h.ledger.SubmitApp(Task({4, 8192}, {"echo", "ok"}));
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kAmAllocated);
  h.cluster.Pump();
  // The task share is held back while the AM runs.
  EXPECT_EQ(h.ledger.GetMetrics().reserved, (Resource{4, 8192}));
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kAmAllocated);
  ASSERT_EQ(h.cluster.launches().size(), 1u);
  const auto &am = h.cluster.launches()[0];
  EXPECT_EQ(am.argv, (std::vector<std::string>{"am", "--rm", "http://rm", "--app-id", id}));
  EXPECT_EQ(am.env.at("APPLICATION_ID"), id);

  Container task = h.ledger.RequestTaskContainer(id);
  EXPECT_EQ(task.role, ContainerRole::kTask);
  EXPECT_EQ(h.ledger.RequestTaskContainer(id).id, task.id);
  h.cluster.Pump();
  EXPECT_EQ(h.ledger.GetMetrics().reserved, (Resource{0, 0}));
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kRunning);
  EXPECT_EQ(h.cluster.launches()[1].argv, (std::vector<std::string>{"echo", "ok"}));

  h.cluster.Finish(id, 0);
  const App &app = h.ledger.GetApp(id);
  EXPECT_EQ(app.state, AppState::kFinished);
  EXPECT_EQ(app.exit_code, 0);
  EXPECT_EQ(h.ledger.LiveContainers(), 0);
  auto lines = LogLines(app.log_path);
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines.back(), "EXIT 0");
}

TEST(LedgerTest, TaskExitCodeDecidesFailure) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  std::string id = h.ledger.SubmitApp(Task({2, 1024}));
  h.cluster.Pump();
  h.cluster.Finish(id, 3);
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kFailed);
  EXPECT_EQ(LogLines(h.ledger.GetApp(id).log_path).back(), "EXIT 3");
}

TEST(LedgerTest, FifoSecondAppWaitsForFirst) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  std::string a = h.ledger.SubmitApp(Task({10, 1024}));
  std::string b = h.ledger.SubmitApp(Task({10, 1024}));
  h.cluster.Pump();
  EXPECT_EQ(h.ledger.GetApp(a).state, AppState::kRunning);
  EXPECT_EQ(h.ledger.GetApp(b).state, AppState::kSubmitted);
  EXPECT_EQ(h.ledger.GetMetrics().apps_pending, 1);
  EXPECT_EQ(h.ledger.GetMetrics().pending, (Resource{11, 1536}));
  h.cluster.Finish(a, 0);
  EXPECT_EQ(h.ledger.GetApp(b).state, AppState::kRunning);

  uint64_t last_release_a = 0;
  uint64_t first_alloc_b = 0;
  for (const auto &e : h.ledger.JournalSince(0)) {
    if (e.kind == "RELEASE" && e.app_id == a) last_release_a = e.version;
    if (e.kind == "ALLOCATE" && e.app_id == b && first_alloc_b == 0) first_alloc_b = e.version;
  }
  EXPECT_GT(first_alloc_b, last_release_a);
}

TEST(LedgerTest, ImpossibleRequests) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}, {16, 32768}}));
  for (Resource r : {Resource{64, 1024}, Resource{4, 65536}}) {
    try {
      h.ledger.SubmitApp(Task(r));
      FAIL();
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kImpossibleRequest);
    }
  }
  // A full-node task still fits with its AM on the other node.
  std::string id = h.ledger.SubmitApp(Task({16, 32768}));
  h.cluster.Pump();
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kRunning);

  LedgerHarness single(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  try {
    single.ledger.SubmitApp(Task({16, 1024}));
    FAIL() << "AM and task cannot share one 16-core node";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kImpossibleRequest);
  }
}

TEST(LedgerTest, InvalidSpecs) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  try {
    h.ledger.SubmitApp(Task({0, 0}, {}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_EQ(e.details().size(), 3u);
  }
}

TEST(LedgerTest, KillSemantics) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  std::string running = h.ledger.SubmitApp(Task({8, 1024}, {"sleep", "100"}));
  std::string queued = h.ledger.SubmitApp(Task({8, 1024}));
  h.cluster.Pump();
  EXPECT_EQ(h.ledger.GetApp(queued).state, AppState::kSubmitted);

  EXPECT_EQ(h.ledger.KillApp(queued), AppState::kKilled);
  EXPECT_EQ(h.ledger.KillApp(running), AppState::kRunning);
  h.cluster.Pump();
  EXPECT_EQ(h.ledger.GetApp(running).state, AppState::kKilled);
  EXPECT_EQ(h.ledger.GetApp(running).exit_code, 137);
  EXPECT_EQ(h.ledger.GetMetrics().available, (Resource{16, 32768}));
  EXPECT_EQ(h.ledger.LiveContainers(), 0);

  std::string done = h.ledger.SubmitApp(Task({1, 1}));
  h.cluster.Pump();
  h.cluster.Finish(done, 0);
  EXPECT_EQ(h.ledger.KillApp(done), AppState::kFinished);

  try {
    h.ledger.KillApp("application_0_9999");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownApp);
  }
}

TEST(LedgerTest, KillBeforeAmStartsDropsItsLaunch) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  std::string id = h.ledger.SubmitApp(Task({4, 1024}));
  EXPECT_EQ(h.ledger.KillApp(id), AppState::kKilled);
  h.cluster.Pump();
  EXPECT_TRUE(h.cluster.launches().empty());
  EXPECT_EQ(h.ledger.GetMetrics().reserved, (Resource{0, 0}));
}

TEST(LedgerTest, AmCrashFailsTheApp) {
  LedgerHarness h(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}}));
  h.cluster.set_am_requests_task(false);
  std::string id = h.ledger.SubmitApp(Task({4, 1024}));
  h.cluster.Pump();
  h.cluster.Exit(*h.ledger.GetApp(id).am_container, 0);
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kFailed);
  EXPECT_EQ(h.ledger.GetMetrics().reserved, (Resource{0, 0}));
  EXPECT_EQ(h.ledger.GetMetrics().available, (Resource{16, 32768}));
}

// Spreads `cores` one at a time over workers with spare cores, in index order.
std::vector<int64_t> RoundRobinOracle(std::vector<int64_t> free, int64_t cores) {
  std::vector<int64_t> bound(free.size(), 0);
  size_t i = 0;
  while (cores > 0) {
    if (bound[i] < free[i]) {
      ++bound[i];
      --cores;
    }
    i = (i + 1) % free.size();
  }
  return bound;
}

std::map<int64_t, int64_t> Bindings(const Ledger &ledger, const std::string &app_id) {
  std::map<int64_t, int64_t> out;
  for (const auto &cid : ledger.GetApp(app_id).containers) {
    const Container &c = ledger.GetContainer(cid);
    out[c.node] += c.resource.vcores;
  }
  return out;
}

TEST(SparkLedgerTest, SixCoresOverTwoWorkersSplitEvenly) {
  LedgerHarness h(Cluster(ClusterFlavor::kSparkLike, {{4, 4096}, {4, 4096}}));
  std::string id = h.ledger.SubmitApp(Task({6, 0}));
  auto oracle = RoundRobinOracle({4, 4}, 6);
  EXPECT_EQ(oracle, (std::vector<int64_t>{3, 3}));
  EXPECT_EQ(Bindings(h.ledger, id), (std::map<int64_t, int64_t>{{0, 3}, {1, 3}}));
  h.cluster.Pump();
  ASSERT_EQ(h.cluster.launches().size(), 1u);
  EXPECT_EQ(h.cluster.launches()[0].env.at("PILOTLET_SPARK_BINDINGS"), "0:3,1:3");
  EXPECT_EQ(h.ledger.GetApp(id).state, AppState::kRunning);
}

TEST(SparkLedgerTest, RoundRobinMatchesOracleOnUnevenWorkers) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Resource> nodes;
    int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) nodes.push_back({1 + static_cast<int64_t>(rng() % 8), 1024});
    LedgerHarness h(Cluster(ClusterFlavor::kSparkLike, nodes));
    // Occupy a random prefix so free cores are uneven.
    int64_t total = 0;
    for (const auto &r : nodes) total += r.vcores;
    int64_t first = 1 + static_cast<int64_t>(rng() % total);
    h.ledger.SubmitApp(Task({first, 0}, {"sleep", "1"}));
    std::vector<int64_t> free;
    for (const auto &node : h.ledger.nodes()) free.push_back(node.Free().vcores);
    int64_t left = total - first;
    if (left == 0) continue;
    int64_t cores = 1 + static_cast<int64_t>(rng() % left);
    std::string id = h.ledger.SubmitApp(Task({cores, 0}));
    auto oracle = RoundRobinOracle(free, cores);
    std::map<int64_t, int64_t> expect;
    for (size_t i = 0; i < oracle.size(); ++i) {
      if (oracle[i] > 0) expect[static_cast<int64_t>(i)] = oracle[i];
    }
    EXPECT_EQ(Bindings(h.ledger, id), expect) << "trial " << trial;
  }
}

TEST(SparkLedgerTest, WholeClusterAppMakesTheNextQueue) {
  LedgerHarness h(Cluster(ClusterFlavor::kSparkLike, {{4, 4096}, {4, 4096}}));
  std::string a = h.ledger.SubmitApp(Task({8, 0}));
  std::string b = h.ledger.SubmitApp(Task({1, 0}));
  h.cluster.Pump();
  EXPECT_EQ(h.ledger.GetMetrics().available.vcores, 0);
  EXPECT_EQ(h.ledger.GetApp(b).state, AppState::kSubmitted);
  h.cluster.Finish(a, 0);
  EXPECT_EQ(h.ledger.GetApp(a).state, AppState::kFinished);
  EXPECT_EQ(h.ledger.GetApp(b).state, AppState::kRunning);
}

TEST(SparkLedgerTest, NonZeroExitFailsAndFreesCores) {
  LedgerHarness h(Cluster(ClusterFlavor::kSparkLike, {{4, 4096}, {4, 4096}}));
  std::string a = h.ledger.SubmitApp(Task({5, 0}));
  h.cluster.Pump();
  h.cluster.Finish(a, 2);
  EXPECT_EQ(h.ledger.GetApp(a).state, AppState::kFailed);
  EXPECT_EQ(h.ledger.GetMetrics().available.vcores, 8);
  EXPECT_EQ(h.ledger.LiveContainers(), 0);
  try {
    h.ledger.SubmitApp(Task({9, 0}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kImpossibleRequest);
  }
}

// Whether an AM and a task can ever be co-placed on empty nodes.
bool PairEverFits(const std::vector<Resource> &nodes, Resource am, Resource task) {
  for (size_t a = 0; a < nodes.size(); ++a) {
    for (size_t t = 0; t < nodes.size(); ++t) {
      Resource need_t = task;
      if (a == t) need_t += am;
      if (nodes[a].Fits(am) && nodes[t].Fits(need_t)) return true;
    }
  }
  return false;
}

// Replays the journal and checks each version against capacity and against
// the ledger's own running total.
void CheckJournal(const Ledger &ledger) {
  const auto &nodes = ledger.nodes();
  std::vector<Resource> alloc(nodes.size());
  std::map<std::string, Resource> live;
  Resource total_alloc;
  std::map<std::string, uint64_t> am_alloc, task_alloc, started, released;
  std::vector<std::string> admission;
  uint64_t expect_version = 0;
  for (const auto &e : ledger.JournalSince(0)) {
    ASSERT_EQ(e.version, ++expect_version);
    if (e.kind == "ALLOCATE") {
      alloc[e.node] += e.resource;
      total_alloc += e.resource;
      live[e.container_id] = e.resource;
      if (e.role == "AM" || (e.role == "EXECUTOR" && !am_alloc.count(e.app_id))) {
        am_alloc[e.app_id] = e.version;
        admission.push_back(e.app_id);
      }
      if (e.role == "TASK") task_alloc[e.app_id] = e.version;
    } else if (e.kind == "RELEASE") {
      ASSERT_TRUE(live.count(e.container_id));
      alloc[e.node] -= e.resource;
      total_alloc -= e.resource;
      live.erase(e.container_id);
      released[e.container_id] = e.version;
    } else if (e.kind == "START") {
      started[e.container_id] = e.version;
    }
    EXPECT_EQ(e.allocated_after, total_alloc) << "version " << e.version;
    for (size_t i = 0; i < nodes.size(); ++i) {
      EXPECT_TRUE(nodes[i].capacity.Fits(alloc[i])) << "node " << i << " version " << e.version;
    }
  }
  for (const auto &[app, v] : task_alloc) EXPECT_LT(am_alloc.at(app), v) << app;
  for (const auto &[cid, v] : started) {
    if (released.count(cid)) {
      EXPECT_LT(v, released[cid]) << cid;
    }
  }
  auto order = ledger.AppIds();
  std::map<std::string, size_t> position;
  for (size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
  for (size_t i = 1; i < admission.size(); ++i) {
    EXPECT_LT(position[admission[i - 1]], position[admission[i]]) << "admission overtook";
  }
}

class LedgerStormTest : public ::testing::TestWithParam<ClusterFlavor> {};

TEST_P(LedgerStormTest, SoundUnderRandomWorkload) {
  std::mt19937_64 rng(2026);
  for (int round = 0; round < 20; ++round) {
    std::vector<Resource> caps;
    int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      caps.push_back({2 + static_cast<int64_t>(rng() % 15), 1024 * (1 + static_cast<int64_t>(rng() % 16))});
    }
    LedgerHarness h(Cluster(GetParam(), caps));
    bool spark = GetParam() == ClusterFlavor::kSparkLike;
    int64_t total_cores = 0;
    for (const auto &c : caps) total_cores += c.vcores;
    std::vector<std::string> apps;
    for (int step = 0; step < 150; ++step) {
      int op = static_cast<int>(rng() % 10);
      if (op < 5) {
        Resource r{1 + static_cast<int64_t>(rng() % 12), spark ? 0 : 256 * (1 + static_cast<int64_t>(rng() % 40))};
        bool ok = spark ? r.vcores <= total_cores : PairEverFits(caps, {1, 512}, r);
        try {
          apps.push_back(h.ledger.SubmitApp(Task(r)));
          EXPECT_TRUE(ok);
        } catch (const Error &e) {
          EXPECT_EQ(e.code(), ErrorCode::kImpossibleRequest);
          EXPECT_FALSE(ok);
        }
      } else if (op < 8 && !apps.empty()) {
        const std::string &id = apps[rng() % apps.size()];
        if (h.cluster.Worker(id)) h.cluster.Finish(id, static_cast<int>(rng() % 3));
      } else if (!apps.empty()) {
        h.ledger.KillApp(apps[rng() % apps.size()]);
      }
      h.cluster.Pump();
      Metrics m = h.ledger.GetMetrics();
      EXPECT_EQ(m.available, m.total - HeldByContainers(h.ledger));
      for (const auto &node : h.ledger.nodes()) {
        EXPECT_TRUE(node.capacity.Fits(node.allocated + node.reserved));
      }
    }
    // Drain.
    for (int guard = 0; guard < 1000; ++guard) {
      bool any = false;
      for (const auto &id : apps) {
        if (h.cluster.Worker(id)) {
          h.cluster.Finish(id, 0);
          any = true;
        }
      }
      if (!any) break;
    }
    for (const auto &id : apps) EXPECT_TRUE(IsTerminal(h.ledger.GetApp(id).state)) << id;
    EXPECT_EQ(h.ledger.LiveContainers(), 0);
    EXPECT_EQ(h.ledger.GetMetrics().available, h.ledger.GetMetrics().total);
    CheckJournal(h.ledger);
    for (const auto &id : apps) {
      const App &app = h.ledger.GetApp(id);
      int am = 0, task = 0;
      for (const auto &cid : app.containers) {
        const Container &c = h.ledger.GetContainer(cid);
        EXPECT_EQ(c.state, ContainerState::kReleased);
        am += c.role == ContainerRole::kAm;
        task += c.role == ContainerRole::kTask;
      }
      if (!spark && app.state != AppState::kKilled) {
        EXPECT_EQ(am, 1) << id;
        EXPECT_EQ(task, 1) << id;
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Flavors, LedgerStormTest,
                         ::testing::Values(ClusterFlavor::kYarnLike, ClusterFlavor::kSparkLike),
                         [](const auto &info) {
                           return info.param == ClusterFlavor::kYarnLike ? "Yarn" : "Spark";
                         });

TEST(LedgerJsonTest, RoundTrips) {
  Metrics m;
  m.total = {32, 65536};
  m.allocated = {5, 8704};
  m.available = {27, 56832};
  m.apps_running = 1;
  m.version = 9;
  Metrics back = MetricsFromJson(MetricsToJson(m));
  EXPECT_EQ(back.total, m.total);
  EXPECT_EQ(back.available, m.available);
  EXPECT_EQ(back.version, 9u);
  EXPECT_EQ(MetricsToJson(m)["clusterMetrics"]["totalVirtualCores"], 32);

  NodeCommand cmd;
  cmd.op = NodeCommand::Op::kLaunch;
  cmd.launch.container_id = cmd.container_id = "c1";
  cmd.launch.argv = {"a", "b"};
  cmd.launch.env = {{"K", "V"}};
  NodeCommand cmd2 = nlohmann::json(cmd).get<NodeCommand>();
  EXPECT_EQ(cmd2.launch.argv, cmd.launch.argv);
  EXPECT_EQ(cmd2.container_id, "c1");

  AppSpec spec = Task({3, 100}, {"x"});
  AppSpec spec2 = nlohmann::json(spec).get<AppSpec>();
  EXPECT_EQ(spec2.task.resource, spec.task.resource);
  EXPECT_EQ(spec2.task.command, spec.task.command);
}

// --- Live resource manager ---

class LiveCluster {
 public:
  LiveCluster(ClusterFlavor flavor, std::vector<Resource> nodes, std::optional<int> port = std::nullopt)
      : dir_(TempDir("rm")) {
    GenerateConfigs(Cluster(flavor, std::move(nodes)), dir_ / "conf");
    RmProcess::Options o;
    o.conf_dir = dir_ / "conf";
    o.scratch_dir = dir_ / "scratch";
    o.port = port;
    o.die_with_parent = true;
    o.log_path = dir_ / "rm.log";
    rm_ = RmProcess::Start(o);
    client_ = std::make_unique<RmClient>(rm_.endpoint());
  }
  ~LiveCluster() { rm_.Stop(); }

  RmClient &client() { return *client_; }
  RmProcess &rm() { return rm_; }
  const fs::path &dir() const { return dir_; }

  AppReport WaitTerminal(const std::string &id, double timeout_s = 20) {
    AppReport r;
    WaitUntil(
        [&] {
          r = client_->GetApp(id);
          return IsTerminal(r.state);
        },
        timeout_s, 0.05);
    return r;
  }

 private:
  fs::path dir_;
  RmProcess rm_;
  std::unique_ptr<RmClient> client_;
};

TEST(ResourceManagerTest, StartReportsSummedCapacity) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{16, 32768}, {16, 32768}});
  Health h = c.client().GetHealth();
  EXPECT_TRUE(h.ready);
  EXPECT_EQ(h.node_count, 2);
  Metrics m = c.client().GetMetrics();
  EXPECT_EQ(m.total, (Resource{32, 65536}));
  EXPECT_EQ(m.available, (Resource{32, 65536}));
  EXPECT_EQ(m.active_nodes, 2);
}

TEST(ResourceManagerTest, ListAppsReturnsSubmittedApps) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{4, 8192}});
  std::string a = c.client().SubmitApp(Task({1, 256}));
  std::string b = c.client().SubmitApp(Task({1, 256}));
  auto apps = c.client().ListApps();
  ASSERT_EQ(apps.size(), 2u);
  EXPECT_EQ(apps[0].id, a);
  EXPECT_EQ(apps[1].id, b);
  c.WaitTerminal(b);
}

TEST(ResourceManagerTest, AppRunsWithTwoContainersThenFinishes) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{16, 32768}});
  auto marker = c.dir() / "go";
  std::string id = c.client().SubmitApp(
      Task({4, 8192}, {"sh", "-c", "while [ ! -f " + marker.string() + " ]; do sleep 0.02; done; echo done"}));
  AppReport r;
  ASSERT_TRUE(WaitUntil(
      [&] {
        r = c.client().GetApp(id);
        return r.state == AppState::kRunning;
      },
      10));
  EXPECT_EQ(r.containers.size(), 2u);
  EXPECT_EQ(c.client().GetMetrics().available, (Resource{11, 32768 - 8704}));
  WriteFile(marker, "");
  r = c.WaitTerminal(id);
  EXPECT_EQ(r.state, AppState::kFinished);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(LogLines(r.log_path).back(), "EXIT 0");
  EXPECT_EQ(ReadFile(fs::path(r.log_path).parent_path() / "task.stdout"), "done\n");
  EXPECT_EQ(c.client().GetMetrics().available, (Resource{16, 32768}));
}

TEST(ResourceManagerTest, ExitCodeReachesTheAppLog) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{8, 8192}});
  std::string id = c.client().SubmitApp(Task({1, 512}, {"sh", "-c", "exit 3"}));
  AppReport r = c.WaitTerminal(id);
  EXPECT_EQ(r.state, AppState::kFailed);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(LogLines(r.log_path).back(), "EXIT 3");
}

TEST(ResourceManagerTest, ErrorsCarryCodes) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{16, 32768}});
  try {
    c.client().SubmitApp(Task({64, 1024}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kImpossibleRequest);
  }
  try {
    c.client().KillApp("application_1_0001");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownApp);
  }
}

TEST(ResourceManagerTest, KillRunningAppRestoresCapacity) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{16, 32768}});
  std::string id = c.client().SubmitApp(Task({4, 1024}, {"sleep", "100"}));
  ASSERT_TRUE(WaitUntil([&] { return c.client().GetApp(id).state == AppState::kRunning; }, 10));
  EXPECT_EQ(c.client().KillApp(id), AppState::kKilled);
  EXPECT_EQ(c.client().GetMetrics().available, (Resource{16, 32768}));
  EXPECT_EQ(c.client().GetMetrics().containers_allocated, 0);
  EXPECT_EQ(c.client().KillApp(id), AppState::kKilled);
}

TEST(ResourceManagerTest, FifoOnTheWire) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{16, 32768}});
  auto marker = c.dir() / "release";
  std::vector<std::string> cmd = {"sh", "-c",
                                  "while [ ! -f " + marker.string() + " ]; do sleep 0.02; done"};
  std::string a = c.client().SubmitApp(Task({10, 1024}, cmd));
  std::string b = c.client().SubmitApp(Task({10, 1024}, cmd));
  ASSERT_TRUE(WaitUntil([&] { return c.client().GetApp(a).state == AppState::kRunning; }, 10));
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  EXPECT_EQ(c.client().GetApp(b).state, AppState::kSubmitted);
  WriteFile(marker, "");
  EXPECT_EQ(c.WaitTerminal(a).state, AppState::kFinished);
  EXPECT_EQ(c.WaitTerminal(b).state, AppState::kFinished);
  uint64_t last_a = 0, first_b = 0;
  for (const auto &e : c.client().Journal()) {
    if (e.kind == "RELEASE" && e.app_id == a) last_a = e.version;
    if (e.kind == "ALLOCATE" && e.app_id == b && !first_b) first_b = e.version;
  }
  EXPECT_GT(first_b, last_a);
}

TEST(ResourceManagerTest, MetricsSnapshotsMatchTheJournal) {
  LiveCluster c(ClusterFlavor::kYarnLike, {{4, 8192}, {4, 8192}});
  std::atomic<bool> stop{false};
  std::thread storm([&] {
    RmClient client(c.rm().endpoint());
    for (int i = 0; i < 12 && !stop; ++i) {
      client.SubmitApp(Task({1 + i % 3, 512}, {"sh", "-c", "sleep 0.0" + std::to_string(i % 5)}));
    }
  });
  std::vector<Metrics> snapshots;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  while (std::chrono::steady_clock::now() < deadline) {
    Metrics m = c.client().GetMetrics();
    snapshots.push_back(m);
    if (m.apps_submitted == 12 && m.apps_completed + m.apps_failed == 12) break;
  }
  stop = true;
  storm.join();
  auto journal = c.client().Journal();
  std::map<uint64_t, Resource> at;
  for (const auto &e : journal) at[e.version] = e.allocated_after;
  ASSERT_GT(snapshots.size(), 5u);
  EXPECT_EQ(snapshots.back().apps_completed, 12);
  for (const auto &m : snapshots) {
    EXPECT_EQ(m.available, m.total - m.allocated);
    ASSERT_TRUE(at.count(m.version)) << m.version;
    EXPECT_EQ(m.allocated, at[m.version]) << "version " << m.version;
  }
}

TEST(ResourceManagerTest, StopTerminatesLiveContainersAndRemovesScratch) {
  auto dir = TempDir("rmstop");
  GenerateConfigs(Cluster(ClusterFlavor::kYarnLike, {{16, 32768}, {16, 32768}}), dir / "conf");
  RmProcess::Options o;
  o.conf_dir = dir / "conf";
  o.scratch_dir = dir / "scratch";
  o.die_with_parent = true;
  RmProcess rm = RmProcess::Start(o);
  RmClient client(rm.endpoint());
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    auto pidfile = dir / ("pid" + std::to_string(i));
    ids.push_back(client.SubmitApp(
        Task({2, 1024}, {"sh", "-c", "echo $$ > " + pidfile.string() + "; exec sleep 100"})));
  }
  std::vector<pid_t> pids;
  ASSERT_TRUE(WaitUntil(
      [&] {
        for (int i = 0; i < 3; ++i) {
          if (!fs::exists(dir / ("pid" + std::to_string(i)))) return false;
          if (Trim(ReadFile(dir / ("pid" + std::to_string(i)))).empty()) return false;
        }
        return true;
      },
      10));
  for (int i = 0; i < 3; ++i) pids.push_back(std::stoi(ReadFile(dir / ("pid" + std::to_string(i)))));
  EXPECT_EQ(client.GetMetrics().containers_allocated, 6);
  auto start = std::chrono::steady_clock::now();
  EXPECT_TRUE(StopCluster(rm.endpoint(), 10));
  for (pid_t p : pids) {
    EXPECT_TRUE(WaitUntil([&] { return !ProcessAlive(p); }, 5)) << p;
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
  EXPECT_FALSE(fs::exists(dir / "scratch" / "apps"));
  rm.Stop();
  EXPECT_FALSE(ProcessAlive(rm.pid()));
}

TEST(ResourceManagerTest, StoppingADeadEndpointIsANoop) {
  EXPECT_TRUE(StopCluster("http://127.0.0.1:1", 1));
  EXPECT_FALSE(ProbeReady("http://127.0.0.1:1"));
}

TEST(ResourceManagerTest, SecondInstanceOnSamePortBindsNext) {
  LiveCluster first(ClusterFlavor::kYarnLike, {{2, 2048}});
  int port = std::stoi(first.rm().endpoint().substr(first.rm().endpoint().rfind(':') + 1));
  LiveCluster second(ClusterFlavor::kYarnLike, {{2, 2048}}, port);
  int port2 = std::stoi(second.rm().endpoint().substr(second.rm().endpoint().rfind(':') + 1));
  EXPECT_GT(port2, port);
  EXPECT_LE(port2, port + 10);
  EXPECT_TRUE(second.client().GetHealth().ready);
}

TEST(ResourceManagerTest, SignalStopsTheCluster) {
  auto dir = TempDir("rmsig");
  GenerateConfigs(Cluster(ClusterFlavor::kYarnLike, {{2, 2048}}), dir / "conf");
  RmProcess::Options o;
  o.conf_dir = dir / "conf";
  o.scratch_dir = dir / "scratch";
  o.die_with_parent = true;
  RmProcess rm = RmProcess::Start(o);
  kill(rm.pid(), SIGTERM);
  EXPECT_TRUE(WaitUntil([&] { return !ProbeReady(rm.endpoint(), 0.2); }, 10));
  EXPECT_TRUE(WaitUntil([&] { return !fs::exists(dir / "scratch"); }, 10));
  rm.Stop(1);
}

TEST(SparkMasterTest, BindingsReachTheDriver) {
  LiveCluster c(ClusterFlavor::kSparkLike, {{4, 4096}, {4, 4096}});
  auto out = c.dir() / "bindings";
  AppSpec spec = Task({6, 0}, {"sh", "-c", "echo $PILOTLET_SPARK_BINDINGS > " + out.string()});
  std::string id = c.client().SparkSubmit(spec);
  EXPECT_EQ(id.rfind("app-", 0), 0u);
  AppReport r;
  ASSERT_TRUE(WaitUntil(
      [&] {
        r = c.client().SparkAppStatus(id);
        return IsTerminal(r.state);
      },
      10));
  EXPECT_EQ(r.state, AppState::kFinished);
  EXPECT_EQ(ReadFile(out), "0:3,1:3\n");
  auto status = c.client().SparkStatus();
  EXPECT_EQ(status["cores"], 8);
  EXPECT_EQ(status["coresused"], 0);
  EXPECT_EQ(status["workers"].size(), 2u);
  EXPECT_EQ(status["completedapps"].size(), 1u);
}

TEST(SparkMasterTest, KillAndFailure) {
  LiveCluster c(ClusterFlavor::kSparkLike, {{4, 4096}});
  std::string slow = c.client().SparkSubmit(Task({4, 0}, {"sleep", "100"}));
  ASSERT_TRUE(WaitUntil([&] { return c.client().SparkAppStatus(slow).state == AppState::kRunning; }, 10));
  EXPECT_EQ(c.client().SparkKill(slow), AppState::kKilled);
  std::string bad = c.client().SparkSubmit(Task({2, 0}, {"sh", "-c", "exit 5"}));
  AppReport r = c.WaitTerminal(bad);
  EXPECT_EQ(r.state, AppState::kFailed);
  EXPECT_EQ(r.exit_code, 5);
  EXPECT_EQ(c.client().SparkStatus()["coresused"], 0);
}

}  // namespace
}  // namespace pilotlet::minicluster
