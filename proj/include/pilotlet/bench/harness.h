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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pilotlet/bench/kmeans.h"
#include "pilotlet/core/types.h"
#include "pilotlet/minicluster/rm_server.h"
#include "pilotlet/saga/job.h"

namespace pilotlet::bench {

inline constexpr std::string_view kKMeansCsvHeader =
    "scenario,n_points,k,n_tasks,flavor,mode,rep,boot_s,runtime_s,dist_computations";
inline constexpr std::string_view kStartupCsvHeader =
    "mode,rep,submit_to_agent_start_s,agent_start_to_cluster_ready_s,"
    "cluster_ready_to_first_exec_s,agent_start_to_first_exec_s,unit_latency_s";

/// The scaled scenario family: n x k = 5 x 10^5 for each entry.
std::vector<KMeansScenario> ScaledFamily();

struct BenchConfig {
  /// Datasets, stores and sandboxes go under here.
  std::filesystem::path work_dir;
  std::string resource = "local";
  /// Used for `resource` instead of the default adaptor.
  std::shared_ptr<saga::JobAdaptor> adaptor;
  int64_t pilot_cores = 4;
  int64_t pilot_memory_mb = 16384;
  ClusterFlavor flavor = ClusterFlavor::kNone;
  ClusterMode mode = ClusterMode::kSpawn;
  std::optional<std::string> connect_url;
  LaunchMethodHint hint = LaunchMethodHint::kAuto;
  double boot_delay_s = 0;
  double agent_poll_interval_s = 0.05;
  double agent_monitor_interval_s = 0.05;
  double timeout_s = 600;
};

/// "plain" without a cluster, otherwise "spawn" or "connect".
std::string ModeLabel(ClusterFlavor flavor, ClusterMode mode);

struct KMeansRow {
  std::string scenario;
  int64_t n_points = 0;
  int64_t k = 0;
  int64_t n_tasks = 0;
  std::string flavor;
  std::string mode;
  int rep = 0;
  double boot_s = 0;
  double runtime_s = 0;
  int64_t dist_computations = 0;
  /// Written as FAILED in the runtime column.
  bool failed = false;
};

std::string FormatKMeansRow(const KMeansRow &row);

struct KMeansRun {
  KMeansRow row;
  KMeansResult result;
  std::string error;
};

/// Generates the dataset, runs `s.iterations` rounds of n_tasks map units and
/// one reduce unit on a fresh pilot, and collects the final centroids and
/// assignments. Unit failures end the run with `row.failed` set.
KMeansRun RunKMeans(const KMeansScenario &s, const BenchConfig &config, int rep);

enum class StartupMode { kPlain, kSpawn, kConnect };
std::string ToString(StartupMode m);
StartupMode ParseStartupMode(const std::string &text);

struct StartupSample {
  StartupMode mode = StartupMode::kPlain;
  int rep = 0;
  double submit_to_agent_start_s = 0;
  double agent_start_to_cluster_ready_s = 0;
  double cluster_ready_to_first_exec_s = 0;
  double agent_start_to_first_exec_s = 0;
  /// cu_submit to cu_exec_start of each unit.
  std::vector<double> unit_latency_s;
};

std::string FormatStartupRow(const StartupSample &s);

/// Runs `reps` pilots per mode, each with `units` trivial units submitted
/// right after the pilot. Spawn and connect use a YARN-like cluster; connect
/// attaches to one started here for the duration of the call. `config.flavor`
/// and `config.mode` are ignored.
std::vector<StartupSample> RunStartupBenchmark(const std::vector<StartupMode> &modes, int reps,
                                               const BenchConfig &config, int units = 1);

/// A standalone mini-cluster of one node with `vcores` and `memory_mb`.
class LocalCluster {
 public:
  LocalCluster(const std::filesystem::path &dir, ClusterFlavor flavor, int64_t vcores,
               int64_t memory_mb);
  ~LocalCluster();
  const std::string &endpoint() const { return rm_.endpoint(); }

 private:
  minicluster::RmProcess rm_;
};

double Median(std::vector<double> values);

}  // namespace pilotlet::bench
