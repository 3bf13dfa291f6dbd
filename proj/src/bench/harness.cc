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

#include "pilotlet/bench/harness.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/core/process.h"
#include "pilotlet/minicluster/config.h"
#include "pilotlet/pilotmgr/pilot_manager.h"

namespace pilotlet::bench {

namespace fs = std::filesystem;

namespace {

std::string Seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double Since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

pilotmgr::ManagerOptions ManagerFor(const BenchConfig &c, const fs::path &dir) {
  pilotmgr::ManagerOptions o;
  o.store_location = (dir / "store").string();
  o.boot_delay_s = c.boot_delay_s;
  o.agent_poll_interval_s = c.agent_poll_interval_s;
  o.agent_monitor_interval_s = c.agent_monitor_interval_s;
  o.agent_heartbeat_interval_s = 1;
  o.watch_interval_s = 0.05;
  return o;
}

PilotDescription PilotFor(const BenchConfig &c, const fs::path &dir) {
  PilotDescription d;
  d.resource_name = c.resource;
  d.cores = c.pilot_cores;
  d.memory_mb_per_node = c.pilot_memory_mb;
  d.runtime_s = static_cast<int64_t>(c.timeout_s) + 60;
  d.cluster_flavor = c.flavor;
  d.cluster_mode = c.mode;
  d.connect_url = c.connect_url;
  d.sandbox_root = (dir / "sandbox").string();
  return d;
}

void RequireActive(pilotmgr::PilotManager &mgr, const pilotmgr::PilotHandle &p, double timeout_s) {
  PilotState s = mgr.WaitPilot(p, timeout_s);
  if (s != PilotState::kActive) {
    throw Error(ErrorCode::kBootFailed, "pilot " + p.pilot_id() + " is " +
                                            std::string(ToString(s)) + ": " +
                                            p.record().error.value_or("not active in time"));
  }
}

void RequireDone(const std::vector<pilotmgr::UnitHandle> &units,
                 const std::map<std::string, UnitState> &states) {
  for (const auto &u : units) {
    UnitState s = states.at(u.unit_id());
    if (s != UnitState::kDone) {
      auto rec = u.record();
      throw Error(ErrorCode::kSubmitFailed,
                  "unit " + u.unit_id() + " ended " + std::string(ToString(s)) + ": " +
                      rec.error.value_or("") + " " + rec.stderr_tail);
    }
  }
}

fs::path SandboxOf(const store::UnitRecord &rec) {
  if (!rec.sandbox_path) {
    throw Error(ErrorCode::kStagingFailed, "unit " + rec.unit_id + " has no sandbox");
  }
  return *rec.sandbox_path;
}

int64_t ReportedDistances(const std::string &stdout_text) {
  static const std::string kKey = "distance_computations ";
  for (const auto &line : SplitLines(stdout_text)) {
    if (line.rfind(kKey, 0) == 0) return std::stoll(line.substr(kKey.size()));
  }
  throw Error(ErrorCode::kMalformedInput, "map unit did not report distance computations");
}

}  // namespace

std::vector<KMeansScenario> ScaledFamily() {
  std::vector<KMeansScenario> out;
  for (auto [n, k] : {std::pair<int64_t, int64_t>{10000, 50}, {1000, 500}, {100, 5000}}) {
    KMeansScenario s;
    s.n_points = n;
    s.k_clusters = k;
    out.push_back(s);
  }
  return out;
}

std::string ModeLabel(ClusterFlavor flavor, ClusterMode mode) {
  if (flavor == ClusterFlavor::kNone) return "plain";
  return mode == ClusterMode::kSpawn ? "spawn" : "connect";
}

std::string FormatKMeansRow(const KMeansRow &r) {
  return r.scenario + "," + std::to_string(r.n_points) + "," + std::to_string(r.k) + "," +
         std::to_string(r.n_tasks) + "," + r.flavor + "," + r.mode + "," +
         std::to_string(r.rep) + "," + Seconds(r.boot_s) + "," +
         (r.failed ? std::string("FAILED") : Seconds(r.runtime_s)) + "," +
         std::to_string(r.dist_computations);
}

KMeansRun RunKMeans(const KMeansScenario &s, const BenchConfig &config, int rep) {
  ValidateScenario(s);
  KMeansRun run;
  KMeansRow &row = run.row;
  row.scenario = s.Label();
  row.n_points = s.n_points;
  row.k = s.k_clusters;
  row.n_tasks = s.n_tasks;
  row.flavor = std::string(ToString(config.flavor));
  row.mode = ModeLabel(config.flavor, config.mode);
  row.rep = rep;

  fs::path dir = fs::absolute(config.work_dir) /
                 (row.scenario + "-" + row.flavor + "-" + row.mode + "-t" +
                  std::to_string(s.n_tasks) + "-r" + std::to_string(rep));
  fs::remove_all(dir);
  fs::create_directories(dir);
  PointSet data = GenerateDataset(s);
  auto bounds = PartitionBounds(s.n_points, s.n_tasks);
  std::vector<fs::path> partitions;
  for (size_t t = 0; t < bounds.size(); ++t) {
    partitions.push_back(dir / ("part_" + std::to_string(t) + ".txt"));
    WritePointSet(partitions.back(), Slice(data, bounds[t].first, bounds[t].second));
  }
  fs::path centroids = dir / "centroids_0.txt";
  WritePointSet(centroids, InitialCentroids(data));
  std::string kmeans = SiblingBinary("pilotlet-kmeans").string();

  auto unit = [&](std::vector<std::string> args) {
    ComputeUnitDescription d;
    d.executable = kmeans;
    d.arguments = std::move(args);
    d.cores = 1;
    d.memory_mb = 256;
    d.launch_method_hint = config.hint;
    return d;
  };

  pilotmgr::PilotManager mgr(ManagerFor(config, dir));
  if (config.adaptor) mgr.AddAdaptor(config.resource, config.adaptor);
  auto t0 = std::chrono::steady_clock::now();
  try {
    pilotmgr::PilotHandle pilot = mgr.SubmitPilot(PilotFor(config, dir));
    RequireActive(mgr, pilot, config.timeout_s);
    std::vector<pilotmgr::UnitHandle> maps;
    for (int it = 0; it < s.iterations; ++it) {
      std::vector<ComputeUnitDescription> map_units;
      for (size_t t = 0; t < partitions.size(); ++t) {
        auto d = unit({"map", "--points", partitions[t].string(), "--centroids",
                       centroids.string(), "--out", "partial.txt", "--assign", "assign.txt"});
        d.output_staging = {{"partial.txt", "partial.txt", StagingDirection::kOut},
                            {"assign.txt", "assign.txt", StagingDirection::kOut}};
        map_units.push_back(std::move(d));
      }
      maps = mgr.SubmitUnits(pilot, map_units);
      RequireDone(maps, mgr.WaitUnits(maps, config.timeout_s));

      std::vector<std::string> args = {"reduce", "--centroids", centroids.string(), "--out",
                                       "centroids.txt"};
      std::vector<StagingDirective> inputs;
      for (size_t t = 0; t < maps.size(); ++t) {
        auto rec = maps[t].record();
        row.dist_computations += ReportedDistances(rec.stdout_tail);
        std::string name = "partial_" + std::to_string(t) + ".txt";
        inputs.push_back({(SandboxOf(rec) / "partial.txt").string(), name,
                          StagingDirection::kIn});
        args.push_back("--partial");
        args.push_back(std::to_string(t) + ":" + name);
      }
      auto reduce = unit(args);
      reduce.input_staging = std::move(inputs);
      reduce.output_staging = {{"centroids.txt", "centroids.txt", StagingDirection::kOut}};
      auto reduced = mgr.SubmitUnits(pilot, {reduce});
      RequireDone(reduced, mgr.WaitUnits(reduced, config.timeout_s));
      fs::path next = dir / ("centroids_" + std::to_string(it + 1) + ".txt");
      fs::copy_file(SandboxOf(reduced[0].record()) / "centroids.txt", next,
                    fs::copy_options::overwrite_existing);
      centroids = next;
    }
    row.runtime_s = Since(t0);
    row.boot_s = IntervalSeconds(pilot.record().timings, "cluster_boot_start", "cluster_boot_end")
                     .value_or(0);
    run.result.centroids = ReadPointSet(centroids).points;
    run.result.distance_computations = row.dist_computations;
    for (const auto &m : maps) {
      auto part = ParseAssignments(ReadFile(SandboxOf(m.record()) / "assign.txt"));
      run.result.assignments.insert(run.result.assignments.end(), part.begin(), part.end());
    }
    mgr.CancelPilot(pilot);
  } catch (const Error &e) {
    row.failed = true;
    row.runtime_s = Since(t0);
    run.error = e.what();
  }
  return run;
}

std::string ToString(StartupMode m) {
  switch (m) {
    case StartupMode::kPlain:
      return "plain";
    case StartupMode::kSpawn:
      return "spawn";
    case StartupMode::kConnect:
      return "connect";
  }
  return "plain";
}

StartupMode ParseStartupMode(const std::string &text) {
  for (auto m : {StartupMode::kPlain, StartupMode::kSpawn, StartupMode::kConnect}) {
    if (ToString(m) == text) return m;
  }
  throw Error(ErrorCode::kValidation, "unknown startup mode '" + text + "'");
}

std::string FormatStartupRow(const StartupSample &s) {
  std::string latencies;
  for (size_t i = 0; i < s.unit_latency_s.size(); ++i) {
    if (i) latencies += ";";
    latencies += Seconds(s.unit_latency_s[i]);
  }
  return ToString(s.mode) + "," + std::to_string(s.rep) + "," +
         Seconds(s.submit_to_agent_start_s) + "," + Seconds(s.agent_start_to_cluster_ready_s) +
         "," + Seconds(s.cluster_ready_to_first_exec_s) + "," +
         Seconds(s.agent_start_to_first_exec_s) + "," + latencies;
}

std::vector<StartupSample> RunStartupBenchmark(const std::vector<StartupMode> &modes, int reps,
                                               const BenchConfig &config, int units) {
  std::vector<StartupSample> out;
  for (StartupMode mode : modes) {
    BenchConfig c = config;
    c.flavor = mode == StartupMode::kPlain ? ClusterFlavor::kNone : ClusterFlavor::kYarnLike;
    c.mode = mode == StartupMode::kConnect ? ClusterMode::kConnect : ClusterMode::kSpawn;
    fs::path mode_dir = fs::absolute(config.work_dir) / ("startup-" + ToString(mode));
    fs::remove_all(mode_dir);
    std::unique_ptr<LocalCluster> cluster;
    if (mode == StartupMode::kConnect) {
      cluster = std::make_unique<LocalCluster>(mode_dir / "cluster", c.flavor, c.pilot_cores,
                                               c.pilot_memory_mb);
      c.connect_url = cluster->endpoint();
      c.boot_delay_s = 0;
    }
    for (int rep = 0; rep < reps; ++rep) {
      fs::path dir = mode_dir / ("r" + std::to_string(rep));
      fs::create_directories(dir);
      pilotmgr::PilotManager mgr(ManagerFor(c, dir));
      if (c.adaptor) mgr.AddAdaptor(c.resource, c.adaptor);
      auto pilot = mgr.SubmitPilot(PilotFor(c, dir));
      ComputeUnitDescription trivial;
      trivial.executable = "/bin/true";
      trivial.memory_mb = 256;
      trivial.launch_method_hint = c.hint;
      auto handles = mgr.SubmitUnits(
          pilot, std::vector<ComputeUnitDescription>(static_cast<size_t>(units), trivial));
      RequireActive(mgr, pilot, c.timeout_s);
      RequireDone(handles, mgr.WaitUnits(handles, c.timeout_s));

      auto timings = pilot.record().timings;
      auto interval = [&](std::string_view from, std::string_view to) {
        auto v = IntervalSeconds(timings, from, to);
        if (!v) {
          throw Error(ErrorCode::kMalformedInput, "pilot " + pilot.pilot_id() + " lacks " +
                                                      std::string(from) + " or " +
                                                      std::string(to));
        }
        return *v;
      };
      StartupSample sample;
      sample.mode = mode;
      sample.rep = rep;
      sample.submit_to_agent_start_s = interval("pilot_submit", "agent_start");
      bool has_cluster = FindTiming(timings, "cluster_boot_end") != nullptr;
      std::string ready = has_cluster ? "cluster_boot_end" : "agent_start";
      sample.agent_start_to_cluster_ready_s = interval("agent_start", ready);
      sample.cluster_ready_to_first_exec_s = interval(ready, "first_unit_exec");
      sample.agent_start_to_first_exec_s = interval("agent_start", "first_unit_exec");
      for (const auto &h : handles) {
        auto v = IntervalSeconds(h.record().timings, "cu_submit", "cu_exec_start");
        if (v) sample.unit_latency_s.push_back(*v);
      }
      mgr.CancelPilot(pilot);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

LocalCluster::LocalCluster(const fs::path &dir, ClusterFlavor flavor, int64_t vcores,
                           int64_t memory_mb) {
  minicluster::ClusterConfig cfg;
  cfg.flavor = flavor;
  cfg.nodes.push_back({Hostname(), vcores, memory_mb});
  minicluster::GenerateConfigs(cfg, dir / "conf");
  minicluster::RmProcess::Options o;
  o.conf_dir = dir / "conf";
  o.scratch_dir = dir / "scratch";
  o.log_path = dir / "rm.log";
  o.die_with_parent = true;
  rm_ = minicluster::RmProcess::Start(o);
}

LocalCluster::~LocalCluster() {
  try {
    rm_.Stop(5);
  } catch (const std::exception &e) {
    std::cerr << "stopping cluster: " << e.what() << std::endl;
  }
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

}  // namespace pilotlet::bench
