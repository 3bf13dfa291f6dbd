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

#include "pilotlet/cli/cli.h"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pilotlet/bench/harness.h"
#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"
#include "pilotlet/core/workload.h"
#include "pilotlet/minicluster/config.h"
#include "pilotlet/minicluster/rm_server.h"
#include "pilotlet/pilotmgr/pilot_manager.h"
#include "pilotlet/saga/job.h"

namespace pilotlet::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

const std::map<std::string, ClusterFlavor> &FlavorNames() {
  static const std::map<std::string, ClusterFlavor> names = {
      {"none", ClusterFlavor::kNone},
      {"yarn", ClusterFlavor::kYarnLike},
      {"spark", ClusterFlavor::kSparkLike}};
  return names;
}

const std::map<std::string, ClusterMode> &ModeNames() {
  static const std::map<std::string, ClusterMode> names = {{"spawn", ClusterMode::kSpawn},
                                                           {"connect", ClusterMode::kConnect}};
  return names;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string StoreOrEnv(const std::string &flag) {
  if (!flag.empty()) return flag;
  const char *env = std::getenv("PILOTLET_STORE");
  if (env && *env) return env;
  throw UsageError("no store given: pass --store <path> or set PILOTLET_STORE");
}

pilotmgr::ManagerOptions Options(const std::string &store, double boot_delay_s) {
  pilotmgr::ManagerOptions o;
  o.store_location = store;
  o.boot_delay_s = boot_delay_s;
  return o;
}

/// Waits in short slices so an interrupt can cancel the pilot. Returns false
/// when interrupted or out of time.
bool WaitAll(pilotmgr::PilotManager &mgr, const std::vector<pilotmgr::UnitHandle> &units,
             double timeout_s, std::map<std::string, UnitState> &states, std::ostream &err) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  while (true) {
    if (g_interrupted) {
      err << "interrupted" << std::endl;
      return false;
    }
    try {
      states = mgr.WaitUnits(units, 0.25);
      return true;
    } catch (const pilotmgr::WaitTimeout &e) {
      states = e.partial();
      if (std::chrono::steady_clock::now() >= deadline) {
        err << "timed out: " << e.what() << std::endl;
        return false;
      }
    }
  }
}

int ReportUnits(const std::vector<pilotmgr::UnitHandle> &units,
                const std::map<std::string, UnitState> &states, std::ostream &out) {
  bool all_done = true;
  for (const auto &u : units) {
    UnitState s = states.at(u.unit_id());
    all_done = all_done && s == UnitState::kDone;
    auto rec = u.record();
    out << u.unit_id() << " " << ToString(s);
    if (rec.exit_code) out << " exit=" << *rec.exit_code;
    if (rec.error) out << " error=" << *rec.error;
    out << "\n";
  }
  return all_done ? kExitOk : kExitDomainError;
}

int PilotRun(const std::string &store_flag, const std::string &workload_path,
             const std::string &adaptor, const std::string &sandbox, double boot_delay_s,
             double timeout_s, std::ostream &out, std::ostream &err) {
  std::string store = StoreOrEnv(store_flag);
  Workload w = LoadWorkloadFile(workload_path);
  if (!adaptor.empty()) w.pilot.resource_name = adaptor;
  if (!sandbox.empty()) w.pilot.sandbox_root = sandbox;
  pilotmgr::PilotManager mgr(Options(store, boot_delay_s));
  auto pilot = mgr.SubmitPilot(w.pilot);
  out << "pilot " << pilot.pilot_id() << std::endl;
  auto units = mgr.SubmitUnits(pilot, w.units);
  std::map<std::string, UnitState> states;
  bool finished = WaitAll(mgr, units, timeout_s, states, err);
  PilotState final_state = mgr.CancelPilot(pilot);
  if (!finished) {
    for (const auto &u : units) states[u.unit_id()] = u.state();
  }
  int code = ReportUnits(units, states, out);
  out << "pilot " << pilot.pilot_id() << " " << ToString(final_state) << std::endl;
  return finished ? code : kExitDomainError;
}

int UnitsSubmit(const std::string &store_flag, const std::string &pilot_id,
                const std::string &workload_path, bool wait, double timeout_s,
                std::ostream &out, std::ostream &err) {
  std::string store = StoreOrEnv(store_flag);
  nlohmann::json doc;
  try {
    std::ifstream in(workload_path);
    if (!in) throw Error(ErrorCode::kIoFailed, "cannot read " + workload_path);
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kValidation, workload_path + ": " + e.what());
  }
  const nlohmann::json &list = doc.is_object() && doc.contains("units") ? doc.at("units") : doc;
  if (!list.is_array()) {
    throw Error(ErrorCode::kValidation, workload_path + ": expected a units array");
  }
  std::vector<ComputeUnitDescription> descriptions;
  std::vector<std::string> violations;
  for (size_t i = 0; i < list.size(); ++i) {
    descriptions.push_back(
        ParseUnitDescription(list[i], "units[" + std::to_string(i) + "]", violations));
  }
  if (!violations.empty()) throw Error(ErrorCode::kValidation, "invalid units", violations);
  pilotmgr::PilotManager mgr(Options(store, 0));
  pilotmgr::PilotHandle pilot(pilot_id, mgr.store(), saga::JobHandle{});
  pilot.record();
  auto units = mgr.SubmitUnits(pilot, descriptions);
  if (!wait) {
    for (const auto &u : units) out << u.unit_id() << "\n";
    return kExitOk;
  }
  std::map<std::string, UnitState> states;
  if (!WaitAll(mgr, units, timeout_s, states, err)) return kExitDomainError;
  return ReportUnits(units, states, out);
}

int Status(const std::string &store_flag, const std::string &pilot_id, const std::string &format,
           std::ostream &out) {
  auto store = store::OpenStore(StoreOrEnv(store_flag));
  StatusReport r = BuildStatus(*store, pilot_id);
  if (format == "json") {
    out << StatusToJson(r).dump(2) << std::endl;
  } else {
    out << FormatStatusText(r);
  }
  return kExitOk;
}

void AppendCsv(const std::string &path, std::string_view header,
               const std::vector<std::string> &rows) {
  if (path.empty()) return;
  bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw Error(ErrorCode::kIoFailed, "cannot write " + path);
  if (fresh) f << header << "\n";
  for (const auto &r : rows) f << r << "\n";
}

bench::BenchConfig BenchBase(const std::string &work_dir, const std::string &resource,
                             int64_t sim_cores, int64_t pilot_cores, double boot_delay_s) {
  bench::BenchConfig c;
  c.work_dir = work_dir;
  c.resource = resource;
  c.pilot_cores = pilot_cores;
  c.boot_delay_s = boot_delay_s;
  if (resource == "simbatch") {
    saga::SimBatchConfig sim;
    sim.cores_per_node = sim_cores;
    sim.memory_mb_per_node = c.pilot_memory_mb;
    c.adaptor = std::make_shared<saga::SimBatchAdaptor>(sim);
  }
  return c;
}

}  // namespace

void RequestInterrupt() { g_interrupted = true; }

StatusReport BuildStatus(store::StateStore &store, const std::string &pilot_id) {
  StatusReport r;
  r.pilot = store.GetPilot(pilot_id);
  for (auto s : {UnitState::kNew, UnitState::kPending, UnitState::kScheduled,
                 UnitState::kAllocating, UnitState::kExecuting, UnitState::kStagingOut,
                 UnitState::kDone, UnitState::kFailed, UnitState::kCanceled}) {
    r.unit_counts[std::string(ToString(s))] = 0;
  }
  for (const auto &u : store.ListUnits(pilot_id)) {
    ++r.unit_counts[std::string(ToString(u.state))];
    ++r.total_units;
  }
  auto events = store.Watch(pilot_id, 0).events;
  size_t first = events.size() > 10 ? events.size() - 10 : 0;
  r.recent_events.assign(events.begin() + static_cast<std::ptrdiff_t>(first), events.end());
  return r;
}

std::string FormatStatusText(const StatusReport &r) {
  std::ostringstream out;
  out << "pilot " << r.pilot.pilot_id << " " << ToString(r.pilot.state) << "\n";
  if (r.pilot.cluster_endpoint) out << "cluster " << *r.pilot.cluster_endpoint << "\n";
  if (r.pilot.error) out << "error " << *r.pilot.error << "\n";
  out << "units " << r.total_units << "\n";
  for (const auto &[state, n] : r.unit_counts) {
    if (n > 0) out << "  " << state << " " << n << "\n";
  }
  out << "recent events\n";
  for (const auto &e : r.recent_events) out << "  " << store::FormatEvent(e) << "\n";
  return out.str();
}

nlohmann::json StatusToJson(const StatusReport &r) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto &e : r.recent_events) {
    events.push_back({{"index", e.index},
                      {"mono_us", e.mono_us},
                      {"entity_id", e.entity_id},
                      {"old_state", e.old_state},
                      {"new_state", e.new_state}});
  }
  return {{"pilot_id", r.pilot.pilot_id},
          {"state", ToString(r.pilot.state)},
          {"cluster_endpoint", r.pilot.cluster_endpoint ? nlohmann::json(*r.pilot.cluster_endpoint)
                                                        : nlohmann::json(nullptr)},
          {"error", r.pilot.error ? nlohmann::json(*r.pilot.error) : nlohmann::json(nullptr)},
          {"total_units", r.total_units},
          {"unit_counts", r.unit_counts},
          {"recent_events", events}};
}

ClusterHandle ClusterUp(const fs::path &dir, ClusterFlavor flavor, int64_t nodes,
                        int64_t cores_per_node, int64_t memory_mb_per_node) {
  if (flavor == ClusterFlavor::kNone) {
    throw Error(ErrorCode::kValidation, "a cluster needs flavor yarn or spark");
  }
  if (nodes < 1) throw Error(ErrorCode::kValidation, "--nodes must be at least 1");
  fs::path root = fs::absolute(dir);
  if (fs::exists(root / "endpoint")) {
    throw Error(ErrorCode::kValidation, root.string() + " already holds a cluster; run cluster down");
  }
  minicluster::ClusterConfig cfg;
  cfg.flavor = flavor;
  std::string host = Hostname();
  for (int64_t i = 0; i < nodes; ++i) cfg.nodes.push_back({host, cores_per_node, memory_mb_per_node});
  minicluster::GenerateConfigs(cfg, root / "conf");
  minicluster::RmProcess::Options o;
  o.conf_dir = root / "conf";
  o.scratch_dir = root / "scratch";
  o.log_path = root / "rm.log";
  auto rm = minicluster::RmProcess::Start(o);
  ClusterHandle h{rm.endpoint(), rm.pid()};
  WriteFile(root / "pid", std::to_string(h.pid) + "\n");
  WriteFile(root / "endpoint", h.endpoint + "\n");
  return h;
}

void ClusterDown(const fs::path &dir) {
  fs::path root = fs::absolute(dir);
  if (!fs::exists(root / "endpoint")) {
    throw Error(ErrorCode::kIoFailed, "no cluster recorded in " + root.string());
  }
  std::string endpoint(Trim(ReadFile(root / "endpoint")));
  if (!minicluster::StopCluster(endpoint, 10)) {
    throw Error(ErrorCode::kTimeout, "cluster at " + endpoint + " did not stop");
  }
  fs::remove(root / "endpoint");
  fs::remove(root / "pid");
}

int ParseAndDispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"pilotlet: pilot jobs with on-demand mini-clusters"};
  app.name("pilotlet");
  app.require_subcommand(1);

  std::string store, workload, adaptor, sandbox, pilot_id, format = "text", dir;
  std::string flavor = "yarn", mode = "spawn", resource = "local", csv, work_dir = "pilotlet-bench";
  double boot_delay_s = 0, timeout_s = 3600;
  bool wait = false, family = false;
  int64_t nodes = 1, cores = 4, memory_mb = 8192, n_points = 10000, k = 50, sim_cores = 8;
  int64_t pilot_cores = 8;
  int reps = 5, units = 1;
  uint64_t seed = 42;
  std::vector<int64_t> tasks = {1, 2, 4, 8};
  std::vector<std::string> flavors = {"none"}, modes = {"plain", "spawn", "connect"};

  auto *pilot = app.add_subcommand("pilot", "Pilot commands");
  pilot->require_subcommand(1);
  auto *run = pilot->add_subcommand("run", "Run a workload file on a new pilot and wait for it");
  run->add_option("--workload", workload, "Workload JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--adaptor", adaptor, "Resource adaptor: local or simbatch");
  run->add_option("--store", store, "State store path (default $PILOTLET_STORE)");
  run->add_option("--sandbox", sandbox, "Sandbox root for the pilot");
  run->add_option("--boot-delay-s", boot_delay_s, "Extra cluster boot delay");
  run->add_option("--timeout-s", timeout_s, "Give up after this long");

  auto *unitcmd = app.add_subcommand("units", "Unit commands");
  unitcmd->require_subcommand(1);
  auto *submit = unitcmd->add_subcommand("submit", "Submit units to a running pilot");
  submit->add_option("--pilot", pilot_id, "Pilot id")->required();
  submit->add_option("--workload", workload, "Workload JSON file or array of units")
      ->required()
      ->check(CLI::ExistingFile);
  submit->add_option("--store", store, "State store path (default $PILOTLET_STORE)");
  submit->add_flag("--wait", wait, "Wait for the units and report their states");
  submit->add_option("--timeout-s", timeout_s, "With --wait, give up after this long");

  auto *cluster = app.add_subcommand("cluster", "Standalone mini-cluster commands");
  cluster->require_subcommand(1);
  auto *up = cluster->add_subcommand("up", "Start a detached mini-cluster");
  up->add_option("--dir", dir, "Cluster directory")->required();
  up->add_option("--flavor", flavor, "yarn or spark")->check(CLI::IsMember({"yarn", "spark"}));
  up->add_option("--nodes", nodes, "Number of nodes");
  up->add_option("--cores-per-node", cores, "Vcores per node");
  up->add_option("--memory-mb-per-node", memory_mb, "Memory per node");
  auto *down = cluster->add_subcommand("down", "Stop the mini-cluster in a directory");
  down->add_option("--dir", dir, "Cluster directory")->required();

  auto *bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  auto *km = bench->add_subcommand("kmeans", "K-Means map/reduce benchmark");
  km->add_option("--n", n_points, "Points");
  km->add_option("--k", k, "Clusters");
  km->add_flag("--family", family, "Run the scaled scenario family instead of --n/--k");
  km->add_option("--tasks", tasks, "Map task counts")->delimiter(',');
  km->add_option("--flavor", flavors, "Pilot flavors: none, yarn, spark")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "yarn", "spark"}));
  km->add_option("--mode", mode, "spawn or connect")->check(CLI::IsMember({"spawn", "connect"}));
  km->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
  km->add_option("--seed", seed, "Dataset seed");
  km->add_option("--resource", resource, "local or simbatch")
      ->check(CLI::IsMember({"local", "simbatch"}));
  km->add_option("--sim-cores", sim_cores, "Cores of the simulated node");
  km->add_option("--pilot-cores", pilot_cores, "Pilot size");
  km->add_option("--boot-delay-s", boot_delay_s, "Extra cluster boot delay");
  km->add_option("--out", csv, "CSV file to append to");
  km->add_option("--work-dir", work_dir, "Scratch directory");
  auto *st = bench->add_subcommand("startup", "Agent startup benchmark");
  st->add_option("--modes", modes, "plain, spawn, connect")
      ->delimiter(',')
      ->check(CLI::IsMember({"plain", "spawn", "connect"}));
  st->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
  st->add_option("--units", units, "Trivial units per pilot")->check(CLI::PositiveNumber);
  st->add_option("--boot-delay-s", boot_delay_s, "Extra cluster boot delay");
  st->add_option("--out", csv, "CSV file to append to");
  st->add_option("--work-dir", work_dir, "Scratch directory");

  auto *status = app.add_subcommand("status", "Show a pilot and its units");
  status->add_option("--pilot", pilot_id, "Pilot id")->required();
  status->add_option("--store", store, "State store path (default $PILOTLET_STORE)");
  status->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto deepest = [&app]() -> const CLI::App * {
    const CLI::App *where = &app;
    while (!where->get_subcommands().empty()) where = where->get_subcommands().front();
    return where;
  };
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << deepest()->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "pilotlet: " << e.what() << "\n" << deepest()->help();
    return kExitUsage;
  }

  try {
    if (*run) return PilotRun(store, workload, adaptor, sandbox, boot_delay_s, timeout_s, out, err);
    if (*submit) return UnitsSubmit(store, pilot_id, workload, wait, timeout_s, out, err);
    if (*status) return Status(store, pilot_id, format, out);
    if (*up) {
      auto h = ClusterUp(dir, FlavorNames().at(flavor), nodes, cores, memory_mb);
      out << h.endpoint << std::endl;
      return kExitOk;
    }
    if (*down) {
      ClusterDown(dir);
      out << "stopped" << std::endl;
      return kExitOk;
    }
    if (*km) {
      std::vector<bench::KMeansScenario> scenarios;
      if (family) {
        scenarios = bench::ScaledFamily();
      } else {
        bench::KMeansScenario s;
        s.n_points = n_points;
        s.k_clusters = k;
        scenarios.push_back(s);
      }
      bool any_failed = false;
      out << bench::kKMeansCsvHeader << "\n";
      for (auto s : scenarios) {
        s.seed = seed;
        for (const auto &f : flavors) {
          for (int64_t t : tasks) {
            s.n_tasks = t;
            for (int rep = 0; rep < reps; ++rep) {
              auto c = BenchBase(work_dir, resource, sim_cores, pilot_cores, boot_delay_s);
              c.flavor = FlavorNames().at(f);
              c.mode = ModeNames().at(mode);
              auto result = bench::RunKMeans(s, c, rep);
              std::string row = bench::FormatKMeansRow(result.row);
              out << row << std::endl;
              AppendCsv(csv, bench::kKMeansCsvHeader, {row});
              if (result.row.failed) {
                err << row << ": " << result.error << std::endl;
                any_failed = true;
              }
            }
          }
        }
      }
      return any_failed ? kExitDomainError : kExitOk;
    }
    if (*st) {
      std::vector<bench::StartupMode> parsed;
      for (const auto &m : modes) parsed.push_back(bench::ParseStartupMode(m));
      auto c = BenchBase(work_dir, "local", sim_cores, 4, boot_delay_s);
      auto samples = bench::RunStartupBenchmark(parsed, reps, c, units);
      std::vector<std::string> rows;
      out << bench::kStartupCsvHeader << "\n";
      for (const auto &s : samples) {
        rows.push_back(bench::FormatStartupRow(s));
        out << rows.back() << "\n";
      }
      AppendCsv(csv, bench::kStartupCsvHeader, rows);
      return kExitOk;
    }
  } catch (const UsageError &e) {
    err << "pilotlet: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error &e) {
    err << "pilotlet: " << e.what() << "\n";
    for (const auto &d : e.details()) err << "  " << d << "\n";
    return kExitDomainError;
  } catch (const std::exception &e) {
    err << "pilotlet: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace pilotlet::cli
