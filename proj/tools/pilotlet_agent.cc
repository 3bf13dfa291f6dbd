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

#include <signal.h>

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "pilotlet/agent/agent.h"
#include "pilotlet/agent/launch.h"
#include "pilotlet/core/error.h"

namespace {

std::map<std::string, pilotlet::ClusterFlavor> FlavorNames() {
  return {{"none", pilotlet::ClusterFlavor::kNone},
          {"yarn", pilotlet::ClusterFlavor::kYarnLike},
          {"spark", pilotlet::ClusterFlavor::kSparkLike}};
}

int RunExec(int argc, char **argv) {
  CLI::App app{"pilotlet-agent exec: runs a unit inside a cluster container"};
  std::string unit_dir;
  app.add_option("--unit-dir", unit_dir, "Unit sandbox")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }
  return pilotlet::agent::ExecUnit(unit_dir);
}

}  // namespace

int main(int argc, char **argv) {
  using namespace pilotlet;
  if (argc > 1 && std::string(argv[1]) == "exec") return RunExec(argc - 1, argv + 1);

  CLI::App app{"pilotlet-agent: runs the units of one pilot"};
  agent::AgentOptions opt;
  std::string flavor = "none";
  std::string mode = "spawn";
  std::string sandbox = opt.sandbox.string();
  app.add_option("--pilot-id", opt.pilot_id, "Pilot to serve")->required();
  app.add_option("--store", opt.store_location, "State store path or mem://")->required();
  app.add_option("--flavor", flavor, "none|yarn|spark")
      ->check(CLI::IsMember({"none", "yarn", "spark"}, CLI::ignore_case));
  app.add_option("--mode", mode, "spawn|connect")
      ->check(CLI::IsMember({"spawn", "connect"}, CLI::ignore_case));
  app.add_option("--connect-url", opt.connect_url, "Cluster to adopt in connect mode");
  app.add_option("--sandbox", sandbox, "Sandbox root");
  app.add_option("--boot-delay-s", opt.boot_delay_s, "Extra delay before the cluster boots")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--runtime-s", opt.runtime_s, "Runtime budget, 0 for none");
  app.add_option("--poll-interval-s", opt.poll_interval_s)->check(CLI::PositiveNumber);
  app.add_option("--monitor-interval-s", opt.monitor_interval_s)->check(CLI::PositiveNumber);
  app.add_option("--heartbeat-interval-s", opt.heartbeat_interval_s)->check(CLI::PositiveNumber);
  app.add_option("--am-vcores", opt.am.vcores)->check(CLI::PositiveNumber);
  app.add_option("--am-memory-mb", opt.am.memory_mb)->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  for (char &c : flavor) c = static_cast<char>(std::tolower(c));
  opt.flavor = FlavorNames().at(flavor);
  opt.mode = ParseEnum<ClusterMode>(mode).value_or(ClusterMode::kSpawn);
  opt.sandbox = std::filesystem::absolute(sandbox);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  agent::Agent agent(opt);
  std::thread([&agent, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    agent.RequestStop(true);
  }).detach();
  return agent.Run();
}
