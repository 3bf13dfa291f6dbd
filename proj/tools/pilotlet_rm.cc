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

// Mini-cluster daemons: the resource manager, its node managers and the
// application master launched into YARN-like AM containers.

#include <iostream>

#include "CLI11.hpp"
#include "pilotlet/core/error.h"
#include "pilotlet/minicluster/rm_server.h"

int main(int argc, char **argv) {
  namespace mc = pilotlet::minicluster;
  CLI::App app{"pilotlet mini-cluster daemons"};
  app.require_subcommand(1);

  mc::ServeOptions serve;
  std::string endpoint_file;
  int port = -1;
  auto *serve_cmd = app.add_subcommand("serve", "Run a resource manager");
  serve_cmd->add_option("--conf-dir", serve.conf_dir, "Directory holding cluster.conf")->required();
  serve_cmd->add_option("--scratch", serve.scratch_dir, "Scratch directory")->required();
  serve_cmd->add_option("--endpoint-file", endpoint_file, "Where to write the endpoint URL");
  serve_cmd->add_option("--port", port, "Port to bind (0 for any)");

  std::string rm_url;
  int64_t node = 0;
  std::string nm_scratch;
  auto *nm_cmd = app.add_subcommand("nodemanager", "Run a node manager");
  nm_cmd->add_option("--rm", rm_url, "Resource manager URL")->required();
  nm_cmd->add_option("--node", node, "Node index")->required();
  nm_cmd->add_option("--scratch", nm_scratch, "Node scratch directory")->required();

  std::string app_id;
  auto *am_cmd = app.add_subcommand("appmaster", "Run an application master");
  am_cmd->add_option("--rm", rm_url, "Resource manager URL")->required();
  am_cmd->add_option("--app-id", app_id, "Application id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) {
      if (!endpoint_file.empty()) serve.endpoint_file = endpoint_file;
      if (port >= 0) serve.port = port;
      return mc::RunResourceManager(serve);
    }
    if (*nm_cmd) return mc::RunNodeManager(rm_url, node, nm_scratch);
    return mc::RunAppMaster(rm_url, app_id);
  } catch (const pilotlet::Error &e) {
    std::cerr << "pilotlet-rm: " << pilotlet::ToString(e.code()) << ": " << e.what() << "\n";
    return 2;
  }
}
