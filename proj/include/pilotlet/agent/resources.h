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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pilotlet/core/types.h"
#include "pilotlet/minicluster/config.h"

namespace pilotlet::agent {

struct NodeInfo {
  std::string hostname;
  int64_t cores = 0;
  int64_t memory_mb = 0;

  bool operator==(const NodeInfo &) const = default;
};

struct ClusterInfo {
  std::vector<NodeInfo> nodes;
  int64_t total_cores = 0;
  int64_t total_memory_mb = 0;
  /// Mini-cluster URL once one is spawned or connected.
  std::optional<std::string> flavor_endpoint;

  int64_t LargestNodeCores() const;
};

/// Parses a nodefile: one hostname per line, a host listed k times for k
/// cores. Hosts keep their order of first appearance. Throws
/// kMalformedNodefile.
std::vector<NodeInfo> ParseNodefile(const std::string &text);

/// Reads PILOTLET_NODEFILE, PILOTLET_CORES_PER_NODE and
/// PILOTLET_MEM_MB_PER_NODE from `env`. Throws kMissingEnv,
/// kMalformedNodefile.
ClusterInfo DetectResources(const std::map<std::string, std::string> &env);
ClusterInfo DetectResourcesFromEnvironment();

/// Mini-cluster layout for a pilot: one node per detected node. Node 0 also
/// hosts the master daemons, so it gives up 1 core and 1024 MB when it can
/// spare them.
minicluster::ClusterConfig MiniClusterFor(const ClusterInfo &info, ClusterFlavor flavor);

}  // namespace pilotlet::agent
