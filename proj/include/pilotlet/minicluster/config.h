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
#include <filesystem>
#include <string>
#include <vector>

#include "pilotlet/core/types.h"

namespace pilotlet::minicluster {

struct NodeSpec {
  std::string hostname;
  int64_t vcores = 0;
  int64_t memory_mb = 0;

  bool operator==(const NodeSpec &) const = default;
};

struct ClusterConfig {
  ClusterFlavor flavor = ClusterFlavor::kYarnLike;
  /// 0 asks the OS for an ephemeral port.
  int rm_port = 0;
  std::vector<NodeSpec> nodes;

  bool operator==(const ClusterConfig &) const = default;
};

/// `cluster.conf`: a comment header, then key=value lines for flavor,
/// rm_port, node_count and node.<i>.{hostname,vcores,memory_mb}.
std::string FormatClusterConf(const ClusterConfig &config);
/// Ignores blank lines and lines starting with '#'. Throws kMalformedInput.
ClusterConfig ParseClusterConf(const std::string &text);

/// Writes `master` (first hostname), `slaves` (the remaining hostnames, one
/// per line; empty for a single node) and `cluster.conf` into `out_dir`.
/// Throws kValidation without nodes, kIoFailed when the directory cannot be
/// written.
void GenerateConfigs(const ClusterConfig &config, const std::filesystem::path &out_dir);
/// Reads `cluster.conf` from `dir`.
ClusterConfig LoadConfigs(const std::filesystem::path &dir);

}  // namespace pilotlet::minicluster
