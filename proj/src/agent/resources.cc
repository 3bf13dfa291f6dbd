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

#include "pilotlet/agent/resources.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"

extern char **environ;

namespace pilotlet::agent {

namespace {

constexpr int64_t kDaemonCores = 1;
constexpr int64_t kDaemonMemoryMb = 1024;

int64_t PositiveInt(const std::map<std::string, std::string> &env, const std::string &key) {
  auto it = env.find(key);
  if (it == env.end()) throw Error(ErrorCode::kMissingEnv, key + " is not set");
  std::string_view text = Trim(it->second);
  int64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || value <= 0) {
    throw Error(ErrorCode::kMissingEnv, key + " is not a positive integer: '" + it->second + "'");
  }
  return value;
}

}  // namespace

int64_t ClusterInfo::LargestNodeCores() const {
  int64_t best = 0;
  for (const auto &n : nodes) best = std::max(best, n.cores);
  return best;
}

std::vector<NodeInfo> ParseNodefile(const std::string &text) {
  std::vector<NodeInfo> nodes;
  std::vector<std::string> lines = SplitLines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string &host = lines[i];
    if (host.empty()) {
      throw Error(ErrorCode::kMalformedNodefile, "empty line " + std::to_string(i + 1));
    }
    if (host.find_first_of(" \t\r") != std::string::npos) {
      throw Error(ErrorCode::kMalformedNodefile,
                  "line " + std::to_string(i + 1) + " is not a hostname: '" + host + "'");
    }
    auto it = std::find_if(nodes.begin(), nodes.end(),
                           [&](const NodeInfo &n) { return n.hostname == host; });
    if (it == nodes.end()) {
      nodes.push_back({host, 1, 0});
    } else {
      ++it->cores;
    }
  }
  if (nodes.empty()) throw Error(ErrorCode::kMalformedNodefile, "nodefile lists no hosts");
  return nodes;
}

ClusterInfo DetectResources(const std::map<std::string, std::string> &env) {
  auto path = env.find("PILOTLET_NODEFILE");
  if (path == env.end() || path->second.empty()) {
    throw Error(ErrorCode::kMissingEnv, "PILOTLET_NODEFILE is not set");
  }
  int64_t cores_per_node = PositiveInt(env, "PILOTLET_CORES_PER_NODE");
  int64_t memory_mb = PositiveInt(env, "PILOTLET_MEM_MB_PER_NODE");

  std::string text;
  try {
    text = ReadFile(path->second);
  } catch (const Error &e) {
    throw Error(ErrorCode::kMalformedNodefile, e.what());
  }
  ClusterInfo info;
  info.nodes = ParseNodefile(text);
  for (auto &n : info.nodes) {
    if (n.cores > cores_per_node) {
      throw Error(ErrorCode::kMalformedNodefile,
                  n.hostname + " is listed " + std::to_string(n.cores) + " times but nodes have " +
                      std::to_string(cores_per_node) + " cores");
    }
    n.memory_mb = memory_mb;
    info.total_cores += n.cores;
    info.total_memory_mb += n.memory_mb;
  }
  return info;
}

ClusterInfo DetectResourcesFromEnvironment() {
  std::map<std::string, std::string> env;
  for (char **e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    size_t eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return DetectResources(env);
}

minicluster::ClusterConfig MiniClusterFor(const ClusterInfo &info, ClusterFlavor flavor) {
  minicluster::ClusterConfig config;
  config.flavor = flavor;
  for (const auto &n : info.nodes) config.nodes.push_back({n.hostname, n.cores, n.memory_mb});
  if (!config.nodes.empty()) {
    auto &master = config.nodes.front();
    if (master.vcores > kDaemonCores) master.vcores -= kDaemonCores;
    if (master.memory_mb > kDaemonMemoryMb) master.memory_mb -= kDaemonMemoryMb;
  }
  return config;
}

}  // namespace pilotlet::agent
