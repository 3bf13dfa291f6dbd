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

#include "pilotlet/minicluster/config.h"

#include <map>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"

namespace pilotlet::minicluster {

namespace fs = std::filesystem;

namespace {

int64_t ParseInt(const std::string &key, const std::string &value) {
  try {
    size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception &) {
    throw Error(ErrorCode::kMalformedInput, "cluster.conf: " + key + " is not an integer");
  }
}

}  // namespace

std::string FormatClusterConf(const ClusterConfig &config) {
  std::string out = "# pilotlet mini-cluster configuration\n";
  out += "flavor=" + std::string(ToString(config.flavor)) + "\n";
  out += "rm_port=" + std::to_string(config.rm_port) + "\n";
  out += "node_count=" + std::to_string(config.nodes.size()) + "\n";
  for (size_t i = 0; i < config.nodes.size(); ++i) {
    const auto &n = config.nodes[i];
    std::string prefix = "node." + std::to_string(i) + ".";
    out += prefix + "hostname=" + n.hostname + "\n";
    out += prefix + "vcores=" + std::to_string(n.vcores) + "\n";
    out += prefix + "memory_mb=" + std::to_string(n.memory_mb) + "\n";
  }
  return out;
}

ClusterConfig ParseClusterConf(const std::string &text) {
  std::map<std::string, std::string> kv;
  for (const auto &raw : SplitLines(text)) {
    std::string line(Trim(raw));
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kMalformedInput, "cluster.conf: expected key=value, got '" + line + "'");
    }
    kv[std::string(Trim(line.substr(0, eq)))] = std::string(Trim(line.substr(eq + 1)));
  }
  auto get = [&](const std::string &key) -> const std::string & {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::kMalformedInput, "cluster.conf: missing " + key);
    return it->second;
  };
  ClusterConfig c;
  auto flavor = ParseEnum<ClusterFlavor>(get("flavor"));
  if (!flavor) throw Error(ErrorCode::kMalformedInput, "cluster.conf: bad flavor");
  c.flavor = *flavor;
  c.rm_port = static_cast<int>(ParseInt("rm_port", get("rm_port")));
  int64_t count = ParseInt("node_count", get("node_count"));
  if (count < 0) throw Error(ErrorCode::kMalformedInput, "cluster.conf: negative node_count");
  for (int64_t i = 0; i < count; ++i) {
    std::string prefix = "node." + std::to_string(i) + ".";
    NodeSpec n;
    n.hostname = get(prefix + "hostname");
    n.vcores = ParseInt(prefix + "vcores", get(prefix + "vcores"));
    n.memory_mb = ParseInt(prefix + "memory_mb", get(prefix + "memory_mb"));
    c.nodes.push_back(std::move(n));
  }
  return c;
}

void GenerateConfigs(const ClusterConfig &config, const fs::path &out_dir) {
  if (config.nodes.empty()) {
    throw Error(ErrorCode::kValidation, "a cluster needs at least one node",
                {"nodes must be non-empty"});
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailed, "cannot create " + out_dir.string());
  std::string slaves;
  for (size_t i = 1; i < config.nodes.size(); ++i) slaves += config.nodes[i].hostname + "\n";
  WriteFile(out_dir / "master", config.nodes[0].hostname + "\n");
  WriteFile(out_dir / "slaves", slaves);
  WriteFile(out_dir / "cluster.conf", FormatClusterConf(config));
}

ClusterConfig LoadConfigs(const fs::path &dir) { return ParseClusterConf(ReadFile(dir / "cluster.conf")); }

}  // namespace pilotlet::minicluster
