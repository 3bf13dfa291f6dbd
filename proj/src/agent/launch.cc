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

#include "pilotlet/agent/launch.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"

namespace pilotlet::agent {

namespace fs = std::filesystem;

namespace {

void Copy(const fs::path &from, const fs::path &to) {
  std::error_code ec;
  if (!fs::exists(from, ec)) {
    throw Error(ErrorCode::kStagingFailed, from.string() + " does not exist");
  }
  if (to.has_parent_path()) fs::create_directories(to.parent_path(), ec);
  fs::copy(from, to,
           fs::copy_options::recursive | fs::copy_options::overwrite_existing, ec);
  if (ec) {
    throw Error(ErrorCode::kStagingFailed,
                "copy " + from.string() + " -> " + to.string() + ": " + ec.message());
  }
}

std::string JoinCores(const std::vector<int64_t> &cores) {
  std::string out;
  for (int64_t c : cores) {
    if (!out.empty()) out += ',';
    out += std::to_string(c);
  }
  return out;
}

}  // namespace

LaunchMethod ResolveLaunchMethod(LaunchMethodHint hint, ClusterFlavor flavor, bool has_cluster) {
  switch (hint) {
    case LaunchMethodHint::kAuto:
      if (has_cluster && flavor == ClusterFlavor::kYarnLike) return LaunchMethod::kYarn;
      if (has_cluster && flavor == ClusterFlavor::kSparkLike) return LaunchMethod::kSpark;
      return LaunchMethod::kFork;
    case LaunchMethodHint::kFork:
      return LaunchMethod::kFork;
    case LaunchMethodHint::kYarn:
      if (has_cluster && flavor == ClusterFlavor::kYarnLike) return LaunchMethod::kYarn;
      throw Error(ErrorCode::kValidation, "launch method YARN needs a YARN_LIKE pilot");
    case LaunchMethodHint::kSpark:
      if (has_cluster && flavor == ClusterFlavor::kSparkLike) return LaunchMethod::kSpark;
      throw Error(ErrorCode::kValidation, "launch method SPARK needs a SPARK_LIKE pilot");
  }
  return LaunchMethod::kFork;
}

void PrepareSandbox(const store::UnitRecord &rec, const fs::path &unit_dir) {
  std::error_code ec;
  fs::create_directories(unit_dir / "work", ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailed, "cannot create " + (unit_dir / "work").string() + ": " +
                                          ec.message());
  }
  nlohmann::json j = rec;
  WriteFileAtomic(unit_dir / "unit.json", j.dump(2) + "\n");
}

void StageIn(const ComputeUnitDescription &cu, const fs::path &unit_dir) {
  for (const auto &d : cu.input_staging) {
    if (d.direction != StagingDirection::kIn) continue;
    Copy(fs::path(d.source), unit_dir / "work" / d.target);
  }
}

void StageOut(const ComputeUnitDescription &cu, const fs::path &unit_dir) {
  for (const auto &d : cu.output_staging) {
    if (d.direction != StagingDirection::kOut) continue;
    Copy(unit_dir / "work" / d.source, unit_dir / d.target);
  }
}

SpawnOptions ForkSpawnOptions(const store::UnitRecord &rec, const fs::path &unit_dir,
                              const Slot &slot, const NodeInfo &node) {
  const auto &cu = rec.description;
  fs::path work = unit_dir / "work";
  std::string exe = cu.executable;
  if (exe.find('/') != std::string::npos && fs::path(exe).is_relative() &&
      fs::exists(work / exe)) {
    exe = (work / exe).string();
  }
  if (!ResolveExecutable(exe)) {
    throw Error(ErrorCode::kSpawnFailed, "executable not found: " + cu.executable);
  }
  SpawnOptions o;
  o.argv.push_back(exe);
  o.argv.insert(o.argv.end(), cu.arguments.begin(), cu.arguments.end());
  o.env = cu.environment;
  o.env["PILOTLET_UNIT_ID"] = rec.unit_id;
  o.env["PILOTLET_PILOT_ID"] = rec.pilot_id;
  o.env["PILOTLET_NODE"] = node.hostname;
  o.env["PILOTLET_NODE_INDEX"] = std::to_string(slot.node_index);
  o.env["PILOTLET_CORES"] = JoinCores(slot.core_indices);
  o.cwd = work;
  o.stdout_path = unit_dir / "stdout";
  o.stderr_path = unit_dir / "stderr";
  return o;
}

minicluster::AppSpec ClusterAppSpec(const store::UnitRecord &rec, const fs::path &unit_dir,
                                    const minicluster::Resource &am) {
  const auto &cu = rec.description;
  minicluster::AppSpec spec;
  spec.name = rec.unit_id;
  spec.am.resource = am;
  spec.task.resource = {cu.cores, cu.memory_mb};
  spec.task.command = {SiblingBinary("pilotlet-agent").string(), "exec", "--unit-dir",
                       unit_dir.string()};
  spec.task.env = cu.environment;
  spec.task.env["PILOTLET_UNIT_ID"] = rec.unit_id;
  spec.task.env["PILOTLET_PILOT_ID"] = rec.pilot_id;
  return spec;
}

std::optional<int> AppLogExitCode(std::string_view log) {
  std::optional<int> code;
  for (const auto &line : SplitLines(log)) {
    std::string_view l(line);
    if (l.substr(0, 5) != "EXIT ") continue;
    std::string_view digits = l.substr(5);
    int value = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec == std::errc() && end == digits.data() + digits.size()) code = value;
  }
  return code;
}

int ExecUnit(const fs::path &unit_dir) {
  store::UnitRecord rec;
  try {
    rec = nlohmann::json::parse(ReadFile(unit_dir / "unit.json")).get<store::UnitRecord>();
  } catch (const std::exception &e) {
    std::fprintf(stderr, "cannot read unit spec: %s\n", e.what());
    return 127;
  }
  auto redirect = [](const fs::path &path, int target) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) return false;
    bool ok = ::dup2(fd, target) >= 0;
    ::close(fd);
    return ok;
  };
  if (!redirect(unit_dir / "stdout", STDOUT_FILENO) ||
      !redirect(unit_dir / "stderr", STDERR_FILENO)) {
    std::fprintf(stderr, "cannot open output files in %s\n", unit_dir.c_str());
    return 127;
  }
  if (::chdir((unit_dir / "work").c_str()) != 0) {
    std::fprintf(stderr, "chdir %s: %s\n", (unit_dir / "work").c_str(), std::strerror(errno));
    return 127;
  }
  for (const auto &[k, v] : rec.description.environment) ::setenv(k.c_str(), v.c_str(), 1);
  std::vector<std::string> args{rec.description.executable};
  args.insert(args.end(), rec.description.arguments.begin(), rec.description.arguments.end());
  std::vector<char *> argv;
  for (auto &a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  ::execvp(argv[0], argv.data());
  std::fprintf(stderr, "exec %s: %s\n", argv[0], std::strerror(errno));
  return 127;
}

}  // namespace pilotlet::agent
