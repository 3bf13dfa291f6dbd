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

#include <random>

#include "pilotlet/core/error.h"
#include "engine.h"

namespace pilotlet::saga {

using internal::Engine;
using internal::EnginePolicy;

namespace {

EnginePolicy LocalPolicy(const LocalAdaptorConfig &config) {
  EnginePolicy p;
  p.adaptor_name = "local";
  p.owns_scratch = config.scratch_dir.empty();
  p.scratch_dir = p.owns_scratch ? internal::MakeScratchDir("local") : config.scratch_dir;
  p.immediate = true;
  std::string host = config.hostname;
  p.allocate = [host](const JobDescription &d) {
    return std::optional<std::vector<NodeGrant>>({NodeGrant{0, host, d.total_cores}});
  };
  int64_t default_mem = config.default_memory_mb_per_node;
  p.env = [default_mem](const JobDescription &d) {
    int64_t mem = d.memory_mb_per_node > 0 ? d.memory_mb_per_node : default_mem;
    return std::map<std::string, std::string>{
        {kCoresPerNodeEnv, std::to_string(d.total_cores)},
        {kMemPerNodeEnv, std::to_string(mem)}};
  };
  return p;
}

}  // namespace

LocalAdaptor::LocalAdaptor(LocalAdaptorConfig config)
    : engine_(std::make_unique<Engine>(LocalPolicy(config))) {}
LocalAdaptor::~LocalAdaptor() = default;
JobHandle LocalAdaptor::Submit(const JobDescription &d) { return engine_->Submit(d); }
JobState LocalAdaptor::State(const JobHandle &h) { return engine_->State(h); }
JobInfo LocalAdaptor::Info(const JobHandle &h) { return engine_->Info(h); }
JobState LocalAdaptor::Cancel(const JobHandle &h) { return engine_->Cancel(h); }
JobState LocalAdaptor::Wait(const JobHandle &h, double timeout_s) {
  return engine_->Wait(h, timeout_s);
}
void LocalAdaptor::Detach() { engine_->Detach(); }

namespace {

struct Inventory {
  std::vector<int64_t> free;
  std::mt19937_64 rng;
};

EnginePolicy SimBatchPolicy(const SimBatchConfig &config) {
  if (config.node_count < 1 || config.cores_per_node < 1 || config.memory_mb_per_node < 1) {
    throw Error(ErrorCode::kValidation, "simbatch needs at least one node with cores and memory");
  }
  EnginePolicy p;
  p.adaptor_name = "simbatch";
  p.owns_scratch = config.scratch_dir.empty();
  p.scratch_dir = p.owns_scratch ? internal::MakeScratchDir("simbatch") : config.scratch_dir;
  for (int64_t i = 0; i < config.node_count; ++i) {
    std::filesystem::create_directories(p.scratch_dir / "nodes" / ("simnode-" + std::to_string(i)));
  }
  auto inv = std::make_shared<Inventory>();
  inv->free.assign(static_cast<size_t>(config.node_count), config.cores_per_node);
  inv->rng.seed(config.seed);
  p.admit = [config](const JobDescription &d) {
    if (!ResolveExecutable(d.executable)) {
      throw Error(ErrorCode::kSubmitFailed, "executable not found: " + d.executable);
    }
    if (d.total_cores > config.node_count * config.cores_per_node) {
      throw Error(ErrorCode::kSubmitFailed,
                  "request of " + std::to_string(d.total_cores) + " cores exceeds " +
                      std::to_string(config.node_count * config.cores_per_node));
    }
    if (d.memory_mb_per_node > config.memory_mb_per_node) {
      throw Error(ErrorCode::kSubmitFailed,
                  "request of " + std::to_string(d.memory_mb_per_node) + " MB per node exceeds " +
                      std::to_string(config.memory_mb_per_node));
    }
  };
  double lo = config.queue_wait_s;
  double hi = config.queue_wait_max_s;
  p.queue_wait_s = [inv, lo, hi]() {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(inv->rng);
  };
  p.allocate = [inv](const JobDescription &d) -> std::optional<std::vector<NodeGrant>> {
    int64_t total = 0;
    for (int64_t f : inv->free) total += f;
    if (total < d.total_cores) return std::nullopt;
    std::vector<NodeGrant> grants;
    int64_t need = d.total_cores;
    for (size_t i = 0; i < inv->free.size() && need > 0; ++i) {
      int64_t take = std::min(inv->free[i], need);
      if (take == 0) continue;
      inv->free[i] -= take;
      need -= take;
      grants.push_back(NodeGrant{static_cast<int64_t>(i), "simnode-" + std::to_string(i), take});
    }
    return grants;
  };
  p.release = [inv](const std::vector<NodeGrant> &grants) {
    for (const auto &g : grants) inv->free[static_cast<size_t>(g.node_index)] += g.cores;
  };
  p.env = [config](const JobDescription &) {
    return std::map<std::string, std::string>{
        {kCoresPerNodeEnv, std::to_string(config.cores_per_node)},
        {kMemPerNodeEnv, std::to_string(config.memory_mb_per_node)}};
  };
  return p;
}

}  // namespace

SimBatchAdaptor::SimBatchAdaptor(SimBatchConfig config)
    : config_(config), engine_(std::make_unique<Engine>(SimBatchPolicy(config))) {}
SimBatchAdaptor::~SimBatchAdaptor() = default;
JobHandle SimBatchAdaptor::Submit(const JobDescription &d) { return engine_->Submit(d); }
JobState SimBatchAdaptor::State(const JobHandle &h) { return engine_->State(h); }
JobInfo SimBatchAdaptor::Info(const JobHandle &h) { return engine_->Info(h); }
JobState SimBatchAdaptor::Cancel(const JobHandle &h) { return engine_->Cancel(h); }
JobState SimBatchAdaptor::Wait(const JobHandle &h, double timeout_s) {
  return engine_->Wait(h, timeout_s);
}
void SimBatchAdaptor::Detach() { engine_->Detach(); }

}  // namespace pilotlet::saga
