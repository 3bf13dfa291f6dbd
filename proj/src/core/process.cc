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

#include "pilotlet/core/process.h"

#include <fcntl.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "pilotlet/core/error.h"

extern char **environ;

namespace pilotlet {

namespace {

int DecodeStatus(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 255;
}

// Everything the child needs, flattened before fork() so the child only makes
// async-signal-safe calls.
struct FlatCommand {
  std::vector<std::string> storage;
  std::vector<char *> argv;
  std::vector<char *> envp;
};

FlatCommand Flatten(const std::string &exe, const SpawnOptions &options) {
  FlatCommand flat;
  std::map<std::string, std::string> env;
  for (char **e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string entry(*e);
    auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  for (const auto &[k, v] : options.env) env[k] = v;

  flat.storage.reserve(options.argv.size() + env.size() + 1);
  flat.storage.push_back(exe);
  for (size_t i = 1; i < options.argv.size(); ++i) flat.storage.push_back(options.argv[i]);
  size_t argc = flat.storage.size();
  for (const auto &[k, v] : env) flat.storage.push_back(k + "=" + v);

  for (size_t i = 0; i < argc; ++i) flat.argv.push_back(flat.storage[i].data());
  flat.argv.push_back(nullptr);
  for (size_t i = argc; i < flat.storage.size(); ++i) flat.envp.push_back(flat.storage[i].data());
  flat.envp.push_back(nullptr);
  return flat;
}

[[noreturn]] void ChildFail(const char *what) {
  const char *reason = strerror(errno);
  (void)!write(STDERR_FILENO, what, strlen(what));
  (void)!write(STDERR_FILENO, ": ", 2);
  (void)!write(STDERR_FILENO, reason, strlen(reason));
  (void)!write(STDERR_FILENO, "\n", 1);
  _exit(127);
}

void RedirectTo(const char *path, int fd) {
  int out = open(path, O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (out < 0) ChildFail(path);
  if (dup2(out, fd) < 0) ChildFail("dup2");
}

}  // namespace

ChildProcess ChildProcess::Spawn(const SpawnOptions &options) {
  if (options.argv.empty()) throw Error(ErrorCode::kSpawnFailed, "empty argv");
  auto resolved = ResolveExecutable(options.argv[0]);
  // A missing executable is reported the shell way (exit 127) rather than as a
  // spawn error, so callers see one failure path.
  std::string exe = resolved ? resolved->string() : options.argv[0];
  FlatCommand flat = Flatten(exe, options);
  std::string cwd = options.cwd.string();
  std::string out = options.stdout_path ? options.stdout_path->string() : std::string();
  std::string err = options.stderr_path ? options.stderr_path->string() : std::string();
  pid_t parent = getpid();

  pid_t pid = fork();
  if (pid < 0) {
    throw Error(ErrorCode::kSpawnFailed, std::string("fork failed: ") + strerror(errno));
  }
  if (pid == 0) {
    if (options.new_process_group) setpgid(0, 0);
    if (options.die_with_parent) {
      prctl(PR_SET_PDEATHSIG, SIGKILL);
      if (getppid() != parent) _exit(137);
    }
    sigset_t none;
    sigemptyset(&none);
    sigprocmask(SIG_SETMASK, &none, nullptr);
    struct sigaction dfl {};
    dfl.sa_handler = SIG_DFL;
    sigaction(SIGPIPE, &dfl, nullptr);
    sigaction(SIGTERM, &dfl, nullptr);
    sigaction(SIGINT, &dfl, nullptr);
    sigaction(SIGCHLD, &dfl, nullptr);
    if (!out.empty()) RedirectTo(out.c_str(), STDOUT_FILENO);
    if (!err.empty()) RedirectTo(err.c_str(), STDERR_FILENO);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) ChildFail(cwd.c_str());
    execve(flat.argv[0], flat.argv.data(), flat.envp.data());
    ChildFail(flat.argv[0]);
  }
  if (options.new_process_group) setpgid(pid, pid);  // closes the race with the child
  ChildProcess child;
  child.pid_ = pid;
  child.own_group_ = options.new_process_group;
  return child;
}

ChildProcess::ChildProcess(ChildProcess &&other) noexcept { *this = std::move(other); }

ChildProcess &ChildProcess::operator=(ChildProcess &&other) noexcept {
  pid_ = other.pid_;
  own_group_ = other.own_group_;
  exit_status_ = other.exit_status_;
  other.pid_ = -1;
  other.exit_status_.reset();
  return *this;
}

std::optional<int> ChildProcess::TryWait() {
  if (exit_status_ || pid_ <= 0) return exit_status_;
  int status = 0;
  pid_t r = waitpid(pid_, &status, WNOHANG);
  if (r == pid_) exit_status_ = DecodeStatus(status);
  return exit_status_;
}

int ChildProcess::Wait() {
  if (exit_status_) return *exit_status_;
  int status = 0;
  while (true) {
    pid_t r = waitpid(pid_, &status, 0);
    if (r == pid_) break;
    if (r < 0 && errno != EINTR) {
      exit_status_ = 255;
      return 255;
    }
  }
  exit_status_ = DecodeStatus(status);
  return *exit_status_;
}

std::optional<int> ChildProcess::WaitFor(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (auto s = TryWait()) return s;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

void ChildProcess::Signal(int sig) const {
  if (pid_ <= 0) return;
  if (own_group_ && kill(-pid_, sig) == 0) return;
  if (!exit_status_) kill(pid_, sig);
}

int ChildProcess::Terminate(std::chrono::milliseconds grace) {
  if (pid_ <= 0) return exit_status_.value_or(255);
  if (!exit_status_) {
    Signal(SIGTERM);
    if (!WaitFor(grace)) {
      Signal(SIGKILL);
      Wait();
    }
  }
  // Descendants that outlived the leader still share its group.
  if (own_group_) kill(-pid_, SIGKILL);
  return *exit_status_;
}

bool ProcessAlive(pid_t pid) {
  if (pid <= 0 || kill(pid, 0) != 0) return false;
  std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
  std::string line;
  if (!std::getline(stat, line)) return false;
  auto close = line.rfind(')');
  if (close == std::string::npos || close + 2 >= line.size()) return true;
  return line[close + 2] != 'Z';
}

std::optional<std::filesystem::path> ResolveExecutable(const std::string &name) {
  auto usable = [](const std::filesystem::path &p) {
    struct stat st {};
    return stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && access(p.c_str(), X_OK) == 0;
  };
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (usable(name)) return std::filesystem::path(name);
    return std::nullopt;
  }
  const char *path = std::getenv("PATH");
  std::stringstream dirs(path != nullptr ? path : "/usr/local/bin:/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    std::filesystem::path candidate = std::filesystem::path(dir) / name;
    if (usable(candidate)) return candidate;
  }
  return std::nullopt;
}

std::filesystem::path SiblingBinary(const std::string &name) {
  if (const char *dir = std::getenv("PILOTLET_BIN_DIR"); dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / name;
  }
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) return self.parent_path() / name;
  return std::filesystem::path(name);
}

}  // namespace pilotlet
