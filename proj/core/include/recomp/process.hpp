#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace recomp {

struct ProcessOptions {
  std::filesystem::path cwd;
  std::string stdin_text;
  /// Extra KEY=VALUE pairs layered over the parent environment.
  std::vector<std::string> env;
  std::chrono::milliseconds timeout{60000};
  std::size_t stdout_cap = 1 << 20;
  std::size_t stderr_cap = 1 << 20;
  /// RLIMIT_AS in bytes; 0 leaves the limit untouched.
  std::size_t address_space_limit = 0;
};

struct ProcessResult {
  std::optional<int> exit_code;
  std::optional<int> term_signal;
  bool timed_out = false;
  bool stdout_truncated = false;
  std::string stdout_text;
  std::string stderr_text;
  std::chrono::milliseconds duration{0};

  bool exited_cleanly() const { return !timed_out && exit_code && *exit_code == 0; }
};

/// Resolves `program` against PATH (or returns it when it contains a slash
/// and is executable).
std::optional<std::filesystem::path> find_executable(const std::string& program);

/// Spawns argv[0] (resolved beforehand) in its own process group. The whole
/// group is killed when the timeout elapses. Throws ExecError when the
/// binary cannot be spawned.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options);

}  // namespace recomp
