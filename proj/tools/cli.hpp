#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recomp/compilebox.hpp"
#include "recomp/corpus.hpp"
#include "recomp/llm.hpp"

namespace recomp::cli {

enum class Mode { Refine, Baseline, PreprocessOnly, Report };
enum class BackendKind { Http, Replay, Record };

struct RunConfig {
  Mode mode = Mode::Refine;
  std::filesystem::path manifest;
  BackendKind backend = BackendKind::Http;
  std::optional<std::filesystem::path> fixtures;
  /// Destination for recorded replies (backend=record).
  std::optional<std::filesystem::path> record_dir;
  int budget = 15;
  std::optional<int> static_budget;
  int jobs = 1;
  std::optional<std::filesystem::path> rules_path;
  CompilerConfig compiler;
  BucketRange bucket_range;
  std::filesystem::path out = "recomp-run";
  bool always_refine = false;
  std::uint64_t seed = 0;
  std::size_t context_limit = 4096;
  std::vector<int> thresholds = {1, 5, 10, 15};
  std::string header_hint = "#include <bits/stdc++.h>\nusing namespace std;";
  HttpBackendConfig http;
  /// Report mode input; defaults to `<out>/outcomes.jsonl`.
  std::optional<std::filesystem::path> outcomes;
  bool quiet = false;
};

constexpr int kExitOk = 0;
constexpr int kExitInfrastructure = 1;
constexpr int kExitConfig = 2;

/// Set from a signal handler to stop scheduling new programs. In-flight
/// programs finish and their records are flushed.
std::atomic<bool>& stop_requested();

/// Parses argv (argv[0] is the program name) into a RunConfig. Throws
/// ConfigError; usage errors are reported through the return code of run().
RunConfig parse_config(const std::vector<std::string>& argv);

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace recomp::cli
