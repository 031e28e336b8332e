#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recomp/compilebox.hpp"
#include "recomp/corpus.hpp"
#include "recomp/llm.hpp"
#include "recomp/preprocess.hpp"
#include "recomp/runbox.hpp"

namespace recomp {

enum class RefinementStatus {
  Functional,
  CompiledButFailing,
  CompileBudgetExhausted,
  Inadmissible,
  ContextOverflow,
  SanitizerUnfixed,
  /// Rule-only baseline: the fixed unit did not compile.
  CompileFailed,
};

std::string_view to_string(RefinementStatus s);
std::optional<RefinementStatus> parse_refinement_status(std::string_view s);

struct PipelineConfig {
  /// Query budget N shared by both phases.
  int budget = 15;
  /// Optional cap on queries spent while the unit does not compile.
  std::optional<int> static_budget;
  /// Send the initial prompt even when preprocessing alone compiles.
  bool always_refine = false;
  std::size_t context_limit = 4096;
  std::string system_prompt = std::string(default_system_prompt());
  RuleSet rules = default_rules();
  CompilerConfig compiler;
  /// Template for test execution; scratch/archive/source fields are set
  /// per iteration.
  RunLimits run_limits;
  int error_context_lines = 2;
  std::size_t error_max_chars = 4000;
  /// Archive root; each program writes under `<run_dir>/<program_id>/`.
  std::filesystem::path run_dir = "recomp-run";
};

struct RevertEvent {
  int query = 0;
  std::vector<std::string> functions;
};

struct RefinementOutcome {
  std::string program_id;
  RefinementStatus status = RefinementStatus::CompileBudgetExhausted;
  int queries_used = 0;
  /// Query ordinal at which the program first passed every test; 0 when it
  /// passed without any query.
  std::optional<int> success_at;
  SourceUnit final_unit;
  Transcript transcript;
  /// Every verdict produced, in execution order.
  std::vector<TestVerdict> verdict_log;
  /// Verdicts of the last test run.
  std::vector<TestVerdict> final_verdicts;
  std::vector<RevertEvent> reverts;
  int extraction_failures = 0;
  int history_truncations = 0;
  bool sanitizer_triggered = false;
  std::optional<int> bucket;
  std::size_t source_tokens = 0;
};

/// Runs preprocessing, admission, the compile-repair loop and the
/// test-repair loop for one program. Program-level failures become statuses;
/// InfrastructureError propagates.
RefinementOutcome refine(const ProgramEntry& entry, CompletionBackend& backend, const PipelineConfig& config);

/// Rule-only baseline: apply_decrule, compile with the sanitizer, run tests.
RefinementOutcome run_baseline(const ProgramEntry& entry, const std::optional<std::string>& header_hint,
                               const PipelineConfig& config);

}  // namespace recomp
