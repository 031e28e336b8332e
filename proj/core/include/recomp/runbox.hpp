#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recomp/corpus.hpp"

namespace recomp {

enum class VerdictStatus { Pass, OutputMismatch, SanitizerAbort, Crash, Timeout };

std::string_view to_string(VerdictStatus s);
std::optional<VerdictStatus> parse_verdict_status(std::string_view s);

struct StackFrame {
  std::string function;
  std::string file;
  std::optional<int> line;

  bool operator==(const StackFrame&) const = default;
};

struct SanitizerReport {
  std::string kind;
  std::optional<std::string> faulting_statement;
  std::optional<int> faulting_line;
  std::vector<StackFrame> frames;
  std::string raw_text;

  bool operator==(const SanitizerReport&) const = default;
};

struct TestVerdict {
  std::size_t case_index = 0;
  VerdictStatus status = VerdictStatus::Pass;
  std::string actual_stdout;
  std::optional<SanitizerReport> sanitizer;
  std::optional<int> exit_code;
  std::optional<int> term_signal;
};

struct RunLimits {
  std::size_t stdout_cap = 1 << 20;
  /// RLIMIT_AS in bytes for non-sanitized binaries; 0 disables. The
  /// sanitizer runtime reserves terabytes of shadow memory, so the limit is
  /// never applied when `sanitized` is set.
  std::size_t address_space_limit = 0;
  bool sanitized = true;
  std::string sanitizer_options = "halt_on_error=1:abort_on_error=0:detect_leaks=0:symbolize=1:color=never";
  /// Stop at the first non-Pass verdict (the repair loop fixes one defect
  /// at a time).
  bool stop_at_first_failure = true;
  /// Working directory for the test processes; relative writes land here.
  std::filesystem::path scratch_dir;
  /// When set, raw sanitizer reports are written to `case<j>.asan.txt` here.
  std::optional<std::filesystem::path> archive_dir;
  /// Source text used to resolve the faulting statement.
  std::string source_code;
  /// File name the binary was compiled from, for matching report frames.
  std::string source_name = "candidate.c";
};

/// Runs each case with its stdin piped in. Throws ExecError when the binary
/// cannot be spawned.
std::vector<TestVerdict> run_tests(const std::filesystem::path& binary, const std::vector<TestCase>& cases,
                                   const RunLimits& limits);

/// Exact: byte equality. Normalized: trailing whitespace stripped from every
/// line and trailing blank lines dropped before comparing.
bool compare_output(std::string_view actual, std::string_view expected, CompareMode mode);

std::string normalize_trailing_whitespace(std::string_view text);

/// True when the text carries a sanitizer error banner.
bool has_sanitizer_banner(std::string_view text);

/// Parses the first sanitizer report in `raw`. The faulting statement is
/// the source line of the first frame in `source_name` (any non-runtime
/// frame when source_name is empty) whose line lies inside `code`. Throws
/// NotASanitizerReport.
SanitizerReport parse_sanitizer_report(std::string_view raw, std::string_view code,
                                       std::string_view source_name = {});

}  // namespace recomp
