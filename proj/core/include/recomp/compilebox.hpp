#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recomp/preprocess.hpp"

namespace recomp {

enum class Severity { Error, Warning, Note };

std::string_view to_string(Severity s);

struct Diagnostic {
  Severity severity = Severity::Error;
  /// Normalized: no file names, no absolute paths, continuation text folded in.
  std::string message;
  std::optional<int> line;
  std::optional<int> column;
  /// Source excerpt, filled by attach_excerpts().
  std::optional<std::string> excerpt;

  bool operator==(const Diagnostic&) const = default;
};

struct CompilerConfig {
  std::string path = "g++";
  std::vector<std::string> base_flags = {"-std=gnu++17", "-Wall", "-O0"};
  std::vector<std::string> sanitize_flags = {"-fsanitize=address", "-fno-omit-frame-pointer", "-g"};
  int timeout_ms = 60000;
  /// Language forced on the source file; candidate files are written as
  /// `candidate.c` but compiled as C++.
  std::string language = "c++";
};

struct CompileRequest {
  SourceUnit unit;
  bool sanitize = false;
  std::vector<std::string> extra_flags;
  std::filesystem::path workdir;
  int time_limit_ms = 60000;
};

struct CompileResult {
  bool success = false;
  std::optional<std::filesystem::path> binary_path;
  std::vector<Diagnostic> diagnostics;
  std::string raw_stderr;
  long duration_ms = 0;

  std::size_t error_count() const;
};

/// Writes the unit to `<workdir>/candidate.c` and compiles it to
/// `<workdir>/candidate`. Throws CompilerNotFound, CompileTimeout,
/// WorkdirError.
CompileResult compile(const CompileRequest& request, const CompilerConfig& config = {});

/// Replaces absolute paths with their final component and drops any
/// `<workdir>/` prefix.
std::string normalize_message(std::string_view message);

/// Parses GCC/Clang-style stderr. Lines that cannot be attached to a
/// diagnostic land in `unstructured` when it is non-null.
std::vector<Diagnostic> parse_diagnostics(std::string_view raw_stderr,
                                          std::vector<std::string>* unstructured = nullptr);

/// Fills each diagnostic's excerpt with its source line +- context_lines.
void attach_excerpts(std::vector<Diagnostic>& diags, std::string_view code, int context_lines);

inline constexpr std::string_view kTruncationMarker = "\n[... truncated]";

/// Error feedback for a repair prompt: each Error message followed by its
/// source line and `context_lines` of surrounding code (offending line marked
/// with "> "). Ordered by (line, column, message); diagnostics without a line
/// sort last. Capped at max_chars, ending in kTruncationMarker when cut.
std::string render_error_context(const std::vector<Diagnostic>& diags, std::string_view code, int context_lines = 2,
                                 std::size_t max_chars = 4000);

}  // namespace recomp
