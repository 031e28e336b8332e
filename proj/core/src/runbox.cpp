#include "recomp/runbox.hpp"

#include <fstream>

#include "recomp/error.hpp"
#include "recomp/process.hpp"
#include "recomp/text.hpp"

namespace recomp {
namespace fs = std::filesystem;

std::string_view to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Pass: return "Pass";
    case VerdictStatus::OutputMismatch: return "OutputMismatch";
    case VerdictStatus::SanitizerAbort: return "SanitizerAbort";
    case VerdictStatus::Crash: return "Crash";
    case VerdictStatus::Timeout: return "Timeout";
  }
  return "Crash";
}

std::optional<VerdictStatus> parse_verdict_status(std::string_view s) {
  for (auto v : {VerdictStatus::Pass, VerdictStatus::OutputMismatch, VerdictStatus::SanitizerAbort,
                 VerdictStatus::Crash, VerdictStatus::Timeout})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::string normalize_trailing_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const auto& l : text::split_lines(text)) {
    out.append(text::trim_right(text.substr(l.offset, l.length)));
    out.push_back('\n');
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

bool compare_output(std::string_view actual, std::string_view expected, CompareMode mode) {
  if (mode == CompareMode::Exact) return actual == expected;
  return normalize_trailing_whitespace(actual) == normalize_trailing_whitespace(expected);
}

std::vector<TestVerdict> run_tests(const fs::path& binary, const std::vector<TestCase>& cases,
                                   const RunLimits& limits) {
  std::vector<TestVerdict> verdicts;
  fs::path scratch = limits.scratch_dir.empty() ? binary.parent_path() : limits.scratch_dir;
  std::error_code ec;
  fs::create_directories(scratch, ec);
  if (limits.archive_dir) fs::create_directories(*limits.archive_dir, ec);

  for (std::size_t j = 0; j < cases.size(); ++j) {
    const TestCase& tc = cases[j];
    ProcessOptions opts;
    opts.cwd = scratch;
    opts.stdin_text = tc.stdin_text;
    opts.timeout = std::chrono::milliseconds(tc.timeout_ms > 0 ? tc.timeout_ms : 5000);
    opts.stdout_cap = limits.stdout_cap;
    opts.env = {"ASAN_OPTIONS=" + limits.sanitizer_options, "LC_ALL=C"};
    if (!limits.sanitized) opts.address_space_limit = limits.address_space_limit;

    ProcessResult pr = run_process({fs::absolute(binary).string()}, opts);

    TestVerdict v;
    v.case_index = j;
    v.actual_stdout = std::move(pr.stdout_text);
    v.exit_code = pr.exit_code;
    v.term_signal = pr.term_signal;
    if (pr.timed_out) {
      v.status = VerdictStatus::Timeout;
    } else if (has_sanitizer_banner(pr.stderr_text)) {
      v.status = VerdictStatus::SanitizerAbort;
      v.sanitizer = parse_sanitizer_report(pr.stderr_text, limits.source_code, limits.source_name);
      if (limits.archive_dir) {
        std::ofstream out(*limits.archive_dir / ("case" + std::to_string(j) + ".asan.txt"), std::ios::binary);
        out << pr.stderr_text;
      }
    } else if (pr.term_signal || (pr.exit_code && *pr.exit_code != 0)) {
      v.status = VerdictStatus::Crash;
    } else if (compare_output(v.actual_stdout, tc.expected_stdout, tc.compare_mode)) {
      v.status = VerdictStatus::Pass;
    } else {
      v.status = VerdictStatus::OutputMismatch;
    }
    bool failed = v.status != VerdictStatus::Pass;
    verdicts.push_back(std::move(v));
    if (failed && limits.stop_at_first_failure) break;
  }
  return verdicts;
}

}  // namespace recomp
