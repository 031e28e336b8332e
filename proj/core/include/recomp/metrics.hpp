#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recomp/corpus.hpp"
#include "recomp/pipeline.hpp"

namespace recomp {

/// One line of outcomes.jsonl: a RefinementOutcome without source text,
/// transcript or timings, so identical runs serialize identically.
struct OutcomeRecord {
  std::string program_id;
  RefinementStatus status = RefinementStatus::CompileBudgetExhausted;
  int queries_used = 0;
  std::optional<int> success_at;
  std::optional<int> bucket;
  std::size_t source_tokens = 0;
  int revert_events = 0;
  int extraction_failures = 0;
  int history_truncations = 0;
  bool sanitizer_triggered = false;
  std::string final_origin;
  /// Status of each verdict in the last test run.
  std::vector<std::string> final_verdicts;

  bool operator==(const OutcomeRecord&) const = default;
};

OutcomeRecord to_record(const RefinementOutcome& outcome);
/// Single-line JSON with a fixed key order.
std::string to_json_line(const OutcomeRecord& record);
/// Throws OutcomeParseError.
OutcomeRecord parse_record(std::string_view line);
/// Blank lines are skipped. Throws MissingArtifact, OutcomeParseError.
std::vector<OutcomeRecord> read_outcomes(const std::filesystem::path& path);
void write_outcomes(const std::filesystem::path& path, const std::vector<OutcomeRecord>& records);

struct ThresholdStat {
  std::size_t count = 0;
  /// count / total, rounded to 4 decimal places.
  double rate = 0;
  bool operator==(const ThresholdStat&) const = default;
};

struct RunReport {
  std::size_t total_programs = 0;
  std::map<int, ThresholdStat> success_at_c;
  /// Functional programs (success_at within the largest threshold) per
  /// bucket; key -1 collects programs outside the bucket range.
  std::map<int, std::size_t> bucket_success;
  std::size_t revert_events = 0;
  std::size_t sanitizer_triggered = 0;
  std::size_t sanitizer_fixed = 0;
  bool operator==(const RunReport&) const = default;
};

inline const std::vector<int> kDefaultThresholds = {1, 5, 10, 15};

/// Buckets come from `entries`; every bucket present among the entries gets
/// a row. Throws MismatchedRecords unless records and entries pair up one to
/// one by program id.
RunReport aggregate(const std::vector<OutcomeRecord>& records, const std::vector<ProgramEntry>& entries,
                    const std::vector<int>& thresholds);
/// Same, using the bucket stored in each record.
RunReport aggregate(const std::vector<OutcomeRecord>& records, const std::vector<int>& thresholds);

enum class ReportFormat { Json, Csv, Text };

std::string emit_report(const RunReport& report, ReportFormat format);
/// Inverse of emit_report(…, Json). Throws OutcomeParseError.
RunReport parse_report_json(std::string_view text);

}  // namespace recomp
