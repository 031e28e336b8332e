#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recomp {

enum class CompareMode { Exact, TrailingWhitespaceNormalized };

struct TestCase {
  std::string stdin_text;
  std::string expected_stdout;
  int timeout_ms = 5000;
  CompareMode compare_mode = CompareMode::TrailingWhitespaceNormalized;

  bool operator==(const TestCase&) const = default;
};

struct ProgramEntry {
  std::string id;
  std::filesystem::path pseudocode_path;
  std::vector<TestCase> test_cases;
  std::size_t source_tokens = 0;
  std::optional<int> bucket;
  /// Set by bucket_by_context when source_tokens falls outside the range.
  bool out_of_range = false;
  /// Optional per-entry include/using prelude for the rule-only baseline.
  std::optional<std::string> header_hint;
  /// Non-fatal problems found while loading (e.g. invalid UTF-8 replaced).
  std::vector<std::string> load_warnings;

  bool operator==(const ProgramEntry&) const = default;
};

using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view text);

/// Replaces invalid UTF-8 sequences with U+FFFD. Returns true when any
/// replacement happened.
bool sanitize_utf8(std::string& text);

/// Reads a text file as UTF-8, replacing undecodable bytes. Throws
/// MissingArtifact when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path, bool* had_invalid_utf8 = nullptr);

/// Loads a manifest: a JSON array of {"id", "pseudocode", "tests": [...]}.
/// Paths are resolved against the manifest's directory. source_tokens is
/// computed with `estimator` (default: estimate_tokens).
std::vector<ProgramEntry> load_manifest(const std::filesystem::path& path, const TokenEstimator& estimator = {});

/// Writes entries back in manifest form, with pseudocode paths relative to
/// the manifest's directory when possible.
void save_manifest(const std::vector<ProgramEntry>& entries, const std::filesystem::path& path);

struct BucketRange {
  long lo = 200;
  long hi = 2048;
  int k = 5;
};

/// Parses "LO:HI:K". Throws InvalidRange.
BucketRange parse_bucket_range(std::string_view spec);

/// Bucket index for a token count, or nullopt outside [lo, hi).
std::optional<int> bucket_index(std::size_t tokens, const BucketRange& range);

/// Inclusive lower token bound of bucket i (the smallest t mapped to i).
long bucket_lower_bound(int i, const BucketRange& range);

/// Assigns buckets in place order-preservingly; out-of-range entries are left
/// unassigned and flagged. Throws InvalidRange for lo >= hi or k < 1.
std::vector<ProgramEntry> bucket_by_context(std::vector<ProgramEntry> entries, const BucketRange& range);

}  // namespace recomp
