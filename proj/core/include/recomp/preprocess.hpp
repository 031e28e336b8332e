#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recomp {

enum class OriginKind { Decompiler, Preprocessed, LlmIteration, BaselineFixed };

struct Origin {
  OriginKind kind = OriginKind::Decompiler;
  /// Query ordinal for LlmIteration; 0 otherwise.
  int iteration = 0;

  static Origin llm(int k) { return {OriginKind::LlmIteration, k}; }
  bool operator==(const Origin&) const = default;
};

std::string to_string(const Origin& origin);

/// Byte interval [begin, end) into the owning code string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct FunctionRecord {
  std::string name;
  std::string signature_text;
  /// From the opening brace through the closing brace, inclusive.
  Span body_span;
  bool body_is_empty_or_missing = false;

  bool operator==(const FunctionRecord&) const = default;
};

struct SourceUnit {
  std::string program_id;
  std::string code;
  Origin origin;
  /// Cache of index_functions(code); may be stale, never authoritative.
  std::vector<FunctionRecord> function_index;
};

/// Pattern configuration for the cleanup rules.
struct RuleSet {
  /// Identifiers; any statement mentioning one is dropped.
  std::vector<std::string> elf_symbols;
  /// Annotation keywords removed from declarations.
  std::vector<std::string> calling_conventions;
  /// ECMAScript regexes matched per line. A first capture group, when
  /// present, names the guard variable whose declaration is dropped too.
  std::vector<std::string> canary_patterns;
  /// Regexes over function names that the strip guard never protects.
  std::vector<std::string> guard_exempt;

  bool operator==(const RuleSet&) const = default;
};

/// The built-in rule configuration (also shipped as default_rules.json).
const RuleSet& default_rules();
std::string_view default_rules_json();
RuleSet parse_rules_json(std::string_view json_text);
/// Loads a rules file; missing arrays fall back to the defaults.
RuleSet load_rules(const std::filesystem::path& path);

// Cleanup rules. Each is idempotent and preserves every byte it does not
// remove or rewrite.
SourceUnit strip_elf_runtime_symbols(SourceUnit unit, const RuleSet& rules = default_rules());
SourceUnit strip_security_checks(SourceUnit unit, const RuleSet& rules = default_rules());
SourceUnit fix_declarations(SourceUnit unit, const RuleSet& rules = default_rules());

/// Symbol, canary and declaration rules in sequence; origin Preprocessed.
SourceUnit preprocess(SourceUnit unit, const RuleSet& rules = default_rules());

/// Rule-only baseline: the three rules, then `header_hint` prepended.
SourceUnit apply_decrule(SourceUnit unit, const std::optional<std::string>& header_hint,
                         const RuleSet& rules = default_rules());

/// Top-level function definitions found by a brace-balance scan. Bodies of
/// namespaces and extern "C" blocks are searched; class bodies are not.
/// Throws UnbalancedBraces.
std::vector<FunctionRecord> index_functions(std::string_view code);

/// Names of functions that had a nonempty body in `previous` but are absent
/// or empty-bodied in `candidate`, skipping names matched by
/// rules.guard_exempt. Sorted, unique.
std::vector<std::string> stripped_functions(const std::vector<FunctionRecord>& previous,
                                            const std::vector<FunctionRecord>& candidate,
                                            const RuleSet& rules = default_rules());

}  // namespace recomp
