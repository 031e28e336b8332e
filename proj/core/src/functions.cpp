#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "recomp/error.hpp"
#include "recomp/preprocess.hpp"
#include "recomp/text.hpp"

namespace recomp {
namespace {

// Preprocessor directives (with backslash continuations) are invisible to
// the brace scan, so `#define X {` cannot unbalance it.
std::vector<bool> directive_mask(std::string_view code, const text::LiteralMask& mask) {
  std::vector<bool> out(code.size(), false);
  std::size_t i = 0;
  bool line_start = true;
  while (i < code.size()) {
    if (line_start) {
      std::size_t j = i;
      while (j < code.size() && (code[j] == ' ' || code[j] == '\t')) ++j;
      if (j < code.size() && code[j] == '#' && !mask.masked(j)) {
        std::size_t k = j;
        while (k < code.size()) {
          if (code[k] == '\n' && (k == 0 || code[k - 1] != '\\')) break;
          ++k;
        }
        for (std::size_t m = i; m < k; ++m) out[m] = true;
        i = k;
        continue;
      }
    }
    line_start = code[i] == '\n';
    ++i;
  }
  return out;
}

bool is_keyword_like(std::string_view name) {
  static const std::set<std::string_view> kNonFunctions = {"if",     "for",      "while",    "switch", "catch",
                                                           "return", "sizeof",   "decltype", "alignas",
                                                           "static_assert", "__attribute__", "__declspec"};
  return kNonFunctions.contains(name);
}

// Text between the statement start and an opening brace, with comments and
// literals blanked out.
std::string blank(std::string_view code, const text::LiteralMask& mask, const std::vector<bool>& directives,
                  std::size_t from, std::size_t to) {
  std::string out(code.substr(from, to - from));
  for (std::size_t k = 0; k < out.size(); ++k)
    if (mask.masked(from + k) || directives[from + k]) out[k] = mask.masked(from + k) && !mask.in_comment(from + k) ? '_' : ' ';
  return out;
}

enum class BlockKind { Function, Transparent, Opaque };

struct HeaderInfo {
  BlockKind kind = BlockKind::Opaque;
  std::string name;
  /// Constructor with a member initialiser list; a brace right after an
  /// identifier there is a braced initialiser, not the body.
  bool init_list = false;
};

// '(' opening the parameter list of `operator<sym>(`, or npos.
std::size_t operator_paren(std::string_view h) {
  for (std::size_t p = h.find("operator"); p != std::string_view::npos; p = h.find("operator", p + 1)) {
    if (p > 0 && text::is_ident_char(h[p - 1])) continue;
    std::size_t q = p + 8;
    if (q < h.size() && text::is_ident_char(h[q])) continue;
    while (q < h.size() && std::isspace(static_cast<unsigned char>(h[q]))) ++q;
    if (h.substr(q, 2) == "()") return h.find('(', q + 2);
    q = h.find('(', q);
    return q;
  }
  return std::string_view::npos;
}

bool only_qualifiers(std::string_view rest) {
  rest = text::trim(rest);
  if (rest.empty()) return true;
  // Constructor initialiser list or trailing return type.
  if (rest[0] == ':' && (rest.size() < 2 || rest[1] != ':')) return true;
  if (rest.substr(0, 2) == "->") return true;
  static const std::set<std::string_view> kQualifiers = {"const",    "volatile", "noexcept", "override",
                                                         "final",    "&",        "&&",       "throw",
                                                         "mutable",  "__noreturn"};
  std::size_t i = 0;
  while (i < rest.size()) {
    while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
    if (i >= rest.size()) break;
    if (rest[i] == '(') {
      // noexcept(...) / throw() argument lists
      int depth = 0;
      for (; i < rest.size(); ++i) {
        if (rest[i] == '(') ++depth;
        else if (rest[i] == ')' && --depth == 0) {
          ++i;
          break;
        }
      }
      continue;
    }
    std::size_t j = i;
    if (rest[i] == '&') {
      j = i + 1;
      if (j < rest.size() && rest[j] == '&') ++j;
    } else {
      while (j < rest.size() && text::is_ident_char(rest[j])) ++j;
    }
    if (j == i) return false;
    if (!kQualifiers.contains(rest.substr(i, j - i))) return false;
    i = j;
  }
  return true;
}

HeaderInfo classify(std::string_view header_raw, std::string_view header) {
  HeaderInfo info;
  std::string_view h = text::trim(header);
  std::string_view raw = text::trim(header_raw);
  if (h.empty()) return info;
  if (text::starts_with_word(h, "namespace") || h.find("namespace ") == 0 ||
      (text::starts_with_word(h, "inline") && h.find("namespace") != std::string_view::npos)) {
    info.kind = BlockKind::Transparent;
    return info;
  }
  if (text::starts_with_word(raw, "extern") && (raw.find("\"C\"") != std::string_view::npos ||
                                                raw.find("\"C++\"") != std::string_view::npos)) {
    if (text::trim(raw.substr(6)).size() <= 5) {
      info.kind = BlockKind::Transparent;
      return info;
    }
  }
  if (!h.empty() && h.back() == '=') return info;

  // Locate the parameter list: first '(' outside template angle brackets.
  int angle = 0;
  std::size_t open = operator_paren(h);
  for (std::size_t i = 0; open == std::string_view::npos && i < h.size(); ++i) {
    char c = h[i];
    if (c == '<') {
      if (i + 1 < h.size() && h[i + 1] == '<') {
        ++i;
        continue;
      }
      ++angle;
    } else if (c == '>' && angle > 0) {
      --angle;
    } else if (c == '(' && angle == 0) {
      open = i;
      break;
    } else if (c == ';' || c == '=') {
      return info;
    }
  }
  if (open == std::string_view::npos) return info;

  std::size_t e = open;
  while (e > 0 && std::isspace(static_cast<unsigned char>(h[e - 1]))) --e;
  std::size_t b = e;
  while (b > 0 && (text::is_ident_char(h[b - 1]) || h[b - 1] == ':' || h[b - 1] == '~')) --b;
  std::string name(h.substr(b, e - b));
  if (name.empty() || name == "operator") {
    // operator overloads: `operator<<`, `operator==`, `operator()` ...
    std::size_t op = h.rfind("operator", open);
    if (op == std::string_view::npos) return info;
    // Spaces survive only between identifier characters (`operator new`).
    name.clear();
    std::string_view sym = text::trim(h.substr(op, open - op));
    for (std::size_t k = 0; k < sym.size(); ++k) {
      if (!std::isspace(static_cast<unsigned char>(sym[k]))) {
        name.push_back(sym[k]);
        continue;
      }
      std::size_t n = k;
      while (n < sym.size() && std::isspace(static_cast<unsigned char>(sym[n]))) ++n;
      if (!name.empty() && text::is_ident_char(name.back()) && n < sym.size() && text::is_ident_char(sym[n]))
        name.push_back(' ');
      k = n - 1;
    }
    b = op;
    while (b > 0 && (text::is_ident_char(h[b - 1]) || h[b - 1] == ':')) --b;
    name = std::string(h.substr(b, op - b)) + name;
  }
  if (is_keyword_like(name)) return info;
  // A qualified name like `Foo::bar` keeps its scope; a leading `::` is dropped.
  while (name.size() > 2 && name.substr(0, 2) == "::") name = name.substr(2);

  int depth = 0;
  std::size_t close = std::string_view::npos;
  for (std::size_t i = open; i < h.size(); ++i) {
    if (h[i] == '(') ++depth;
    else if (h[i] == ')' && --depth == 0) {
      close = i;
      break;
    }
  }
  if (close == std::string_view::npos) return info;
  const std::string_view rest = text::trim(h.substr(close + 1));
  if (!only_qualifiers(rest)) return info;
  // Aggregates like `struct S {`: a type keyword with no call-like syntax
  // before the '(' never reaches here, but `struct S s = f(...)` would.
  std::string_view before = text::trim(h.substr(0, b));
  if (!before.empty() && before.back() == '=') return info;

  info.kind = BlockKind::Function;
  info.name = std::move(name);
  info.init_list = !rest.empty() && rest[0] == ':';
  return info;
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : text::trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<FunctionRecord> index_functions(std::string_view code) {
  text::LiteralMask mask(code);
  const auto directives = directive_mask(code, mask);
  auto structural = [&](std::size_t i) { return !mask.masked(i) && !directives[i]; };

  std::vector<FunctionRecord> records;
  // Each open transparent block contributes one level; the scan only looks
  // for definitions at transparent levels.
  int transparent_depth = 0;
  std::size_t stmt_start = 0;
  std::size_t i = 0;
  while (i < code.size()) {
    if (!structural(i)) {
      ++i;
      continue;
    }
    char c = code[i];
    if (c == ';') {
      stmt_start = i + 1;
    } else if (c == '}') {
      if (transparent_depth == 0) throw UnbalancedBraces("unmatched '}' at offset " + std::to_string(i));
      --transparent_depth;
      stmt_start = i + 1;
    } else if (c == '{') {
      std::string header = blank(code, mask, directives, stmt_start, i);
      std::string header_raw(code.substr(stmt_start, i - stmt_start));
      HeaderInfo info = classify(header_raw, header);
      if (info.kind == BlockKind::Transparent) {
        ++transparent_depth;
        stmt_start = i + 1;
        ++i;
        continue;
      }
      // Find the matching close brace.
      int depth = 0;
      std::size_t close = std::string_view::npos;
      for (std::size_t j = i; j < code.size(); ++j) {
        if (!structural(j)) continue;
        if (code[j] == '{') ++depth;
        else if (code[j] == '}' && --depth == 0) {
          close = j;
          break;
        }
      }
      if (close == std::string_view::npos)
        throw UnbalancedBraces("unclosed '{' at offset " + std::to_string(i));
      if (info.kind == BlockKind::Function && info.init_list) {
        std::string_view before = text::trim(header);
        if (!before.empty() && (text::is_ident_char(before.back()) || before.back() == '>')) {
          // `: member{init}` inside the initialiser list; keep scanning.
          i = close + 1;
          continue;
        }
      }
      if (info.kind == BlockKind::Function) {
        FunctionRecord rec;
        rec.name = info.name;
        // The signature starts after any directive lines in the header.
        std::size_t sig_begin = stmt_start;
        while (sig_begin < i && (directives[sig_begin] || mask.in_comment(sig_begin) ||
                                 std::isspace(static_cast<unsigned char>(code[sig_begin]))))
          ++sig_begin;
        rec.signature_text = collapse_ws(code.substr(sig_begin, i - sig_begin));
        rec.body_span = {i, close + 1};
        bool empty = true;
        for (std::size_t k = i + 1; k < close && empty; ++k) {
          if (mask.in_comment(k) || directives[k]) continue;
          if (!std::isspace(static_cast<unsigned char>(code[k]))) empty = false;
        }
        rec.body_is_empty_or_missing = empty;
        records.push_back(std::move(rec));
      }
      i = close + 1;
      stmt_start = i;
      continue;
    }
    ++i;
  }
  if (transparent_depth != 0) throw UnbalancedBraces("unclosed namespace or linkage block");
  return records;
}

std::vector<std::string> stripped_functions(const std::vector<FunctionRecord>& previous,
                                            const std::vector<FunctionRecord>& candidate, const RuleSet& rules) {
  std::vector<std::regex> exempt;
  for (const auto& p : rules.guard_exempt) exempt.emplace_back(p, std::regex::ECMAScript);
  auto is_exempt = [&](const std::string& name) {
    return std::any_of(exempt.begin(), exempt.end(), [&](const std::regex& re) { return std::regex_search(name, re); });
  };

  std::set<std::string> alive;
  for (const auto& r : candidate)
    if (!r.body_is_empty_or_missing) alive.insert(r.name);

  std::set<std::string> lost;
  for (const auto& r : previous) {
    if (r.body_is_empty_or_missing || is_exempt(r.name)) continue;
    if (!alive.contains(r.name)) lost.insert(r.name);
  }
  return {lost.begin(), lost.end()};
}

}  // namespace recomp
