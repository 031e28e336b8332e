#include "recomp/preprocess.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "recomp/text.hpp"

namespace recomp {
namespace {

using text::Line;
using text::LiteralMask;

// Line-structure view of a code string used by the statement-removal rules.
class LineModel {
 public:
  explicit LineModel(std::string_view code) : code_(code), mask_(code), lines_(text::split_lines(code)) {
    stripped_.reserve(lines_.size());
    for (const auto& l : lines_) stripped_.push_back(std::string(text::trim(text::code_only(code_, mask_, l))));
  }

  std::size_t size() const { return lines_.size(); }
  const Line& line(std::size_t i) const { return lines_[i]; }
  std::string_view raw(std::size_t i) const { return code_.substr(lines_[i].offset, lines_[i].length); }
  /// Line text with comments blanked and literals replaced, trimmed.
  const std::string& structural(std::size_t i) const { return stripped_[i]; }
  const LiteralMask& mask() const { return mask_; }

  bool significant(std::size_t i) const {
    const auto& s = stripped_[i];
    return !s.empty() && s[0] != '#';
  }

  std::optional<std::size_t> next_significant(std::size_t i) const {
    for (std::size_t j = i + 1; j < lines_.size(); ++j)
      if (significant(j)) return j;
    return std::nullopt;
  }

  std::optional<std::size_t> prev_significant(std::size_t i) const {
    for (std::size_t j = i; j-- > 0;)
      if (significant(j)) return j;
    return std::nullopt;
  }

  int brace_delta(std::size_t i) const {
    int d = 0;
    for (char c : stripped_[i]) {
      if (c == '{') ++d;
      else if (c == '}') --d;
    }
    return d;
  }

  bool is_control_header(std::size_t i) const {
    const auto& s = stripped_[i];
    if (s.empty()) return false;
    if (s == "else" || s == "do") return true;
    bool keyword = text::starts_with_word(s, "if") || text::starts_with_word(s, "while") ||
                   text::starts_with_word(s, "for") || text::starts_with_word(s, "else") ||
                   text::starts_with_word(s, "switch");
    return keyword && s.back() == ')';
  }

  std::size_t block_end(std::size_t i) const {
    int depth = 0;
    for (std::size_t j = i; j < lines_.size(); ++j) {
      depth += brace_delta(j);
      if (depth <= 0 && j > i) return j;
      if (depth <= 0 && j == i && stripped_[j].find('{') != std::string::npos) return j;
    }
    return lines_.size() - 1;
  }

  /// Last line of the statement that starts at line i.
  std::size_t statement_end(std::size_t i, int guard = 0) const {
    const auto& s = stripped_[i];
    if (guard > 8) return i;
    if (brace_delta(i) > 0) return block_end(i);
    if (s.empty() || s.back() == ';' || s.back() == '}' || s.back() == '{') return i;
    if (is_control_header(i)) {
      auto next = next_significant(i);
      return next ? statement_end(*next, guard + 1) : i;
    }
    auto next = next_significant(i);
    if (!next) return i;
    if (!stripped_[*next].empty() && stripped_[*next][0] == '{') return block_end(*next);
    // A statement wrapped over several lines: run to the terminating ';'
    // without crossing a brace.
    for (std::size_t j = i + 1; j < lines_.size(); ++j) {
      const auto& t = stripped_[j];
      if (t.find('{') != std::string::npos || t.find('}') != std::string::npos) return j - 1;
      if (!t.empty() && t.back() == ';') return j;
    }
    return i;
  }

 private:
  std::string_view code_;
  LiteralMask mask_;
  std::vector<Line> lines_;
  std::vector<std::string> stripped_;
};

struct Removal {
  std::size_t first;
  std::size_t last;
  bool replace_with_empty_statement = false;
};

// Drops the statements beginning at `hits` (sorted line indices). A removed
// statement that was the sole body of an unbraced `if`/`for`/`while` takes
// its header along, unless an `else` follows, in which case an empty
// statement stands in for it. A removed `if` leaves its `else` branch in
// place as an unconditional statement. A blank line left directly after an
// opening brace goes too.
std::string remove_statements(std::string_view code, const LineModel& model, const std::vector<std::size_t>& hits) {
  if (hits.empty()) return std::string(code);
  std::vector<Removal> removals;
  std::set<std::size_t> unwrapped_else;
  std::size_t covered_until = 0;
  bool any = false;
  for (std::size_t hit : hits) {
    if (any && hit <= covered_until) continue;
    Removal r{hit, model.statement_end(hit)};
    for (;;) {
      auto prev = model.prev_significant(r.first);
      if (!prev || (any && *prev <= covered_until) || !model.is_control_header(*prev)) break;
      const auto& header = model.structural(*prev);
      auto after = model.next_significant(r.last);
      bool else_follows = after && text::starts_with_word(model.structural(*after), "else");
      bool plain_header = text::starts_with_word(header, "if") || text::starts_with_word(header, "for") ||
                          text::starts_with_word(header, "while");
      if (plain_header && !else_follows) {
        r.first = *prev;
        continue;
      }
      r.replace_with_empty_statement = true;
      break;
    }
    removals.push_back(r);
    covered_until = r.last;
    any = true;
    if (!r.replace_with_empty_statement && text::starts_with_word(model.structural(r.first), "if")) {
      auto after = model.next_significant(r.last);
      if (after && text::starts_with_word(model.structural(*after), "else")) unwrapped_else.insert(*after);
    }
  }

  auto blank = [&](std::size_t i) { return i < model.size() && text::trim(model.raw(i)).empty(); };
  std::string out;
  out.reserve(code.size());
  std::optional<std::size_t> last_kept;
  std::size_t ri = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (ri < removals.size() && i == removals[ri].first) {
      const Removal& r = removals[ri];
      i = r.last;
      ++ri;
      if (r.replace_with_empty_statement) {
        std::string_view raw = model.raw(r.first);
        std::size_t indent = raw.find_first_not_of(" \t");
        out.append(raw.substr(0, indent == std::string_view::npos ? raw.size() : indent));
        out.append(";\n");
        last_kept.reset();
      } else if (last_kept && !model.structural(*last_kept).empty() &&
                 model.structural(*last_kept).back() == '{' && blank(i + 1) &&
                 !(ri < removals.size() && removals[ri].first == i + 1)) {
        ++i;
      }
      continue;
    }
    const Line& l = model.line(i);
    std::string_view text = code.substr(l.offset, l.end_with_newline() - l.offset);
    if (unwrapped_else.count(i)) {
      if (model.structural(i) == "else") continue;
      std::size_t indent = text.find_first_not_of(" \t");
      std::size_t kw = text.find("else", indent);
      std::size_t rest = text.find_first_not_of(" \t", kw + 4);
      out.append(text.substr(0, indent));
      out.append(text.substr(rest == std::string_view::npos ? text.size() : rest));
      last_kept = i;
      continue;
    }
    out.append(text);
    if (!blank(i)) last_kept = i;
  }
  return out;
}

std::vector<std::regex> compile_all(const std::vector<std::string>& patterns) {
  std::vector<std::regex> out;
  out.reserve(patterns.size());
  for (const auto& p : patterns) out.emplace_back(p, std::regex::ECMAScript);
  return out;
}

// Offset of the first non-blank byte at or after `pos` within the line.
std::size_t first_visible(std::string_view code, std::size_t pos, std::size_t end) {
  while (pos < end && (code[pos] == ' ' || code[pos] == '\t')) ++pos;
  return pos;
}

}  // namespace

std::string to_string(const Origin& origin) {
  switch (origin.kind) {
    case OriginKind::Decompiler: return "decompiler";
    case OriginKind::Preprocessed: return "preprocessed";
    case OriginKind::LlmIteration: return "llm-iteration-" + std::to_string(origin.iteration);
    case OriginKind::BaselineFixed: return "baseline-fixed";
  }
  return "unknown";
}

SourceUnit strip_elf_runtime_symbols(SourceUnit unit, const RuleSet& rules) {
  if (unit.code.empty() || rules.elf_symbols.empty()) return unit;
  LineModel model(unit.code);
  std::set<std::size_t> hit_lines;
  for (const auto& sym : rules.elf_symbols) {
    for (std::size_t off : text::find_identifier(unit.code, model.mask(), sym)) {
      for (std::size_t i = 0; i < model.size(); ++i) {
        if (off >= model.line(i).offset && off < model.line(i).end_with_newline()) {
          hit_lines.insert(i);
          break;
        }
      }
    }
  }
  if (hit_lines.empty()) return unit;
  unit.code = remove_statements(unit.code, model, {hit_lines.begin(), hit_lines.end()});
  unit.function_index.clear();
  return unit;
}

SourceUnit strip_security_checks(SourceUnit unit, const RuleSet& rules) {
  if (unit.code.empty() || rules.canary_patterns.empty()) return unit;
  const auto patterns = compile_all(rules.canary_patterns);
  LineModel model(unit.code);
  std::set<std::size_t> hit_lines;
  std::set<std::string> guard_vars;
  for (std::size_t i = 0; i < model.size(); ++i) {
    std::string_view raw = model.raw(i);
    std::string line(raw);
    for (const auto& re : patterns) {
      std::smatch m;
      if (!std::regex_search(line, m, re)) continue;
      std::size_t start = first_visible(unit.code, model.line(i).offset + static_cast<std::size_t>(m.position(0)),
                                        model.line(i).end());
      if (model.mask().masked(start)) continue;
      hit_lines.insert(i);
      if (m.size() > 1 && m[1].matched) guard_vars.insert(m[1].str());
    }
  }
  if (hit_lines.empty()) return unit;

  std::string code = remove_statements(unit.code, model, {hit_lines.begin(), hit_lines.end()});

  // A guard variable left with only its declaration loses that too.
  for (const auto& var : guard_vars) {
    LineModel after(code);
    auto uses = text::find_identifier(code, after.mask(), var);
    if (uses.size() != 1) continue;
    const std::regex decl("^[A-Za-z_][\\w\\s\\*]*\\b" + var + "\\s*;$");
    for (std::size_t i = 0; i < after.size(); ++i) {
      if (uses[0] < after.line(i).offset || uses[0] >= after.line(i).end_with_newline()) continue;
      if (std::regex_match(after.structural(i), decl)) code = remove_statements(code, after, {i});
      break;
    }
  }
  unit.code = std::move(code);
  unit.function_index.clear();
  return unit;
}

namespace {

struct Param {
  std::string text;
  std::string name;
};

std::vector<Param> split_params(std::string_view params) {
  std::vector<Param> out;
  std::string_view t = text::trim(params);
  if (t.empty() || t == "void") return out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    if (i < t.size() && (t[i] == '(' || t[i] == '<' || t[i] == '[')) ++depth;
    if (i < t.size() && (t[i] == ')' || t[i] == '>' || t[i] == ']')) --depth;
    if (i == t.size() || (t[i] == ',' && depth == 0)) {
      std::string_view p = text::trim(t.substr(start, i - start));
      Param param{std::string(p), {}};
      std::size_t e = p.size();
      while (e > 0 && !text::is_ident_char(p[e - 1])) --e;
      std::size_t b = e;
      while (b > 0 && text::is_ident_char(p[b - 1])) --b;
      std::string_view name = p.substr(b, e - b);
      // A lone type such as "int" or "char **" has no parameter name.
      static const std::set<std::string_view> kTypeWords = {"int", "char", "void", "long", "short", "unsigned",
                                                            "signed", "const", "__int64", "_DWORD", "_QWORD"};
      if (!name.empty() && !kTypeWords.contains(name) && b > 0) param.name = std::string(name);
      out.push_back(std::move(param));
      start = i + 1;
    }
  }
  return out;
}

std::optional<Span> find_body_after(std::string_view code, const LiteralMask& mask, std::size_t from) {
  std::size_t open = std::string_view::npos;
  for (std::size_t i = from; i < code.size(); ++i) {
    if (mask.masked(i)) continue;
    if (code[i] == ';') return std::nullopt;
    if (code[i] == '{') {
      open = i;
      break;
    }
  }
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  for (std::size_t i = open; i < code.size(); ++i) {
    if (mask.masked(i)) continue;
    if (code[i] == '{') ++depth;
    else if (code[i] == '}' && --depth == 0) return Span{open, i + 1};
  }
  return Span{open, code.size()};
}

std::string rename_identifiers(std::string_view code, const LiteralMask& mask, Span span,
                               const std::vector<std::pair<std::string, std::string>>& renames) {
  std::string out(code.substr(0, span.begin));
  std::size_t i = span.begin;
  while (i < span.end) {
    if (!mask.masked(i) && text::is_ident_char(code[i]) && (i == 0 || !text::is_ident_char(code[i - 1]))) {
      std::size_t j = i;
      while (j < code.size() && text::is_ident_char(code[j])) ++j;
      std::string_view word = code.substr(i, j - i);
      bool replaced = false;
      for (const auto& [from, to] : renames) {
        if (word == from) {
          out += to;
          replaced = true;
          break;
        }
      }
      if (!replaced) out.append(word);
      i = j;
      continue;
    }
    out.push_back(code[i]);
    ++i;
  }
  out.append(code.substr(span.end));
  return out;
}

bool mentions(std::string_view code, const LiteralMask& mask, Span span, const std::string& name) {
  for (std::size_t off : text::find_identifier(code, mask, name))
    if (off >= span.begin && off < span.end) return true;
  return false;
}

// Rewrites the top-level `main` prototype whose name sits at `main_off`.
// Returns true when the code changed.
bool rewrite_main(std::string& code, std::size_t main_off) {
  LiteralMask mask(code);
  std::size_t line_start = code.rfind('\n', main_off);
  line_start = line_start == std::string::npos ? 0 : line_start + 1;
  std::size_t open = code.find('(', main_off);
  if (open == std::string::npos) return false;
  int depth = 0;
  std::size_t close = std::string::npos;
  for (std::size_t i = open; i < code.size(); ++i) {
    if (mask.masked(i)) continue;
    if (code[i] == '(') ++depth;
    else if (code[i] == ')' && --depth == 0) {
      close = i;
      break;
    }
  }
  if (close == std::string::npos) return false;

  std::string_view prefix = std::string_view(code).substr(line_start, main_off - line_start);
  std::size_t indent_end = prefix.find_first_not_of(" \t");
  std::string indent(prefix.substr(0, indent_end == std::string_view::npos ? prefix.size() : indent_end));
  std::string_view ret = text::trim(prefix);
  // Only rewrite things that look like a declaration of main (a return type
  // made of identifier/pointer tokens), never a call.
  if (ret.empty()) return false;
  for (char c : ret)
    if (!(text::is_ident_char(c) || c == ' ' || c == '\t' || c == '*')) return false;

  auto params = split_params(std::string_view(code).substr(open + 1, close - open - 1));
  auto body = find_body_after(code, mask, close + 1);

  std::vector<std::pair<std::string, std::string>> renames;
  std::string canonical;
  if (params.empty()) {
    canonical = "int main()";
  } else {
    static const char* kNames[] = {"argc", "argv", "envp"};
    static const char* kTypes[] = {"int argc", "char **argv", "char **envp"};
    std::size_t keep = std::min<std::size_t>(params.size(), 2);
    if (params.size() >= 3 && !params[2].name.empty() && body && mentions(code, mask, *body, params[2].name))
      keep = 3;
    canonical = "int main(";
    for (std::size_t k = 0; k < keep; ++k) {
      if (k) canonical += ", ";
      canonical += kTypes[k];
      const std::string& old = params[k].name;
      if (!old.empty() && old != kNames[k]) {
        // Renaming onto an identifier the body already uses would change
        // meaning; keep the prototype as-is then.
        if (body && mentions(code, mask, *body, kNames[k])) return false;
        renames.emplace_back(old, kNames[k]);
      }
    }
    canonical += ")";
  }

  std::string current = code.substr(line_start, close + 1 - line_start);
  std::string replacement = indent + canonical;
  if (current == replacement) return false;

  std::string out;
  if (body && !renames.empty()) {
    std::string renamed = rename_identifiers(code, mask, *body, renames);
    code = std::move(renamed);
  }
  out = code.substr(0, line_start) + replacement + code.substr(close + 1);
  code = std::move(out);
  return true;
}

}  // namespace

SourceUnit fix_declarations(SourceUnit unit, const RuleSet& rules) {
  if (unit.code.empty()) return unit;
  std::string code = unit.code;

  // Calling-convention keywords, plus IDA's `@<reg>` argument locations that
  // accompany __usercall.
  {
    LiteralMask mask(code);
    std::vector<Span> cuts;
    for (const auto& cc : rules.calling_conventions) {
      for (std::size_t off : text::find_identifier(code, mask, cc)) {
        std::size_t end = off + cc.size();
        while (end < code.size() && (code[end] == ' ' || code[end] == '\t')) ++end;
        cuts.push_back({off, end});
      }
    }
    for (std::size_t pos = code.find("@<"); pos != std::string::npos; pos = code.find("@<", pos + 1)) {
      if (mask.masked(pos)) continue;
      std::size_t close = code.find('>', pos);
      std::size_t nl = code.find('\n', pos);
      if (close == std::string::npos || (nl != std::string::npos && close > nl)) continue;
      cuts.push_back({pos, close + 1});
    }
    std::sort(cuts.begin(), cuts.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
    std::string out;
    std::size_t cursor = 0;
    for (const auto& c : cuts) {
      if (c.begin < cursor) continue;
      out.append(code, cursor, c.begin - cursor);
      cursor = c.end;
    }
    out.append(code, cursor);
    code = std::move(out);
  }

  // Top-level `main` prototypes. Offsets shift after each rewrite, so rescan.
  for (int guard = 0; guard < 16; ++guard) {
    LiteralMask mask(code);
    bool changed = false;
    int depth = 0;
    auto hits = text::find_identifier(code, mask, "main");
    std::size_t scanned = 0;
    for (std::size_t off : hits) {
      for (; scanned < off; ++scanned) {
        if (mask.masked(scanned)) continue;
        if (code[scanned] == '{') ++depth;
        else if (code[scanned] == '}') --depth;
      }
      if (depth != 0) continue;
      std::size_t after = off + 4;
      while (after < code.size() && (code[after] == ' ' || code[after] == '\t')) ++after;
      if (after >= code.size() || code[after] != '(') continue;
      if (rewrite_main(code, off)) {
        changed = true;
        break;
      }
    }
    if (!changed) break;
  }

  if (code != unit.code) {
    unit.code = std::move(code);
    unit.function_index.clear();
  }
  return unit;
}

SourceUnit preprocess(SourceUnit unit, const RuleSet& rules) {
  unit = strip_elf_runtime_symbols(std::move(unit), rules);
  unit = strip_security_checks(std::move(unit), rules);
  unit = fix_declarations(std::move(unit), rules);
  unit.origin = {OriginKind::Preprocessed, 0};
  return unit;
}

SourceUnit apply_decrule(SourceUnit unit, const std::optional<std::string>& header_hint, const RuleSet& rules) {
  unit = preprocess(std::move(unit), rules);
  if (header_hint && !header_hint->empty()) {
    std::string prefix = *header_hint;
    if (prefix.back() != '\n') prefix.push_back('\n');
    if (unit.code.compare(0, prefix.size(), prefix) != 0) unit.code = prefix + unit.code;
  }
  unit.origin = {OriginKind::BaselineFixed, 0};
  unit.function_index.clear();
  return unit;
}

}  // namespace recomp
