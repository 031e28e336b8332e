#include <algorithm>
#include <regex>

#include "recomp/compilebox.hpp"
#include "recomp/text.hpp"

namespace recomp {
namespace {

const std::regex& located_re() {
  static const std::regex re(
      R"(^([^:\s][^:]*?):(\d+):(?:(\d+):)?\s*(fatal error|error|warning|note|remark):\s?(.*)$)");
  return re;
}

const std::regex& unlocated_re() {
  static const std::regex re(R"(^([^:\s][^:]*?):\s*(fatal error|error|warning|note):\s?(.*)$)");
  return re;
}

// `file: In function 'int main()':`, `In file included from ...`, `from x.h:3,`
const std::regex& context_re() {
  static const std::regex re(
      R"(^(?:[^:\s][^:]*?:(?:\d+:(?:\d+:)?)?\s*(?:In |At (?:global|top level))|In file included from |\s+from \S+:\d+[,:]$))");
  return re;
}

const std::regex& linker_re() {
  static const std::regex re(R"(^(?:\S*/)?(?:ld|ld\.\w+|collect2)(?:\.exe)?:\s*(.*)$)");
  return re;
}

const std::regex& section_ref_re() {
  static const std::regex re(R"(^\S+:\(\.[\w.]+\+0x[0-9a-fA-F]+\):\s*(.*)$)");
  return re;
}

bool is_gutter_line(std::string_view line) {
  // GCC source echo: "    3 |   return x;" and "      |          ^"
  std::size_t i = 0;
  while (i < line.size() && line[i] == ' ') ++i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  while (i < line.size() && line[i] == ' ') ++i;
  return i < line.size() && line[i] == '|' && (i + 1 == line.size() || line[i + 1] == ' ' || line[i + 1] == '|');
}

bool is_caret_line(std::string_view line) {
  auto t = text::trim(line);
  if (t.empty()) return false;
  bool caret = false;
  for (char c : t) {
    if (c == '^') caret = true;
    else if (c != '~' && c != ' ' && c != '-' && c != '+') return false;
  }
  return caret || (t.find_first_not_of('~') == std::string_view::npos);
}

bool is_summary_line(std::string_view line) {
  static const std::regex re(R"(^\d+ (?:errors?|warnings?)(?: and \d+ (?:errors?|warnings?))? generated\.$)");
  auto t = text::trim(line);
  return t == "compilation terminated." || std::regex_match(t.begin(), t.end(), re);
}

Severity severity_of(const std::string& s) {
  if (s == "error" || s == "fatal error") return Severity::Error;
  if (s == "warning") return Severity::Warning;
  return Severity::Note;
}

}  // namespace

std::string normalize_message(std::string_view message) {
  std::string out;
  out.reserve(message.size());
  std::size_t i = 0;
  while (i < message.size()) {
    char c = message[i];
    bool boundary = i == 0 || std::string_view(" \t'\"`(,[=").find(message[i - 1]) != std::string_view::npos;
    if (c == '/' && boundary && i + 1 < message.size() && message[i + 1] != ' ' && message[i + 1] != '/') {
      std::size_t j = i;
      while (j < message.size() && std::string_view(" \t'\"`(),[]:\n").find(message[j]) == std::string_view::npos) ++j;
      std::string_view path = message.substr(i, j - i);
      // Only rewrite things that look like paths (more than one component).
      if (path.find('/', 1) != std::string_view::npos) {
        std::size_t slash = path.rfind('/');
        out.append(path.substr(slash + 1));
        i = j;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::vector<Diagnostic> parse_diagnostics(std::string_view raw_stderr, std::vector<std::string>* unstructured) {
  std::vector<Diagnostic> diags;
  // Continuation lines of the current diagnostic, so a clang source echo can
  // be retracted once its caret line shows up.
  std::vector<std::string> pending;
  auto flush = [&] {
    if (diags.empty()) return;
    for (auto& p : pending) {
      diags.back().message += "\n";
      diags.back().message += p;
    }
    pending.clear();
  };
  auto add_continuation = [&](std::string text) {
    if (diags.empty()) {
      if (unstructured) unstructured->push_back(std::move(text));
      return;
    }
    pending.push_back(std::move(text));
  };

  std::size_t start = 0;
  while (start < raw_stderr.size()) {
    std::size_t nl = raw_stderr.find('\n', start);
    if (nl == std::string_view::npos) nl = raw_stderr.size();
    std::string line(raw_stderr.substr(start, nl - start));
    start = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || is_summary_line(line) || is_gutter_line(line)) continue;
    if (is_caret_line(line)) {
      if (!pending.empty()) pending.pop_back();
      continue;
    }
    if (std::regex_search(line, context_re())) continue;

    std::smatch m;
    if (std::regex_match(line, m, located_re())) {
      Severity sev = severity_of(m[4].str());
      std::string msg = normalize_message(m[5].str());
      if (sev == Severity::Note && !diags.empty() && diags.back().severity != Severity::Note) {
        add_continuation("note: " + msg);
        continue;
      }
      flush();
      Diagnostic d;
      d.severity = sev;
      d.message = std::move(msg);
      int ln = std::stoi(m[2].str());
      if (ln > 0) d.line = ln;
      if (m[3].matched) {
        int col = std::stoi(m[3].str());
        if (col > 0) d.column = col;
      }
      diags.push_back(std::move(d));
      continue;
    }

    std::string body = line;
    bool from_linker = false;
    if (std::regex_match(line, m, linker_re())) {
      body = m[1].str();
      from_linker = true;
    }
    if (std::regex_match(body, m, section_ref_re())) body = m[1].str();
    if (from_linker) {
      if (body.find(": in function") != std::string::npos || body.rfind("in function", 0) == 0) continue;
      if (std::regex_match(body, m, unlocated_re())) body = m[3].str();
      else if (body.rfind("error: ", 0) == 0) body = body.substr(7);
    }
    bool link_error = body.find("undefined reference to") != std::string::npos ||
                      body.find("multiple definition of") != std::string::npos;
    if (link_error || (from_linker && body.find("ld returned") != std::string::npos)) {
      flush();
      diags.push_back({Severity::Error, normalize_message(body), std::nullopt, std::nullopt, std::nullopt});
      continue;
    }
    if (!from_linker && std::regex_match(line, m, unlocated_re())) {
      flush();
      diags.push_back({severity_of(m[2].str()), normalize_message(m[3].str()), std::nullopt, std::nullopt,
                       std::nullopt});
      continue;
    }
    static const std::regex location_prefix(R"(^[^:\s][^:]*?:\d+:(?:\d+:)?\s*)");
    add_continuation(normalize_message(std::regex_replace(std::string(text::trim(body)), location_prefix, "")));
  }
  flush();
  return diags;
}

void attach_excerpts(std::vector<Diagnostic>& diags, std::string_view code, int context_lines) {
  auto lines = text::split_lines(code);
  for (auto& d : diags) {
    if (!d.line || *d.line < 1 || static_cast<std::size_t>(*d.line) > lines.size()) continue;
    int first = std::max(1, *d.line - context_lines);
    int last = std::min(static_cast<int>(lines.size()), *d.line + context_lines);
    std::string ex;
    for (int ln = first; ln <= last; ++ln) {
      const auto& l = lines[static_cast<std::size_t>(ln - 1)];
      ex += (ln == *d.line) ? "> " : "  ";
      ex.append(code.substr(l.offset, l.length));
      ex.push_back('\n');
    }
    d.excerpt = std::move(ex);
  }
}

std::string render_error_context(const std::vector<Diagnostic>& diags, std::string_view code, int context_lines,
                                 std::size_t max_chars) {
  std::vector<Diagnostic> errors;
  for (const auto& d : diags)
    if (d.severity == Severity::Error) errors.push_back(d);
  std::stable_sort(errors.begin(), errors.end(), [](const Diagnostic& a, const Diagnostic& b) {
    auto key = [](const Diagnostic& d) {
      return std::tuple(d.line ? 0 : 1, d.line.value_or(0), d.column.value_or(0));
    };
    if (key(a) != key(b)) return key(a) < key(b);
    return a.message < b.message;
  });
  attach_excerpts(errors, code, std::max(0, context_lines));

  std::vector<std::string> entries;
  for (const auto& d : errors) {
    std::string e = "error: " + d.message + "\n";
    if (d.excerpt) e += *d.excerpt;
    entries.push_back(std::move(e));
  }

  std::string out;
  for (const auto& e : entries) out += e;
  if (out.size() <= max_chars) return out;

  const std::string_view marker = kTruncationMarker;
  if (max_chars <= marker.size()) return std::string(marker.substr(0, max_chars));
  out.clear();
  for (const auto& e : entries) {
    if (out.size() + e.size() + marker.size() > max_chars) break;
    out += e;
  }
  if (out.empty()) out = entries.front().substr(0, max_chars - marker.size());
  out += marker;
  return out;
}

}  // namespace recomp
