#include <regex>

#include "recomp/error.hpp"
#include "recomp/runbox.hpp"
#include "recomp/text.hpp"

namespace recomp {
namespace {

const std::regex& banner_re() {
  static const std::regex re(R"(ERROR: (\w*Sanitizer):\s*(.*))");
  return re;
}

std::string_view basename_of(std::string_view path) {
  auto slash = path.find_last_of('/');
  return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

bool is_runtime_file(std::string_view file) {
  if (file.empty()) return true;
  if (file.rfind("../", 0) == 0) return true;
  for (std::string_view marker : {"/usr/", "libsanitizer", "compiler-rt", "sysdeps/", "/csu/", "/libc/", "libstdc++"})
    if (file.find(marker) != std::string_view::npos) return true;
  return false;
}

std::string kind_from_text(std::string_view text) {
  std::string_view t = text::trim(text);
  std::size_t i = 0;
  auto next_word = [&]() -> std::string_view {
    while (i < t.size() && t[i] == ' ') ++i;
    std::size_t b = i;
    while (i < t.size() && t[i] != ' ' && t[i] != ':') ++i;
    return t.substr(b, i - b);
  };
  std::string_view w = next_word();
  if (w == "attempting") w = next_word();  // "attempting double-free on ..."
  return std::string(w);
}

}  // namespace

bool has_sanitizer_banner(std::string_view text) {
  std::string s(text);
  return std::regex_search(s, banner_re());
}

SanitizerReport parse_sanitizer_report(std::string_view raw, std::string_view code, std::string_view source_name) {
  std::string text(raw);
  std::smatch m;
  if (!std::regex_search(text, m, banner_re())) throw NotASanitizerReport("no sanitizer banner in report");

  SanitizerReport report;
  report.raw_text = text;
  report.kind = kind_from_text(m[2].str());

  static const std::regex summary_re(R"(SUMMARY: \w*Sanitizer: (\S+))");
  std::smatch sm;
  if (std::regex_search(text, sm, summary_re)) report.kind = sm[1].str();
  if (report.kind.empty()) report.kind = m[1].str();

  static const std::regex frame_re(R"(^\s*#(\d+) 0x[0-9a-fA-F]+ in (.+)$)");
  static const std::regex located_re(R"(^(.*) (\S+?):(\d+)(?::(\d+))?$)");
  static const std::regex module_re(R"(^(.*) \((.*)\)$)");
  const std::size_t banner_end = static_cast<std::size_t>(m.position(0) + m.length(0));
  bool started = false;
  std::size_t pos = banner_end;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    std::smatch fm;
    if (std::regex_match(line, fm, frame_re)) {
      if (started && fm[1].str() == "0") break;
      started = true;
      StackFrame f;
      std::string rest = fm[2].str();
      std::smatch lm;
      if (std::regex_match(rest, lm, located_re)) {
        f.function = lm[1].str();
        f.file = lm[2].str();
        f.line = std::stoi(lm[3].str());
      } else if (std::regex_match(rest, lm, module_re)) {
        f.function = lm[1].str();
        f.file = lm[2].str();
      } else {
        f.function = rest;
      }
      report.frames.push_back(std::move(f));
    } else if (started && text::trim(line).empty()) {
      break;
    }
  }

  auto lines = text::split_lines(code);
  for (const auto& f : report.frames) {
    if (!f.line || *f.line < 1 || static_cast<std::size_t>(*f.line) > lines.size()) continue;
    bool ours = source_name.empty() ? !is_runtime_file(f.file) : basename_of(f.file) == basename_of(source_name);
    if (!ours) continue;
    const auto& l = lines[static_cast<std::size_t>(*f.line - 1)];
    report.faulting_statement = std::string(text::trim(code.substr(l.offset, l.length)));
    report.faulting_line = *f.line;
    break;
  }
  return report;
}

}  // namespace recomp
