#include <algorithm>
#include <cctype>

#include "recomp/error.hpp"
#include "recomp/llm.hpp"
#include "recomp/text.hpp"

namespace recomp {
namespace {

struct Fence {
  char ch = 0;
  std::size_t len = 0;
};

// ``` / ~~~ fence line, optionally followed by an info string.
std::optional<Fence> opening_fence(std::string_view line) {
  std::string_view t = text::trim(line);
  if (t.size() < 3 || (t[0] != '`' && t[0] != '~')) return std::nullopt;
  std::size_t n = 0;
  while (n < t.size() && t[n] == t[0]) ++n;
  if (n < 3) return std::nullopt;
  std::string_view info = text::trim(t.substr(n));
  if (t[0] == '`' && info.find('`') != std::string_view::npos) return std::nullopt;
  return Fence{t[0], n};
}

bool closes(std::string_view line, const Fence& f) {
  std::string_view t = text::trim(line);
  if (t.size() < f.len) return false;
  for (char c : t)
    if (c != f.ch) return false;
  return true;
}

bool is_fence_only(std::string_view line) {
  std::string_view t = text::trim(line);
  if (t.size() < 3) return false;
  std::size_t n = 0;
  while (n < t.size() && (t[n] == '`' || t[n] == '~')) ++n;
  return n >= 3 && (n == t.size() || std::all_of(t.begin() + static_cast<long>(n), t.end(), [](char c) {
                      return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '#' || c == '-';
                    }));
}

// Natural-language sentences: several words, sentence punctuation at the
// end, and none of the characters that make up C statements.
bool is_prose(std::string_view line) {
  std::string_view t = text::trim(line);
  if (t.empty()) return false;
  if (t[0] == '#' || t.substr(0, 2) == "//" || t.substr(0, 2) == "/*" || t[0] == '*') return false;
  if (t.find_first_of(";{}=<>[]") != std::string_view::npos) return false;
  std::size_t words = 0;
  bool in_word = false;
  for (char c : t) {
    bool letter = std::isalpha(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
    if (letter && !in_word) ++words;
    in_word = letter;
  }
  if (words < 3) return false;
  char last = t.back();
  if (last == '.' || last == '!' || last == '?' || last == ':') return true;
  // A wordy line with no code punctuation at all is prose too.
  return t.find_first_of("()") == std::string_view::npos && words >= 4;
}

std::string strip_prose(std::string_view body) {
  auto lines = text::split_lines(body);
  std::size_t first = 0, last = lines.size();
  auto skippable = [&](std::size_t i) {
    std::string_view l = body.substr(lines[i].offset, lines[i].length);
    return text::trim(l).empty() || is_prose(l) || is_fence_only(l);
  };
  while (first < last && skippable(first)) ++first;
  while (last > first && skippable(last - 1)) --last;
  if (first >= last) return {};
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    std::string_view l = body.substr(lines[i].offset, lines[i].length);
    if (is_fence_only(l)) continue;
    out.append(l);
    if (i + 1 < last) out.push_back('\n');
  }
  return out;
}

}  // namespace

std::string extract_code(std::string_view response) {
  auto lines = text::split_lines(response);
  std::vector<std::string> blocks;
  std::optional<Fence> open;
  std::string current;
  bool current_has_line = false;
  for (const auto& l : lines) {
    std::string_view line = response.substr(l.offset, l.length);
    if (!open) {
      if (auto f = opening_fence(line)) {
        open = f;
        current.clear();
        current_has_line = false;
      }
      continue;
    }
    if (closes(line, *open)) {
      blocks.push_back(current);
      open.reset();
      continue;
    }
    if (current_has_line) current.push_back('\n');
    current.append(line);
    current_has_line = true;
  }
  // A reply cut off mid-block still yields what was inside the fence.
  if (open && current_has_line) blocks.push_back(current);

  std::string joined;
  if (!blocks.empty()) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].empty()) continue;
      if (!joined.empty()) joined.push_back('\n');
      joined += blocks[i];
    }
  } else {
    joined = std::string(response);
  }
  std::string code = strip_prose(joined);
  if (text::trim(code).empty()) throw EmptyExtraction();
  return code;
}

}  // namespace recomp
