#include "recomp/text.hpp"

#include <cctype>

namespace recomp::text {

LiteralMask::LiteralMask(std::string_view code) : bits_(code.size(), false), comment_(code.size(), false) {
  const std::size_t n = code.size();
  std::size_t i = 0;
  auto mark = [&](std::size_t from, std::size_t to, bool comment) {
    for (std::size_t k = from; k < to && k < n; ++k) {
      bits_[k] = true;
      comment_[k] = comment;
    }
  };
  while (i < n) {
    char c = code[i];
    if (c == '/' && i + 1 < n && code[i + 1] == '/') {
      std::size_t end = code.find('\n', i);
      if (end == std::string_view::npos) end = n;
      mark(i, end, true);
      i = end;
    } else if (c == '/' && i + 1 < n && code[i + 1] == '*') {
      std::size_t end = code.find("*/", i + 2);
      end = end == std::string_view::npos ? n : end + 2;
      mark(i, end, true);
      i = end;
    } else if (c == 'R' && i + 1 < n && code[i + 1] == '"' && (i == 0 || !is_ident_char(code[i - 1]) ||
                                                                 code[i - 1] == 'u' || code[i - 1] == 'U' ||
                                                                 code[i - 1] == 'L' || code[i - 1] == '8')) {
      std::size_t open = code.find('(', i + 2);
      if (open == std::string_view::npos) {
        ++i;
        continue;
      }
      std::string terminator = ")" + std::string(code.substr(i + 2, open - i - 2)) + "\"";
      std::size_t end = code.find(terminator, open + 1);
      end = end == std::string_view::npos ? n : end + terminator.size();
      mark(i, end, false);
      i = end;
    } else if (c == '"' || c == '\'') {
      // A quote right after a digit is a C++14 digit separator (1'000).
      if (c == '\'' && i > 0 && std::isxdigit(static_cast<unsigned char>(code[i - 1])) && i + 1 < n &&
          std::isxdigit(static_cast<unsigned char>(code[i + 1]))) {
        std::size_t k = i;
        while (k > 0 && is_ident_char(code[k - 1])) --k;
        if (k < i && std::isdigit(static_cast<unsigned char>(code[k]))) {
          ++i;
          continue;
        }
      }
      std::size_t j = i + 1;
      while (j < n && code[j] != c && code[j] != '\n') {
        if (code[j] == '\\' && j + 1 < n) ++j;
        ++j;
      }
      std::size_t end = (j < n && code[j] == c) ? j + 1 : j;
      mark(i, end, false);
      i = end;
    } else {
      ++i;
    }
  }
}

std::vector<Line> split_lines(std::string_view code) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start < code.size()) {
    std::size_t nl = code.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back({start, code.size() - start, false});
      break;
    }
    lines.push_back({start, nl - start, true});
    start = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string_view trim_right(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(0, e);
}

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool starts_with_word(std::string_view s, std::string_view word) {
  return s.size() >= word.size() && s.substr(0, word.size()) == word &&
         (s.size() == word.size() || !is_ident_char(s[word.size()]));
}

std::vector<std::size_t> find_identifier(std::string_view code, const LiteralMask& mask, std::string_view name) {
  std::vector<std::size_t> hits;
  if (name.empty()) return hits;
  std::size_t pos = 0;
  while ((pos = code.find(name, pos)) != std::string_view::npos) {
    bool left_ok = pos == 0 || !is_ident_char(code[pos - 1]);
    std::size_t after = pos + name.size();
    bool right_ok = after >= code.size() || !is_ident_char(code[after]);
    if (left_ok && right_ok && !mask.masked(pos)) hits.push_back(pos);
    pos += 1;
  }
  return hits;
}

std::string code_only(std::string_view code, const LiteralMask& mask, const Line& line) {
  std::string out(code.substr(line.offset, line.length));
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::size_t off = line.offset + k;
    if (!mask.masked(off)) continue;
    out[k] = mask.in_comment(off) ? ' ' : '_';
  }
  return out;
}

}  // namespace recomp::text
