#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace recomp::text {

/// Marks which bytes of C/C++ source sit inside a comment or a string/char
/// literal. The scanner is lexical only and tolerates malformed input: an
/// unterminated literal runs to end of line, an unterminated block comment
/// to end of text.
class LiteralMask {
 public:
  explicit LiteralMask(std::string_view code);

  bool masked(std::size_t offset) const { return offset < bits_.size() && bits_[offset]; }
  /// True when the byte belongs to a comment (not a string/char literal).
  bool in_comment(std::size_t offset) const { return offset < comment_.size() && comment_[offset]; }
  std::size_t size() const { return bits_.size(); }

 private:
  std::vector<bool> bits_;
  std::vector<bool> comment_;
};

struct Line {
  std::size_t offset = 0;
  std::size_t length = 0;  // excluding the newline
  bool has_newline = false;

  std::size_t end() const { return offset + length; }
  std::size_t end_with_newline() const { return end() + (has_newline ? 1 : 0); }
};

std::vector<Line> split_lines(std::string_view code);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);
bool is_ident_char(char c);
bool starts_with_word(std::string_view s, std::string_view word);

/// Offsets of `name` occurring as a whole identifier outside comments and
/// literals.
std::vector<std::size_t> find_identifier(std::string_view code, const LiteralMask& mask, std::string_view name);

/// Returns the line with comment and literal bytes blanked out, so that
/// structural checks (trailing ';', brace counts) ignore them.
std::string code_only(std::string_view code, const LiteralMask& mask, const Line& line);

}  // namespace recomp::text
