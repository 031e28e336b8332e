#include "recomp/corpus.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "recomp/error.hpp"

namespace recomp {
namespace fs = std::filesystem;
using nlohmann::json;

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

bool sanitize_utf8(std::string& text) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  bool replaced = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  out.reserve(n);
  while (i < n) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      else cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong forms, surrogates and values past U+10FFFF.
    if (ok) {
      if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF))
        ok = false;
    }
    if (ok) {
      out.append(text, i, len);
      i += len;
    } else {
      out.append(kReplacement);
      replaced = true;
      ++i;
    }
  }
  if (replaced) text = std::move(out);
  return replaced;
}

std::string read_text_file(const fs::path& path, bool* had_invalid_utf8) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  bool bad = sanitize_utf8(text);
  if (had_invalid_utf8) *had_invalid_utf8 = bad;
  return text;
}

namespace {

std::string required_string(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ManifestParseError("entry " + std::to_string(index) + ": missing string field \"" + key + "\"");
  return it->get<std::string>();
}

CompareMode parse_compare(const std::string& s, std::size_t index) {
  if (s == "exact") return CompareMode::Exact;
  if (s == "normalized" || s == "trailing-whitespace") return CompareMode::TrailingWhitespaceNormalized;
  throw ManifestParseError("entry " + std::to_string(index) + ": unknown compare mode \"" + s + "\"");
}

// Inline text wins; otherwise the "<key>_file" variant is read relative to
// the manifest directory.
std::string text_or_file(const json& t, const std::string& key, const fs::path& base, std::size_t index,
                         std::vector<std::string>& warnings) {
  if (auto it = t.find(key); it != t.end()) {
    if (!it->is_string())
      throw ManifestParseError("entry " + std::to_string(index) + ": \"" + key + "\" must be a string");
    return it->get<std::string>();
  }
  if (auto it = t.find(key + "_file"); it != t.end()) {
    if (!it->is_string())
      throw ManifestParseError("entry " + std::to_string(index) + ": \"" + key + "_file\" must be a string");
    fs::path p = base / it->get<std::string>();
    bool bad = false;
    std::string text = read_text_file(p, &bad);
    if (bad) warnings.push_back("invalid UTF-8 replaced in " + p.string());
    return text;
  }
  return {};
}

}  // namespace

std::vector<ProgramEntry> load_manifest(const fs::path& path, const TokenEstimator& estimator) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ManifestParseError(path.string() + ": top level must be an array");

  const fs::path base = path.parent_path();
  const TokenEstimator& estimate = estimator ? estimator : TokenEstimator(estimate_tokens);
  std::vector<ProgramEntry> entries;
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    if (!obj.is_object()) throw ManifestParseError("entry " + std::to_string(i) + ": not an object");
    ProgramEntry e;
    e.id = required_string(obj, "id", i);
    if (e.id.empty()) throw ManifestParseError("entry " + std::to_string(i) + ": empty id");
    for (const auto& s : seen)
      if (s == e.id) throw ManifestParseError("duplicate id \"" + e.id + "\"");
    seen.push_back(e.id);

    e.pseudocode_path = base / required_string(obj, "pseudocode", i);
    bool bad = false;
    std::string code = read_text_file(e.pseudocode_path, &bad);
    if (bad) e.load_warnings.push_back("invalid UTF-8 replaced in " + e.pseudocode_path.string());
    e.source_tokens = estimate(code);

    if (auto it = obj.find("header_hint"); it != obj.end() && it->is_string()) e.header_hint = it->get<std::string>();

    if (auto it = obj.find("tests"); it != obj.end()) {
      if (!it->is_array()) throw ManifestParseError("entry " + std::to_string(i) + ": \"tests\" must be an array");
      for (const json& t : *it) {
        if (!t.is_object()) throw ManifestParseError("entry " + std::to_string(i) + ": test is not an object");
        TestCase tc;
        tc.stdin_text = text_or_file(t, "stdin", base, i, e.load_warnings);
        tc.expected_stdout = text_or_file(t, "stdout", base, i, e.load_warnings);
        if (auto tm = t.find("timeout_ms"); tm != t.end()) {
          if (!tm->is_number_integer() || tm->get<long long>() <= 0)
            throw ManifestParseError("entry " + std::to_string(i) + ": timeout_ms must be a positive integer");
          tc.timeout_ms = tm->get<int>();
        }
        if (auto cm = t.find("compare"); cm != t.end() && cm->is_string())
          tc.compare_mode = parse_compare(cm->get<std::string>(), i);
        e.test_cases.push_back(std::move(tc));
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::vector<ProgramEntry>& entries, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  json doc = json::array();
  for (const auto& e : entries) {
    json obj;
    obj["id"] = e.id;
    std::error_code ec;
    fs::path rel = fs::relative(e.pseudocode_path, base, ec);
    obj["pseudocode"] = (ec || rel.empty()) ? e.pseudocode_path.generic_string() : rel.generic_string();
    if (e.header_hint) obj["header_hint"] = *e.header_hint;
    json tests = json::array();
    for (const auto& t : e.test_cases) {
      json tj;
      tj["stdin"] = t.stdin_text;
      tj["stdout"] = t.expected_stdout;
      tj["timeout_ms"] = t.timeout_ms;
      tj["compare"] = t.compare_mode == CompareMode::Exact ? "exact" : "normalized";
      tests.push_back(std::move(tj));
    }
    obj["tests"] = std::move(tests);
    doc.push_back(std::move(obj));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

BucketRange parse_bucket_range(std::string_view spec) {
  BucketRange r;
  long values[3];
  std::size_t start = 0;
  for (int field = 0; field < 3; ++field) {
    std::size_t end = field < 2 ? spec.find(':', start) : spec.size();
    if (end == std::string_view::npos) throw InvalidRange("bucket range must be LO:HI:K, got " + std::string(spec));
    auto part = spec.substr(start, end - start);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), values[field]);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty())
      throw InvalidRange("bucket range must be LO:HI:K, got " + std::string(spec));
    start = end + 1;
  }
  r.lo = values[0];
  r.hi = values[1];
  r.k = static_cast<int>(values[2]);
  if (r.lo >= r.hi || r.k < 1) throw InvalidRange("bucket range requires LO < HI and K >= 1");
  return r;
}

std::optional<int> bucket_index(std::size_t tokens, const BucketRange& range) {
  const long t = static_cast<long>(tokens);
  if (t < range.lo || t >= range.hi) return std::nullopt;
  return static_cast<int>((t - range.lo) * range.k / (range.hi - range.lo));
}

long bucket_lower_bound(int i, const BucketRange& range) {
  const long width = range.hi - range.lo;
  return range.lo + (static_cast<long>(i) * width + range.k - 1) / range.k;
}

std::vector<ProgramEntry> bucket_by_context(std::vector<ProgramEntry> entries, const BucketRange& range) {
  if (range.lo >= range.hi || range.k < 1) throw InvalidRange("bucket range requires lo < hi and k >= 1");
  for (auto& e : entries) {
    e.bucket = bucket_index(e.source_tokens, range);
    e.out_of_range = !e.bucket.has_value();
  }
  return entries;
}

}  // namespace recomp
