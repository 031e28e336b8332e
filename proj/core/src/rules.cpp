#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "recomp/error.hpp"
#include "recomp/preprocess.hpp"

namespace recomp {
namespace {

// Mirrors config/default_rules.json; a unit test keeps the two in sync.
constexpr std::string_view kDefaultRules = R"json({
  "elf_symbols": [
    "__gmon_start__",
    "_gmon_start__",
    "__cxa_finalize",
    "_cxa_finalize",
    "_ITM_deregisterTMCloneTable",
    "_ITM_registerTMCloneTable",
    "_Jv_RegisterClasses"
  ],
  "calling_conventions": [
    "__fastcall",
    "__cdecl",
    "__stdcall",
    "__usercall"
  ],
  "canary_patterns": [
    "^\\s*(\\w+)\\s*=\\s*__read[fg]s[qdwb]word\\(\\s*0x(?:28|14)u?\\s*\\)\\s*;",
    "^\\s*return\\s+__read[fg]s[qdwb]word\\(\\s*0x(?:28|14)u?\\s*\\)\\s*\\^\\s*\\w+\\s*;",
    "^\\s*return\\s+\\w+\\s*-\\s*__read[fg]s[qdwb]word\\(\\s*0x(?:28|14)u?\\s*\\)\\s*;",
    "^\\s*if\\s*\\(\\s*__read[fg]s[qdwb]word\\(\\s*0x(?:28|14)u?\\s*\\)\\s*!=\\s*\\w+\\s*\\)",
    "^\\s*if\\s*\\(\\s*\\w+\\s*!=\\s*__read[fg]s[qdwb]word\\(\\s*0x(?:28|14)u?\\s*\\)\\s*\\)",
    "^\\s*(\\w+)\\s*=\\s*\\*\\(\\s*\\w+\\s*\\*\\s*\\)\\s*\\(\\s*in_FS_OFFSET\\s*\\+\\s*0x28\\s*\\)\\s*;",
    "^\\s*if\\s*\\(\\s*\\w+\\s*!=\\s*\\*\\(\\s*\\w+\\s*\\*\\s*\\)\\s*\\(\\s*in_FS_OFFSET\\s*\\+\\s*0x28\\s*\\)\\s*\\)",
    "^\\s*__stack_chk_fail\\s*\\(\\s*\\)\\s*;"
  ],
  "guard_exempt": [
    "^_init$",
    "^_fini$",
    "^_start$",
    "^start$",
    "^_init_proc$",
    "^_term_proc$",
    "^\\.init_proc$",
    "^\\.term_proc$",
    "^frame_dummy$",
    "^register_tm_clones$",
    "^deregister_tm_clones$",
    "^__do_global_dtors_aux$",
    "^__libc_csu_init$",
    "^__libc_csu_fini$"
  ]
}
)json";

std::vector<std::string> string_array(const nlohmann::json& doc, const char* key, const std::vector<std::string>& fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_array()) throw ConfigError(std::string("rules: \"") + key + "\" must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(std::string("rules: \"") + key + "\" must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void validate_regexes(const std::vector<std::string>& patterns, const char* key) {
  for (const auto& p : patterns) {
    try {
      std::regex re(p, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ConfigError(std::string("rules: bad regex in \"") + key + "\": " + p + " (" + e.what() + ")");
    }
  }
}

RuleSet parse_with_fallback(std::string_view text, const RuleSet* fallback) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("rules: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("rules: top level must be an object");
  static const std::vector<std::string> kNone;
  RuleSet r;
  r.elf_symbols = string_array(doc, "elf_symbols", fallback ? fallback->elf_symbols : kNone);
  r.calling_conventions = string_array(doc, "calling_conventions", fallback ? fallback->calling_conventions : kNone);
  r.canary_patterns = string_array(doc, "canary_patterns", fallback ? fallback->canary_patterns : kNone);
  r.guard_exempt = string_array(doc, "guard_exempt", fallback ? fallback->guard_exempt : kNone);
  validate_regexes(r.canary_patterns, "canary_patterns");
  validate_regexes(r.guard_exempt, "guard_exempt");
  return r;
}

}  // namespace

std::string_view default_rules_json() { return kDefaultRules; }

const RuleSet& default_rules() {
  static const RuleSet rules = parse_with_fallback(kDefaultRules, nullptr);
  return rules;
}

RuleSet parse_rules_json(std::string_view json_text) { return parse_with_fallback(json_text, &default_rules()); }

RuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read rules file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules_json(ss.str());
}

}  // namespace recomp
