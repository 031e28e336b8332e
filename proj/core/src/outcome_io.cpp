#include <fstream>

#include "json.hpp"
#include "recomp/error.hpp"
#include "recomp/metrics.hpp"

namespace recomp {

OutcomeRecord to_record(const RefinementOutcome& o) {
  OutcomeRecord r;
  r.program_id = o.program_id;
  r.status = o.status;
  r.queries_used = o.queries_used;
  r.success_at = o.success_at;
  r.bucket = o.bucket;
  r.source_tokens = o.source_tokens;
  r.revert_events = static_cast<int>(o.reverts.size());
  r.extraction_failures = o.extraction_failures;
  r.history_truncations = o.history_truncations;
  r.sanitizer_triggered = o.sanitizer_triggered;
  r.final_origin = to_string(o.final_unit.origin);
  for (const auto& v : o.final_verdicts) r.final_verdicts.emplace_back(to_string(v.status));
  return r;
}

namespace {

template <class T>
nlohmann::ordered_json opt(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::string to_json_line(const OutcomeRecord& r) {
  nlohmann::ordered_json j;
  j["program_id"] = r.program_id;
  j["status"] = std::string(to_string(r.status));
  j["queries_used"] = r.queries_used;
  j["success_at"] = opt(r.success_at);
  j["bucket"] = opt(r.bucket);
  j["source_tokens"] = r.source_tokens;
  j["revert_events"] = r.revert_events;
  j["extraction_failures"] = r.extraction_failures;
  j["history_truncations"] = r.history_truncations;
  j["sanitizer_triggered"] = r.sanitizer_triggered;
  j["final_origin"] = r.final_origin;
  j["final_verdicts"] = r.final_verdicts;
  return j.dump();
}

OutcomeRecord parse_record(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    OutcomeRecord r;
    r.program_id = j.at("program_id").get<std::string>();
    auto status = parse_refinement_status(j.at("status").get<std::string>());
    if (!status) throw OutcomeParseError("unknown status in outcome record: " + j.at("status").dump());
    r.status = *status;
    r.queries_used = j.at("queries_used").get<int>();
    r.success_at = get_opt<int>(j, "success_at");
    r.bucket = get_opt<int>(j, "bucket");
    r.source_tokens = j.value("source_tokens", std::size_t{0});
    r.revert_events = j.value("revert_events", 0);
    r.extraction_failures = j.value("extraction_failures", 0);
    r.history_truncations = j.value("history_truncations", 0);
    r.sanitizer_triggered = j.value("sanitizer_triggered", false);
    r.final_origin = j.value("final_origin", std::string());
    r.final_verdicts = j.value("final_verdicts", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw OutcomeParseError(std::string("bad outcome record: ") + e.what());
  }
}

std::vector<OutcomeRecord> read_outcomes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  std::vector<OutcomeRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_record(line));
  }
  return out;
}

void write_outcomes(const std::filesystem::path& path, const std::vector<OutcomeRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WorkdirError("cannot write " + path.string());
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

}  // namespace recomp
