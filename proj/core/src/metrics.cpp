#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "recomp/error.hpp"
#include "recomp/metrics.hpp"

namespace recomp {
namespace {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

RunReport aggregate_impl(const std::vector<OutcomeRecord>& records, const std::vector<std::optional<int>>& buckets,
                         const std::set<int>& bucket_rows, const std::vector<int>& thresholds) {
  RunReport report;
  report.total_programs = records.size();
  for (int c : thresholds) {
    if (c < 1) throw ConfigError("thresholds must be positive");
    ThresholdStat stat;
    for (const auto& r : records)
      if (r.success_at && *r.success_at <= c) ++stat.count;
    stat.rate = records.empty() ? 0.0 : round4(static_cast<double>(stat.count) / records.size());
    report.success_at_c[c] = stat;
  }
  const std::optional<int> cap =
      thresholds.empty() ? std::nullopt : std::optional<int>(*std::max_element(thresholds.begin(), thresholds.end()));
  for (int b : bucket_rows) report.bucket_success[b] = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.status == RefinementStatus::Functional && r.success_at && (!cap || *r.success_at <= *cap))
      ++report.bucket_success[buckets[i].value_or(-1)];
    report.revert_events += static_cast<std::size_t>(r.revert_events);
    if (r.sanitizer_triggered) {
      ++report.sanitizer_triggered;
      if (r.status == RefinementStatus::Functional) ++report.sanitizer_fixed;
    }
  }
  return report;
}

}  // namespace

RunReport aggregate(const std::vector<OutcomeRecord>& records, const std::vector<ProgramEntry>& entries,
                    const std::vector<int>& thresholds) {
  std::unordered_map<std::string, const ProgramEntry*> by_id;
  for (const auto& e : entries)
    if (!by_id.emplace(e.id, &e).second) throw MismatchedRecords("duplicate entry id: " + e.id);
  std::set<std::string> seen;
  std::vector<std::optional<int>> buckets;
  for (const auto& r : records) {
    auto it = by_id.find(r.program_id);
    if (it == by_id.end()) throw MismatchedRecords("outcome without entry: " + r.program_id);
    if (!seen.insert(r.program_id).second) throw MismatchedRecords("duplicate outcome: " + r.program_id);
    buckets.push_back(it->second->bucket);
  }
  if (seen.size() != entries.size()) {
    for (const auto& e : entries)
      if (!seen.count(e.id)) throw MismatchedRecords("entry without outcome: " + e.id);
  }
  std::set<int> rows;
  for (const auto& e : entries) rows.insert(e.bucket.value_or(-1));
  return aggregate_impl(records, buckets, rows, thresholds);
}

RunReport aggregate(const std::vector<OutcomeRecord>& records, const std::vector<int>& thresholds) {
  std::set<std::string> seen;
  std::vector<std::optional<int>> buckets;
  std::set<int> rows;
  for (const auto& r : records) {
    if (!seen.insert(r.program_id).second) throw MismatchedRecords("duplicate outcome: " + r.program_id);
    buckets.push_back(r.bucket);
    rows.insert(r.bucket.value_or(-1));
  }
  return aggregate_impl(records, buckets, rows, thresholds);
}

std::string emit_report(const RunReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["total_programs"] = report.total_programs;
      j["success_at_c"] = nlohmann::ordered_json::array();
      for (const auto& [c, s] : report.success_at_c)
        j["success_at_c"].push_back({{"C", c}, {"count", s.count}, {"rate", s.rate}});
      j["bucket_success"] = nlohmann::ordered_json::array();
      for (const auto& [b, n] : report.bucket_success) j["bucket_success"].push_back({{"bucket", b}, {"count", n}});
      j["revert_events"] = report.revert_events;
      j["sanitizer_triggered"] = report.sanitizer_triggered;
      j["sanitizer_fixed"] = report.sanitizer_fixed;
      return j.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      std::string out = "C,count,rate\n";
      for (const auto& [c, s] : report.success_at_c)
        out += std::to_string(c) + "," + std::to_string(s.count) + "," + fixed4(s.rate) + "\n";
      return out;
    }
    case ReportFormat::Text: {
      char line[128];
      std::string out = "Programs: " + std::to_string(report.total_programs) + "\n\n";
      out += "  C   Success  Rate    Percent\n";
      for (const auto& [c, s] : report.success_at_c) {
        std::snprintf(line, sizeof line, "%3d   %7zu  %s  %6.0f%%\n", c, s.count, fixed4(s.rate).c_str(),
                      s.rate * 100.0);
        out += line;
      }
      out += "\n  Bucket  Success\n";
      for (const auto& [b, n] : report.bucket_success) {
        if (b < 0) std::snprintf(line, sizeof line, "  %-6s  %7zu\n", "n/a", n);
        else std::snprintf(line, sizeof line, "  %-6d  %7zu\n", b, n);
        out += line;
      }
      out += "\nRevert events: " + std::to_string(report.revert_events) + "\n";
      out += "Sanitizer triggered: " + std::to_string(report.sanitizer_triggered) +
             ", fixed: " + std::to_string(report.sanitizer_fixed) + "\n";
      return out;
    }
  }
  return {};
}

RunReport parse_report_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    RunReport r;
    r.total_programs = j.at("total_programs").get<std::size_t>();
    for (const auto& e : j.at("success_at_c"))
      r.success_at_c[e.at("C").get<int>()] = {e.at("count").get<std::size_t>(), e.at("rate").get<double>()};
    for (const auto& e : j.at("bucket_success"))
      r.bucket_success[e.at("bucket").get<int>()] = e.at("count").get<std::size_t>();
    r.revert_events = j.at("revert_events").get<std::size_t>();
    r.sanitizer_triggered = j.at("sanitizer_triggered").get<std::size_t>();
    r.sanitizer_fixed = j.at("sanitizer_fixed").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw OutcomeParseError(std::string("bad report: ") + e.what());
  }
}

}  // namespace recomp
