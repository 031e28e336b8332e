#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "recomp/error.hpp"
#include "recomp/metrics.hpp"
#include "test_support.hpp"

using namespace recomp;
using recomp::testing::TempDir;
using recomp::testing::write_file;

namespace {

OutcomeRecord rec(std::string id, std::optional<int> success_at, std::optional<int> bucket = std::nullopt) {
  OutcomeRecord r;
  r.program_id = std::move(id);
  r.success_at = success_at;
  r.status = success_at ? RefinementStatus::Functional : RefinementStatus::CompileBudgetExhausted;
  r.queries_used = success_at.value_or(15);
  r.bucket = bucket;
  return r;
}

ProgramEntry entry(std::string id, std::optional<int> bucket) {
  ProgramEntry e;
  e.id = std::move(id);
  e.bucket = bucket;
  return e;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("hand-computed rates") {
    std::vector<OutcomeRecord> rs = {rec("a", 1), rec("b", 4), rec("c", 12), rec("d", std::nullopt)};
    auto r = aggregate(rs, kDefaultThresholds);
    CHECK(r.total_programs == 4);
    REQUIRE(r.success_at_c.size() == 4);
    CHECK(r.success_at_c.at(1) == ThresholdStat{1, 0.25});
    CHECK(r.success_at_c.at(5) == ThresholdStat{2, 0.5});
    CHECK(r.success_at_c.at(10) == ThresholdStat{2, 0.5});
    CHECK(r.success_at_c.at(15) == ThresholdStat{3, 0.75});
  }

  TEST_CASE("saturation and empty thresholds") {
    std::vector<OutcomeRecord> rs = {rec("a", 1), rec("b", 1), rec("c", 1)};
    auto r = aggregate(rs, kDefaultThresholds);
    for (auto& [c, stat] : r.success_at_c) CHECK(stat.rate == 1.0);
    CHECK(aggregate(rs, {}).success_at_c.empty());
    CHECK_THROWS_AS(aggregate(rs, {0}), ConfigError);
  }

  TEST_CASE("rates round to four places") {
    std::vector<OutcomeRecord> rs = {rec("a", 1), rec("b", std::nullopt), rec("c", std::nullopt)};
    CHECK(aggregate(rs, {1}).success_at_c.at(1).rate == 0.3333);
    rs.push_back(rec("d", 2));
    rs.push_back(rec("e", 3));
    rs.push_back(rec("f", 3));
    CHECK(aggregate(rs, {2}).success_at_c.at(2).rate == 0.3333);
    CHECK(aggregate(rs, {3}).success_at_c.at(3).rate == 0.6667);
    CHECK(aggregate({}, {1}).success_at_c.at(1).rate == 0.0);
  }

  TEST_CASE("buckets come from the entries") {
    std::vector<OutcomeRecord> rs = {rec("a", 1), rec("b", 3), rec("c", std::nullopt), rec("d", 20), rec("e", 2)};
    std::vector<ProgramEntry> es = {entry("a", 0), entry("b", 0), entry("c", 2), entry("d", 4),
                                    entry("e", std::nullopt)};
    auto r = aggregate(rs, es, kDefaultThresholds);
    CHECK(r.bucket_success == std::map<int, std::size_t>{{-1, 1}, {0, 2}, {2, 0}, {4, 0}});
  }

  TEST_CASE("records and entries must pair up") {
    std::vector<OutcomeRecord> rs = {rec("a", 1), rec("b", 2)};
    CHECK_THROWS_AS(aggregate(rs, {entry("a", 0)}, kDefaultThresholds), MismatchedRecords);
    CHECK_THROWS_AS(aggregate(rs, {entry("a", 0), entry("c", 0)}, kDefaultThresholds), MismatchedRecords);
    CHECK_THROWS_AS(aggregate({rec("a", 1), rec("a", 1)}, {entry("a", 0), entry("a", 0)}, kDefaultThresholds),
                    MismatchedRecords);
    CHECK_NOTHROW(aggregate(rs, {entry("b", 1), entry("a", 0)}, kDefaultThresholds));
  }

  TEST_CASE("tallies") {
    auto a = rec("a", 2);
    a.revert_events = 2;
    a.sanitizer_triggered = true;
    auto b = rec("b", std::nullopt);
    b.revert_events = 1;
    b.sanitizer_triggered = true;
    b.status = RefinementStatus::SanitizerUnfixed;
    auto r = aggregate({a, b}, kDefaultThresholds);
    CHECK(r.revert_events == 3);
    CHECK(r.sanitizer_triggered == 2);
    CHECK(r.sanitizer_fixed == 1);
  }

  TEST_CASE("success rates are monotone and order-independent") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(0, 40), at(0, 20);
    std::vector<int> thresholds = {1, 2, 3, 5, 8, 10, 13, 15, 20};
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<OutcomeRecord> rs;
      int n = len(rng);
      for (int i = 0; i < n; ++i) {
        int v = at(rng);
        rs.push_back(rec("p" + std::to_string(i), v == 0 ? std::nullopt : std::optional<int>(v)));
      }
      auto r = aggregate(rs, thresholds);
      double prev = -1;
      std::size_t prev_count = 0;
      for (int c : thresholds) {
        const auto& s = r.success_at_c.at(c);
        CHECK(s.rate >= prev);
        CHECK(s.count >= prev_count);
        prev = s.rate;
        prev_count = s.count;
        // Independent count.
        std::size_t expect = 0;
        for (const auto& o : rs) expect += o.success_at && *o.success_at <= c;
        CHECK(s.count == expect);
      }
      std::shuffle(rs.begin(), rs.end(), rng);
      CHECK(aggregate(rs, thresholds) == r);
    }
  }

  TEST_CASE("json round-trip") {
    auto a = rec("a", 1, 0);
    a.revert_events = 1;
    a.sanitizer_triggered = true;
    auto r = aggregate({a, rec("b", 7, 3), rec("c", std::nullopt), rec("d", 14, 3)}, kDefaultThresholds);
    auto text = emit_report(r, ReportFormat::Json);
    CHECK(parse_report_json(text) == r);
    CHECK(emit_report(r, ReportFormat::Json) == text);
    CHECK(nlohmann::json::accept(text));
    CHECK_THROWS_AS(parse_report_json("{"), OutcomeParseError);
  }

  TEST_CASE("csv shape") {
    auto r = aggregate({rec("a", 1), rec("b", 4), rec("c", 12), rec("d", std::nullopt)}, kDefaultThresholds);
    auto lines = lines_of(emit_report(r, ReportFormat::Csv));
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "C,count,rate");
    CHECK(lines[1] == "1,1,0.2500");
    CHECK(lines[2] == "5,2,0.5000");
    CHECK(lines[4] == "15,3,0.7500");
  }

  TEST_CASE("text tables") {
    std::vector<OutcomeRecord> rs;
    for (int b = 0; b < 5; ++b) rs.push_back(rec("p" + std::to_string(b), 1, b));
    auto text = emit_report(aggregate(rs, kDefaultThresholds), ReportFormat::Text);
    auto lines = lines_of(text);
    std::size_t bucket_rows = 0, threshold_rows = 0;
    bool in_buckets = false;
    for (auto l : lines) {
      l.erase(0, l.find_first_not_of(' '));
      if (l.rfind("Bucket", 0) == 0) in_buckets = true;
      else if (in_buckets && !l.empty() && std::isdigit(static_cast<unsigned char>(l[0]))) ++bucket_rows;
      else if (!in_buckets && !l.empty() && std::isdigit(static_cast<unsigned char>(l[0]))) ++threshold_rows;
    }
    CHECK(bucket_rows == 5);
    CHECK(threshold_rows == 4);
    CHECK(text.find("100%") != std::string::npos);
  }

  TEST_CASE("outcome records round-trip") {
    OutcomeRecord r = rec("p1", 3, 2);
    r.source_tokens = 512;
    r.revert_events = 1;
    r.extraction_failures = 2;
    r.history_truncations = 1;
    r.sanitizer_triggered = true;
    r.final_origin = "llm:3";
    r.final_verdicts = {"Pass", "Pass"};
    const auto line = to_json_line(r);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(parse_record(line) == r);
    CHECK(line.rfind("{\"program_id\":\"p1\",\"status\":\"Functional\"", 0) == 0);

    OutcomeRecord bare = rec("p2", std::nullopt);
    CHECK(parse_record(to_json_line(bare)) == bare);
    CHECK_THROWS_AS(parse_record("not json"), OutcomeParseError);
    CHECK_THROWS_AS(parse_record(R"({"program_id":"x","status":"Nope"})"), OutcomeParseError);
  }

  TEST_CASE("outcome files") {
    TempDir dir;
    std::vector<OutcomeRecord> rs = {rec("a", 1, 0), rec("b", std::nullopt)};
    write_outcomes(dir / "o.jsonl", rs);
    CHECK(read_outcomes(dir / "o.jsonl") == rs);
    write_file(dir / "gaps.jsonl", to_json_line(rs[0]) + "\n\n" + to_json_line(rs[1]) + "\n");
    CHECK(read_outcomes(dir / "gaps.jsonl") == rs);
    CHECK_THROWS_AS(read_outcomes(dir / "absent.jsonl"), MissingArtifact);
    write_file(dir / "bad.jsonl", "{}\n");
    CHECK_THROWS_AS(read_outcomes(dir / "bad.jsonl"), OutcomeParseError);
  }

  TEST_CASE("records from outcomes") {
    RefinementOutcome o;
    o.program_id = "p";
    o.status = RefinementStatus::Functional;
    o.queries_used = 2;
    o.success_at = 2;
    o.reverts = {{1, {"solve"}}};
    o.final_unit.origin = Origin::llm(2);
    TestVerdict v;
    o.final_verdicts = {v};
    auto r = to_record(o);
    CHECK(r.revert_events == 1);
    CHECK(r.success_at == 2);
    CHECK(r.final_verdicts == std::vector<std::string>{"Pass"});
    CHECK(r.final_origin == to_string(Origin::llm(2)));
  }
}
