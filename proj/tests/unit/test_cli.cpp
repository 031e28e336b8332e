#include <sstream>
#include <thread>

#include "cli.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "recomp/metrics.hpp"
#include "test_support.hpp"

using namespace recomp;
namespace fs = std::filesystem;
using recomp::testing::data_dir;
using recomp::testing::read_file;
using recomp::testing::TempDir;
using recomp::testing::write_file;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "recomp");
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Manifest listing a subset of the bundled corpus.
fs::path subset_manifest(const TempDir& dir, const std::vector<std::string>& ids) {
  auto all = load_manifest(data_dir() / "corpus/manifest.json");
  std::vector<ProgramEntry> keep;
  for (const auto& id : ids)
    for (const auto& e : all)
      if (e.id == id) keep.push_back(e);
  const fs::path path = dir / "manifest.json";
  save_manifest(keep, path);
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage and config errors exit 2") {
    auto r = run_cli({"refine", "--backend", "replay", "--fixtures", "fx"});
    CHECK(r.code == cli::kExitConfig);
    CHECK(r.err.find("--manifest is required") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);

    CHECK(run_cli({"refine", "--manifest", "m.json", "--bogus"}).code == cli::kExitConfig);
    CHECK(run_cli({}).code == cli::kExitConfig);
    CHECK(run_cli({"refine", "--manifest", "m.json", "--backend", "replay"}).code == cli::kExitConfig);
    CHECK(run_cli({"refine", "--manifest", "m.json", "--backend", "replay", "--fixtures", "f", "--budget", "0"})
              .code == cli::kExitConfig);
    CHECK(run_cli({"refine", "--manifest", "m.json", "--backend", "record"}).code == cli::kExitConfig);
    CHECK(run_cli({"refine", "--manifest", "m.json", "--backend", "grpc"}).code == cli::kExitConfig);
    CHECK(run_cli({"baseline", "--manifest", "m.json", "--jobs", "0"}).code == cli::kExitConfig);
    CHECK(run_cli({"baseline", "--manifest", "m.json", "--bucket-range", "9:3:5"}).code == cli::kExitConfig);
    CHECK(run_cli({"baseline", "--manifest", "m.json", "--config", "c.toml"}).code == cli::kExitConfig);

    TempDir dir;
    auto missing = run_cli({"baseline", "--manifest", (dir / "absent.json").string(), "--out", (dir / "o").string()});
    CHECK(missing.code == cli::kExitConfig);
  }

  TEST_CASE("help exits 0") {
    auto r = run_cli({"--help"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("OPENAI_API_KEY") != std::string::npos);
  }

  TEST_CASE("precedence: defaults, config file, flags") {
    TempDir dir;
    write_file(dir / "c.json", R"({"budget": 7, "jobs": 3, "out": "from-config", "http": {"model": "m2"}})");
    auto cfg = cli::parse_config({"recomp", "refine", "--manifest", "m.json", "--config", (dir / "c.json").string(),
                                  "--jobs", "2"});
    CHECK(cfg.mode == cli::Mode::Refine);
    CHECK(cfg.budget == 7);
    CHECK(cfg.jobs == 2);
    CHECK(cfg.out == "from-config");
    CHECK(cfg.http.model == "m2");
    CHECK(cfg.context_limit == 4096);
    CHECK(cfg.thresholds == std::vector<int>{1, 5, 10, 15});

    auto d = cli::parse_config({"recomp", "baseline", "--manifest", "m.json"});
    CHECK(d.budget == 15);
    CHECK(d.jobs == 1);
    CHECK(d.backend == cli::BackendKind::Http);

    auto rec = cli::parse_config({"recomp", "refine", "--manifest", "m.json", "--record", "rec"});
    CHECK(rec.backend == cli::BackendKind::Record);
    auto flags = cli::parse_config({"recomp", "--budget", "3", "refine", "--manifest", "m.json", "--thresholds",
                                    "2,4", "--bucket-range", "100:500:4", "--backend", "replay", "--fixtures", "f"});
    CHECK(flags.budget == 3);
    CHECK(flags.thresholds == std::vector<int>{2, 4});
    CHECK(flags.bucket_range.k == 4);
  }

  TEST_CASE("refine happy path writes outcomes and reports") {
    TempDir dir;
    auto manifest = subset_manifest(dir, {"p01_elf_symbols", "p07_reversed_operator", "p11_never_compiles"});
    auto r = run_cli({"refine", "--manifest", manifest.string(), "--backend", "replay", "--fixtures",
                      (data_dir() / "corpus/fixtures").string(), "--budget", "5", "--out", (dir / "run").string(),
                      "--jobs", "3", "--quiet"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    auto records = read_outcomes(dir / "run/outcomes.jsonl");
    REQUIRE(records.size() == 3);
    CHECK(records[0].program_id == "p01_elf_symbols");
    CHECK(records[0].status == RefinementStatus::Functional);
    CHECK(records[1].program_id == "p07_reversed_operator");
    CHECK(records[2].status == RefinementStatus::CompileBudgetExhausted);
    for (const char* f : {"report.json", "report.csv", "report.txt"}) CHECK(fs::exists(dir / "run" / f));
    CHECK(r.out.find("Success") != std::string::npos);
  }

  TEST_CASE("exhausted fixtures are an infrastructure failure") {
    TempDir dir;
    auto manifest = subset_manifest(dir, {"p11_never_compiles"});
    auto r = run_cli({"refine", "--manifest", manifest.string(), "--backend", "replay", "--fixtures",
                      (data_dir() / "corpus/fixtures").string(), "--budget", "6", "--out", (dir / "run").string(),
                      "--quiet"});
    CHECK(r.code == cli::kExitInfrastructure);
    CHECK(r.err.find("no replay response") != std::string::npos);
  }

  TEST_CASE("baseline spends no queries") {
    TempDir dir;
    auto manifest = subset_manifest(dir, {"p02_canary", "p05_type_inference"});
    auto r = run_cli({"baseline", "--manifest", manifest.string(), "--out", (dir / "run").string(), "--quiet"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    auto records = read_outcomes(dir / "run/outcomes.jsonl");
    REQUIRE(records.size() == 2);
    CHECK(records[0].status == RefinementStatus::Functional);
    CHECK(records[1].status == RefinementStatus::CompileFailed);
    for (const auto& rec : records) CHECK(rec.queries_used == 0);
  }

  TEST_CASE("preprocess and report modes") {
    TempDir dir;
    auto manifest = subset_manifest(dir, {"p02_canary"});
    auto r = run_cli({"preprocess", "--manifest", manifest.string(), "--out", (dir / "pp").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(read_file(dir / "pp/p02_canary/preprocessed.c").find("__readfsqword") == std::string::npos);

    OutcomeRecord a;
    a.program_id = "a";
    a.status = RefinementStatus::Functional;
    a.success_at = 4;
    a.queries_used = 4;
    OutcomeRecord b;
    b.program_id = "b";
    fs::create_directories(dir / "o");
    write_outcomes(dir / "o/outcomes.jsonl", {a, b});
    r = run_cli({"report", "--outcomes", (dir / "o/outcomes.jsonl").string(), "--thresholds", "1,5"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    auto rep = parse_report_json(read_file(dir / "o/report.json"));
    CHECK(rep.success_at_c.at(1).rate == 0.0);
    CHECK(rep.success_at_c.at(5).rate == 0.5);

    CHECK(run_cli({"report", "--outcomes", (dir / "none.jsonl").string()}).code == cli::kExitConfig);
  }

  TEST_CASE("record then replay reproduces outcomes") {
    const std::string reply = read_file(data_dir() / "corpus/fixtures/p01_elf_symbols/1.txt");
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
      nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}};
      res.set_content(body.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir dir;
    auto manifest = subset_manifest(dir, {"p01_elf_symbols", "p03_fastcall_main"});
    nlohmann::json cfg = {{"http", {{"url", "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"},
                                    {"api_key_env", "RECOMP_TEST_UNSET_KEY"},
                                    {"max_retries", 0}}}};
    write_file(dir / "cfg.json", cfg.dump());
    auto rec = run_cli({"refine", "--manifest", manifest.string(), "--config", (dir / "cfg.json").string(),
                        "--record", (dir / "fx").string(), "--out", (dir / "live").string(), "--quiet", "--jobs",
                        "2"});
    server.stop();
    t.join();
    REQUIRE_MESSAGE(rec.code == cli::kExitOk, rec.err);
    CHECK(fs::exists(dir / "fx/p01_elf_symbols/1.txt"));

    auto rep = run_cli({"refine", "--manifest", manifest.string(), "--backend", "replay", "--fixtures",
                        (dir / "fx").string(), "--out", (dir / "replayed").string(), "--quiet"});
    REQUIRE_MESSAGE(rep.code == cli::kExitOk, rep.err);
    CHECK(read_file(dir / "live/outcomes.jsonl") == read_file(dir / "replayed/outcomes.jsonl"));
  }
}
