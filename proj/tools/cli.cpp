#include "cli.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "recomp/error.hpp"
#include "recomp/metrics.hpp"
#include "recomp/pipeline.hpp"
#include "recomp/preprocess.hpp"

namespace recomp::cli {
namespace fs = std::filesystem;

std::atomic<bool>& stop_requested() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct HelpRequested {
  std::string text;
};

std::vector<int> parse_thresholds(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad threshold list: " + s);
    }
  }
  return out;
}

BackendKind parse_backend(const std::string& s) {
  if (s == "http") return BackendKind::Http;
  if (s == "replay") return BackendKind::Replay;
  if (s == "record") return BackendKind::Record;
  throw ConfigError("unknown backend: " + s);
}

// Config file keys mirror the long flag names; nested objects hold the
// compiler and http settings.
void apply_config_file(RunConfig& cfg, const fs::path& path) {
  if (path.extension() != ".json") throw ConfigError("config file must be JSON: " + path.string());
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.contains("manifest")) cfg.manifest = j["manifest"].get<std::string>();
    if (j.contains("backend")) cfg.backend = parse_backend(j["backend"].get<std::string>());
    if (j.contains("fixtures")) cfg.fixtures = j["fixtures"].get<std::string>();
    if (j.contains("record")) cfg.record_dir = j["record"].get<std::string>();
    if (j.contains("budget")) cfg.budget = j["budget"].get<int>();
    if (j.contains("static_budget")) cfg.static_budget = j["static_budget"].get<int>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
    if (j.contains("rules")) cfg.rules_path = j["rules"].get<std::string>();
    if (j.contains("bucket_range")) cfg.bucket_range = parse_bucket_range(j["bucket_range"].get<std::string>());
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("always_refine")) cfg.always_refine = j["always_refine"].get<bool>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("context_limit")) cfg.context_limit = j["context_limit"].get<std::size_t>();
    if (j.contains("thresholds")) cfg.thresholds = j["thresholds"].get<std::vector<int>>();
    if (j.contains("header_hint")) cfg.header_hint = j["header_hint"].get<std::string>();
    if (j.contains("compiler")) {
      const auto& c = j["compiler"];
      if (c.contains("path")) cfg.compiler.path = c["path"].get<std::string>();
      if (c.contains("flags")) cfg.compiler.base_flags = c["flags"].get<std::vector<std::string>>();
      if (c.contains("sanitize_flags")) cfg.compiler.sanitize_flags = c["sanitize_flags"].get<std::vector<std::string>>();
      if (c.contains("timeout_ms")) cfg.compiler.timeout_ms = c["timeout_ms"].get<int>();
    }
    if (j.contains("http")) {
      const auto& h = j["http"];
      if (h.contains("url")) cfg.http.url = h["url"].get<std::string>();
      if (h.contains("model")) cfg.http.model = h["model"].get<std::string>();
      if (h.contains("api_key_env")) cfg.http.api_key_env = h["api_key_env"].get<std::string>();
      if (h.contains("temperature")) cfg.http.temperature = h["temperature"].get<double>();
      if (h.contains("top_p")) cfg.http.top_p = h["top_p"].get<double>();
      if (h.contains("max_retries")) cfg.http.max_retries = h["max_retries"].get<int>();
      if (h.contains("requests_per_minute")) cfg.http.max_requests_per_minute = h["requests_per_minute"].get<double>();
      if (h.contains("timeout_ms"))
        cfg.http.request_timeout = std::chrono::milliseconds(h["timeout_ms"].get<long>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config file " + path.string() + ": " + e.what());
  }
}

constexpr const char* kFooter =
    "Modes: refine, baseline, preprocess, report.\n"
    "The http backend reads its API key from the environment variable named by\n"
    "http.api_key_env in the config file (default OPENAI_API_KEY); keys are never\n"
    "accepted as flags.\n"
    "Exit status: 0 run completed (failed programs are data), 1 infrastructure\n"
    "error or interrupt, 2 configuration or usage error.";

RunConfig parse_impl(const std::vector<std::string>& argv) {
  CLI::App app{"Turn decompiler pseudocode into recompilable, tested source.", "recomp"};
  app.footer(kFooter);
  app.require_subcommand(1, 1);
  app.fallthrough();
  auto* refine = app.add_subcommand("refine", "Rules plus LLM repair loops");
  auto* baseline = app.add_subcommand("baseline", "Rules plus header hint only, no LLM");
  auto* prep = app.add_subcommand("preprocess", "Write rule-cleaned sources");
  auto* report = app.add_subcommand("report", "Aggregate an existing outcomes file");

  std::optional<std::string> manifest, backend, fixtures, record, rules, bucket_range, out, config, header_hint,
      thresholds, outcomes, compiler;
  std::optional<int> budget, static_budget, jobs, compile_timeout;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> context_limit;
  bool always_refine = false, quiet = false;

  app.add_option("--manifest", manifest, "Program manifest (JSON)");
  app.add_option("--backend", backend, "Completion backend")->check(CLI::IsMember({"http", "replay", "record"}));
  app.add_option("--fixtures", fixtures, "Replay fixture directory");
  app.add_option("--record", record, "Directory for recorded replies (implies --backend record)");
  app.add_option("--budget", budget, "Query budget per program (default 15)");
  app.add_option("--static-budget", static_budget, "Cap on queries spent before the unit compiles");
  app.add_option("--jobs", jobs, "Programs refined in parallel");
  app.add_option("--rules", rules, "Rule configuration (JSON)");
  app.add_option("--bucket-range", bucket_range, "Context-length buckets LO:HI:K (default 200:2048:5)");
  app.add_option("--out", out, "Run directory (default recomp-run)");
  app.add_flag("--always-refine", always_refine, "Query the model even when preprocessing alone compiles");
  app.add_option("--seed", seed, "Seed for retry jitter");
  app.add_option("--config", config, "Config file (JSON)");
  app.add_option("--context-limit", context_limit, "Model context window in tokens (default 4096)");
  app.add_option("--thresholds", thresholds, "Comma-separated C values for the report (default 1,5,10,15)");
  app.add_option("--header-hint", header_hint, "Header block prepended by the baseline");
  app.add_option("--outcomes", outcomes, "Outcomes file for report mode");
  app.add_option("--compiler", compiler, "C++ compiler driver (default g++)");
  app.add_option("--compile-timeout-ms", compile_timeout, "Per-compile time limit");
  app.add_flag("--quiet", quiet, "No per-program progress lines");

  const std::string usage = app.help();
  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{usage};
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n\n" + usage);
  }

  RunConfig cfg;
  if (refine->parsed()) cfg.mode = Mode::Refine;
  else if (baseline->parsed()) cfg.mode = Mode::Baseline;
  else if (prep->parsed()) cfg.mode = Mode::PreprocessOnly;
  else if (report->parsed()) cfg.mode = Mode::Report;

  if (config) apply_config_file(cfg, *config);
  if (manifest) cfg.manifest = *manifest;
  if (backend) cfg.backend = parse_backend(*backend);
  if (fixtures) cfg.fixtures = *fixtures;
  if (record) {
    cfg.record_dir = *record;
    if (!backend) cfg.backend = BackendKind::Record;
  }
  if (budget) cfg.budget = *budget;
  if (static_budget) cfg.static_budget = *static_budget;
  if (jobs) cfg.jobs = *jobs;
  if (rules) cfg.rules_path = *rules;
  if (bucket_range) cfg.bucket_range = parse_bucket_range(*bucket_range);
  if (out) cfg.out = *out;
  if (always_refine) cfg.always_refine = true;
  if (seed) cfg.seed = *seed;
  if (context_limit) cfg.context_limit = *context_limit;
  if (thresholds) cfg.thresholds = parse_thresholds(*thresholds);
  if (header_hint) cfg.header_hint = *header_hint;
  if (outcomes) cfg.outcomes = *outcomes;
  if (compiler) cfg.compiler.path = *compiler;
  if (compile_timeout) cfg.compiler.timeout_ms = *compile_timeout;
  cfg.quiet = quiet;
  cfg.http.seed = cfg.seed;

  if (cfg.budget < 1) throw UsageError("--budget must be >= 1");
  if (cfg.static_budget && *cfg.static_budget < 1) throw UsageError("--static-budget must be >= 1");
  if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (cfg.mode != Mode::Report && cfg.manifest.empty()) throw UsageError("--manifest is required\n\n" + usage);
  if (cfg.mode == Mode::Refine) {
    if (cfg.backend == BackendKind::Replay && !cfg.fixtures)
      throw UsageError("--backend replay requires --fixtures");
    if (cfg.backend == BackendKind::Record && !cfg.record_dir && !cfg.fixtures)
      throw UsageError("--backend record requires --record or --fixtures");
  }
  return cfg;
}

std::unique_ptr<CompletionBackend> make_backend(const RunConfig& cfg) {
  switch (cfg.backend) {
    case BackendKind::Replay: return std::make_unique<ReplayBackend>(*cfg.fixtures);
    case BackendKind::Http: return std::make_unique<HttpBackend>(cfg.http);
    case BackendKind::Record:
      return std::make_unique<RecordingBackend>(std::make_unique<HttpBackend>(cfg.http),
                                                cfg.record_dir ? *cfg.record_dir : *cfg.fixtures);
  }
  return nullptr;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig p;
  p.budget = cfg.budget;
  p.static_budget = cfg.static_budget;
  p.always_refine = cfg.always_refine;
  p.context_limit = cfg.context_limit;
  p.rules = cfg.rules_path ? load_rules(*cfg.rules_path) : default_rules();
  p.compiler = cfg.compiler;
  p.run_dir = cfg.out;
  return p;
}

// Runs `job` over every entry on a pool of workers and writes records to
// outcomes.jsonl in manifest order as soon as each prefix is complete.
class OrderedRunner {
 public:
  OrderedRunner(std::size_t count, const fs::path& outcomes_path, bool quiet, std::ostream& err)
      : results_(count), quiet_(quiet), err_(err) {
    stream_.open(outcomes_path, std::ios::binary | std::ios::trunc);
    if (!stream_) throw WorkdirError("cannot write " + outcomes_path.string());
  }

  template <class Job>
  void run(int jobs, Job job) {
    std::vector<std::thread> workers;
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(results_.size())));
    for (int w = 0; w < n; ++w) workers.emplace_back([&] { work(job); });
    for (auto& t : workers) t.join();
  }

  std::vector<OutcomeRecord> records() const {
    std::vector<OutcomeRecord> out;
    for (const auto& r : results_)
      if (r) out.push_back(*r);
    return out;
  }
  bool complete() const { return flushed_ == results_.size(); }
  const std::optional<std::string>& failure() const { return failure_; }

 private:
  template <class Job>
  void work(Job& job) {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu_);
        if (failure_ || stop_requested().load() || next_ >= results_.size()) return;
        i = next_++;
      }
      try {
        OutcomeRecord rec = job(i);
        std::lock_guard lock(mu_);
        if (!quiet_)
          err_ << "[" << rec.program_id << "] " << to_string(rec.status) << " queries=" << rec.queries_used << "\n";
        results_[i] = std::move(rec);
        while (flushed_ < results_.size() && results_[flushed_]) {
          stream_ << to_json_line(*results_[flushed_]) << '\n';
          ++flushed_;
        }
        stream_.flush();
      } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        if (!failure_) failure_ = e.what();
      }
    }
  }

  std::vector<std::optional<OutcomeRecord>> results_;
  std::size_t next_ = 0;
  std::size_t flushed_ = 0;
  std::optional<std::string> failure_;
  bool quiet_;
  std::ostream& err_;
  std::ofstream stream_;
  std::mutex mu_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WorkdirError("cannot write " + path.string());
  out << text;
}

void write_reports(const RunReport& report, const fs::path& dir, std::ostream& out) {
  write_text(dir / "report.json", emit_report(report, ReportFormat::Json));
  write_text(dir / "report.csv", emit_report(report, ReportFormat::Csv));
  const std::string text = emit_report(report, ReportFormat::Text);
  write_text(dir / "report.txt", text);
  out << text;
}

std::vector<ProgramEntry> load_entries(const RunConfig& cfg) {
  return bucket_by_context(load_manifest(cfg.manifest), cfg.bucket_range);
}

int run_programs(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto entries = load_entries(cfg);
  const PipelineConfig pconf = pipeline_config(cfg);
  fs::create_directories(cfg.out);
  std::unique_ptr<CompletionBackend> backend;
  if (cfg.mode == Mode::Refine) backend = make_backend(cfg);

  OrderedRunner runner(entries.size(), cfg.out / "outcomes.jsonl", cfg.quiet, err);
  runner.run(cfg.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    if (cfg.mode == Mode::Refine) return to_record(refine(e, *backend, pconf));
    return to_record(run_baseline(e, e.header_hint ? e.header_hint : std::optional<std::string>(cfg.header_hint),
                                  pconf));
  });
  if (runner.failure()) {
    err << "recomp: run aborted: " << *runner.failure() << "\n";
    return kExitInfrastructure;
  }
  if (!runner.complete()) {
    err << "recomp: interrupted; " << runner.records().size() << " of " << entries.size()
        << " outcomes written\n";
    return kExitInfrastructure;
  }
  write_reports(aggregate(runner.records(), entries, cfg.thresholds), cfg.out, out);
  return kExitOk;
}

int run_preprocess(const RunConfig& cfg, std::ostream& out) {
  const auto entries = load_entries(cfg);
  const RuleSet rules = cfg.rules_path ? load_rules(*cfg.rules_path) : default_rules();
  for (const auto& e : entries) {
    SourceUnit unit{e.id, read_text_file(e.pseudocode_path), {OriginKind::Decompiler, 0}, {}};
    unit = preprocess(std::move(unit), rules);
    const fs::path dir = cfg.out / e.id;
    fs::create_directories(dir);
    write_text(dir / "preprocessed.c", unit.code);
    out << (dir / "preprocessed.c").string() << "\n";
  }
  return kExitOk;
}

int run_report(const RunConfig& cfg, std::ostream& out) {
  const fs::path path = cfg.outcomes ? *cfg.outcomes : cfg.out / "outcomes.jsonl";
  const auto records = read_outcomes(path);
  RunReport report = cfg.manifest.empty() ? aggregate(records, cfg.thresholds)
                                          : aggregate(records, load_entries(cfg), cfg.thresholds);
  fs::path dir = cfg.outcomes ? path.parent_path() : cfg.out;
  if (dir.empty()) dir = ".";
  write_reports(report, dir, out);
  return kExitOk;
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& argv) {
  try {
    return parse_impl(argv);
  } catch (const HelpRequested& h) {
    throw ConfigError(h.text);
  }
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_impl(argv);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kExitOk;
  } catch (const Error& e) {
    err << "recomp: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    switch (cfg.mode) {
      case Mode::Refine:
      case Mode::Baseline: return run_programs(cfg, out, err);
      case Mode::PreprocessOnly: return run_preprocess(cfg, out);
      case Mode::Report: return run_report(cfg, out);
    }
  } catch (const InfrastructureError& e) {
    err << "recomp: " << e.what() << "\n";
    return kExitInfrastructure;
  } catch (const Error& e) {
    // Bad manifest, rules, ranges or missing inputs.
    err << "recomp: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "recomp: " << e.what() << "\n";
    return kExitInfrastructure;
  }
  return kExitOk;
}

}  // namespace recomp::cli
