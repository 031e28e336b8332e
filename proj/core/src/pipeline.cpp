#include "recomp/pipeline.hpp"

#include <fstream>

#include "json.hpp"
#include "recomp/error.hpp"

namespace recomp {
namespace fs = std::filesystem;

std::string_view to_string(RefinementStatus s) {
  switch (s) {
    case RefinementStatus::Functional: return "Functional";
    case RefinementStatus::CompiledButFailing: return "CompiledButFailing";
    case RefinementStatus::CompileBudgetExhausted: return "CompileBudgetExhausted";
    case RefinementStatus::Inadmissible: return "Inadmissible";
    case RefinementStatus::ContextOverflow: return "ContextOverflow";
    case RefinementStatus::SanitizerUnfixed: return "SanitizerUnfixed";
    case RefinementStatus::CompileFailed: return "CompileFailed";
  }
  return "CompileFailed";
}

std::optional<RefinementStatus> parse_refinement_status(std::string_view s) {
  for (auto v : {RefinementStatus::Functional, RefinementStatus::CompiledButFailing,
                 RefinementStatus::CompileBudgetExhausted, RefinementStatus::Inadmissible,
                 RefinementStatus::ContextOverflow, RefinementStatus::SanitizerUnfixed,
                 RefinementStatus::CompileFailed})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

namespace {

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WorkdirError("cannot write " + path.string());
  out << content;
}

nlohmann::json verdicts_json(const std::vector<TestVerdict>& verdicts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : verdicts) {
    nlohmann::json j;
    j["case"] = v.case_index;
    j["status"] = std::string(to_string(v.status));
    j["exit_code"] = v.exit_code ? nlohmann::json(*v.exit_code) : nlohmann::json();
    j["signal"] = v.term_signal ? nlohmann::json(*v.term_signal) : nlohmann::json();
    if (v.sanitizer) {
      j["sanitizer_kind"] = v.sanitizer->kind;
      j["faulting_statement"] =
          v.sanitizer->faulting_statement ? nlohmann::json(*v.sanitizer->faulting_statement) : nlohmann::json();
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string compile_log(const CompileResult& r) {
  std::string s = r.success ? "status: success\n" : "status: failed\n";
  s += r.raw_stderr;
  return s;
}

struct PendingPrompt {
  PromptKind kind = PromptKind::Initial;
  PromptSlots slots;
};

class Refinement {
 public:
  Refinement(const ProgramEntry& entry, CompletionBackend& backend, const PipelineConfig& config)
      : entry_(entry), backend_(backend), config_(config), program_dir_(config.run_dir / entry.id) {}

  RefinementOutcome run() {
    out_.program_id = entry_.id;
    out_.bucket = entry_.bucket;
    out_.source_tokens = entry_.source_tokens;

    std::error_code ec;
    fs::create_directories(program_dir_, ec);
    if (ec) throw WorkdirError("cannot create " + program_dir_.string());

    SourceUnit raw{entry_.id, read_text_file(entry_.pseudocode_path), {OriginKind::Decompiler, 0}, {}};
    current_ = preprocess(std::move(raw), config_.rules);
    out_.final_unit = current_;

    if (!admit(current_, config_.system_prompt, config_.context_limit)) {
      out_.status = RefinementStatus::Inadmissible;
      write_file(program_dir_ / "final.c", current_.code);
      return std::move(out_);
    }
    out_.transcript = Transcript(config_.system_prompt);

    compile_current(0);
    std::optional<PendingPrompt> pending;
    if (!current_compiles_ || config_.always_refine) pending = PendingPrompt{PromptKind::Initial, {{"pseudocode", current_.code}}};

    for (;;) {
      if (!pending) {
        // Dynamic phase: current unit compiled and awaits testing.
        if (auto p = test_current()) {
          pending = std::move(p);
        } else {
          finish(RefinementStatus::Functional);
          out_.success_at = out_.queries_used;
          return std::move(out_);
        }
      }
      if (out_.queries_used >= config_.budget ||
          (!current_compiles_ && config_.static_budget && static_queries_ >= *config_.static_budget)) {
        finish_exhausted();
        return std::move(out_);
      }
      if (!query(*pending, pending)) return std::move(out_);
    }
  }

 private:
  fs::path iter_dir(int k) const { return program_dir_ / ("iter" + std::to_string(k)); }

  void compile_current(int k) {
    CompileRequest req;
    req.unit = current_;
    req.sanitize = config_.run_limits.sanitized;
    req.workdir = iter_dir(k);
    req.time_limit_ms = config_.compiler.timeout_ms;
    try {
      CompileResult r = compile(req, config_.compiler);
      write_file(req.workdir / "compile.txt", compile_log(r));
      current_compiles_ = r.success;
      if (r.success) {
        current_binary_ = r.binary_path;
        last_compiled_ = current_;
        error_text_.clear();
      } else {
        error_text_ = render_error_context(r.diagnostics, current_.code, config_.error_context_lines,
                                           config_.error_max_chars);
        if (error_text_.empty()) {
          // Nothing parseable: fall back to the normalized raw output.
          error_text_ = normalize_message(r.raw_stderr).substr(0, config_.error_max_chars);
        }
      }
    } catch (const CompileTimeout& e) {
      current_compiles_ = false;
      error_text_ = "error: [compilation timed out after " + std::to_string(config_.compiler.timeout_ms) + " ms]";
      write_file(req.workdir / "compile.txt", std::string("status: timeout\n") + e.what() + "\n");
    }
  }

  /// Runs the suite on the current binary. Returns the repair prompt for the
  /// first failure, or nullopt when every case passes.
  std::optional<PendingPrompt> test_current() {
    const fs::path dir = iter_dir(out_.queries_used);
    RunLimits limits = config_.run_limits;
    limits.scratch_dir = dir / "run";
    limits.archive_dir = dir;
    limits.source_code = current_.code;
    limits.source_name = "candidate.c";
    auto verdicts = run_tests(*current_binary_, entry_.test_cases, limits);
    write_file(dir / "verdicts.json", verdicts_json(verdicts).dump(2) + "\n");
    out_.verdict_log.insert(out_.verdict_log.end(), verdicts.begin(), verdicts.end());
    out_.final_verdicts = verdicts;
    last_verdicts_ = verdicts;

    for (const auto& v : verdicts) {
      if (v.status == VerdictStatus::Pass) continue;
      if (v.status == VerdictStatus::SanitizerAbort) out_.sanitizer_triggered = true;
      return dynamic_prompt(v);
    }
    return std::nullopt;
  }

  PendingPrompt dynamic_prompt(const TestVerdict& v) const {
    PendingPrompt p;
    const TestCase& tc = entry_.test_cases.at(v.case_index);
    if (v.status == VerdictStatus::SanitizerAbort && v.sanitizer) {
      p.kind = PromptKind::SanitizerError;
      std::string statement;
      if (v.sanitizer->faulting_statement) statement = *v.sanitizer->faulting_statement;
      else if (!v.sanitizer->frames.empty()) statement = "function " + v.sanitizer->frames.front().function;
      else statement = "an unknown location";
      p.slots = {{"type_of_memory_corruption", v.sanitizer->kind},
                 {"statement", statement},
                 {"pseudocode", current_.code}};
      return p;
    }
    p.kind = PromptKind::OutputError;
    std::string wrong = v.actual_stdout;
    if (v.status == VerdictStatus::Timeout) {
      wrong = "[program timed out]";
    } else if (v.status == VerdictStatus::Crash) {
      wrong = v.term_signal ? "[program crashed with signal " + std::to_string(*v.term_signal) + "]"
                            : "[program exited with status " + std::to_string(v.exit_code.value_or(-1)) + "]";
    }
    p.slots = {{"expected_input", tc.stdin_text},
               {"expected_output", tc.expected_stdout},
               {"wrong_output", wrong},
               {"pseudocode", current_.code}};
    return p;
  }

  std::vector<ChatMessage> request_view() {
    const auto& msgs = out_.transcript.messages();
    std::size_t tokens = 0;
    for (const auto& m : msgs) tokens += estimate_tokens(m.content);
    if (2 * tokens < config_.context_limit || msgs.size() <= 2) return msgs;
    ++out_.history_truncations;
    return {msgs.front(), msgs.back()};
  }

  /// One query. Returns false when the conversation terminated.
  bool query(const PendingPrompt& prompt, std::optional<PendingPrompt>& next) {
    const int k = ++out_.queries_used;
    if (!current_compiles_) ++static_queries_;
    const fs::path dir = iter_dir(k);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw WorkdirError("cannot create " + dir.string());

    ChatMessage user = render_prompt(prompt.kind, prompt.slots);
    write_file(dir / "prompt.txt", user.content);
    out_.transcript.append(std::move(user));
    auto view = request_view();
    ChatMessage reply;
    try {
      reply = complete(out_.transcript, backend_, entry_.id, k, &view);
    } catch (const ContextOverflow& e) {
      write_file(dir / "event.txt", std::string("context-overflow: ") + e.what() + "\n");
      // The query was spent without producing an answer.
      finish(RefinementStatus::ContextOverflow);
      return false;
    }
    write_file(dir / "response.txt", reply.content);
    const std::string reply_text = reply.content;
    out_.transcript.append(std::move(reply));

    std::string candidate;
    try {
      candidate = extract_code(reply_text);
    } catch (const EmptyExtraction&) {
      ++out_.extraction_failures;
      write_file(dir / "event.txt", "empty-extraction\n");
      return true;  // same prompt again
    }
    write_file(dir / "candidate.c", candidate);

    std::vector<std::string> lost;
    try {
      lost = stripped_functions(index_functions(current_.code), index_functions(candidate), config_.rules);
    } catch (const UnbalancedBraces&) {
      // Structurally suspect on either side; let the compiler report it.
    }
    if (!lost.empty()) {
      std::string names;
      for (const auto& n : lost) names += (names.empty() ? "" : ", ") + n;
      out_.reverts.push_back({k, lost});
      write_file(dir / "event.txt", "revert: stripped " + names + "\n");
      return true;  // previous unit stays; same prompt again
    }

    current_ = SourceUnit{entry_.id, std::move(candidate), Origin::llm(k), {}};
    compile_current(k);
    if (current_compiles_) {
      next.reset();
    } else {
      next = PendingPrompt{PromptKind::CompileError, {{"compiler_error", error_text_}, {"pseudocode", current_.code}}};
    }
    return true;
  }

  void finish(RefinementStatus status) {
    out_.status = status;
    out_.final_unit = current_;
    write_outputs();
  }

  void finish_exhausted() {
    if (last_compiled_) {
      bool sanitizer = false;
      for (const auto& v : last_verdicts_)
        if (v.status == VerdictStatus::SanitizerAbort) sanitizer = true;
      out_.status = sanitizer ? RefinementStatus::SanitizerUnfixed : RefinementStatus::CompiledButFailing;
      out_.final_unit = *last_compiled_;
    } else {
      out_.status = RefinementStatus::CompileBudgetExhausted;
      out_.final_unit = current_;
    }
    write_outputs();
  }

  void write_outputs() {
    write_file(program_dir_ / "final.c", out_.final_unit.code);
    nlohmann::json t = nlohmann::json::array();
    for (const auto& m : out_.transcript.messages())
      t.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    write_file(program_dir_ / "transcript.json", t.dump(2) + "\n");
  }

  const ProgramEntry& entry_;
  CompletionBackend& backend_;
  const PipelineConfig& config_;
  fs::path program_dir_;

  RefinementOutcome out_;
  SourceUnit current_;
  bool current_compiles_ = false;
  std::optional<fs::path> current_binary_;
  std::string error_text_;
  std::optional<SourceUnit> last_compiled_;
  std::vector<TestVerdict> last_verdicts_;
  int static_queries_ = 0;
};

}  // namespace

RefinementOutcome refine(const ProgramEntry& entry, CompletionBackend& backend, const PipelineConfig& config) {
  if (config.budget < 1) throw ConfigError("budget must be >= 1");
  return Refinement(entry, backend, config).run();
}

RefinementOutcome run_baseline(const ProgramEntry& entry, const std::optional<std::string>& header_hint,
                               const PipelineConfig& config) {
  RefinementOutcome out;
  out.program_id = entry.id;
  out.bucket = entry.bucket;
  out.source_tokens = entry.source_tokens;

  SourceUnit raw{entry.id, read_text_file(entry.pseudocode_path), {OriginKind::Decompiler, 0}, {}};
  out.final_unit = apply_decrule(std::move(raw), header_hint, config.rules);

  const fs::path dir = config.run_dir / entry.id / "baseline";
  CompileRequest req;
  req.unit = out.final_unit;
  req.sanitize = config.run_limits.sanitized;
  req.workdir = dir;
  req.time_limit_ms = config.compiler.timeout_ms;
  CompileResult r;
  try {
    r = compile(req, config.compiler);
  } catch (const CompileTimeout& e) {
    write_file(dir / "compile.txt", std::string("status: timeout\n") + e.what() + "\n");
    out.status = RefinementStatus::CompileFailed;
    return out;
  }
  write_file(dir / "compile.txt", compile_log(r));
  if (!r.success) {
    out.status = RefinementStatus::CompileFailed;
    return out;
  }
  RunLimits limits = config.run_limits;
  limits.scratch_dir = dir / "run";
  limits.archive_dir = dir;
  limits.source_code = out.final_unit.code;
  out.final_verdicts = run_tests(*r.binary_path, entry.test_cases, limits);
  out.verdict_log = out.final_verdicts;
  write_file(dir / "verdicts.json", verdicts_json(out.final_verdicts).dump(2) + "\n");
  bool pass = true;
  for (const auto& v : out.final_verdicts) {
    if (v.status != VerdictStatus::Pass) pass = false;
    if (v.status == VerdictStatus::SanitizerAbort) out.sanitizer_triggered = true;
  }
  out.status = pass ? RefinementStatus::Functional : RefinementStatus::CompiledButFailing;
  if (pass) out.success_at = 0;
  return out;
}

}  // namespace recomp
