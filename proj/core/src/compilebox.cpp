#include "recomp/compilebox.hpp"

#include <fstream>

#include "recomp/error.hpp"
#include "recomp/process.hpp"

namespace recomp {
namespace fs = std::filesystem;

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "error";
}

std::size_t CompileResult::error_count() const {
  std::size_t n = 0;
  for (const auto& d : diagnostics)
    if (d.severity == Severity::Error) ++n;
  return n;
}

CompileResult compile(const CompileRequest& request, const CompilerConfig& config) {
  auto compiler = find_executable(config.path);
  if (!compiler) throw CompilerNotFound("compiler not found: " + config.path);

  std::error_code ec;
  fs::create_directories(request.workdir, ec);
  if (ec || !fs::is_directory(request.workdir)) throw WorkdirError("cannot create workdir " + request.workdir.string());

  const fs::path source = request.workdir / "candidate.c";
  const fs::path binary = request.workdir / "candidate";
  {
    std::ofstream out(source, std::ios::binary | std::ios::trunc);
    if (!out) throw WorkdirError("cannot write " + source.string());
    out << request.unit.code;
    if (!out) throw WorkdirError("cannot write " + source.string());
  }
  fs::remove(binary, ec);

  std::vector<std::string> argv{compiler->string()};
  argv.insert(argv.end(), config.base_flags.begin(), config.base_flags.end());
  if (request.sanitize) argv.insert(argv.end(), config.sanitize_flags.begin(), config.sanitize_flags.end());
  argv.insert(argv.end(), request.extra_flags.begin(), request.extra_flags.end());
  if (!config.language.empty()) {
    argv.push_back("-x");
    argv.push_back(config.language);
  }
  argv.push_back("candidate.c");
  if (!config.language.empty()) {
    argv.push_back("-x");
    argv.push_back("none");
  }
  argv.push_back("-o");
  argv.push_back("candidate");

  ProcessOptions opts;
  opts.cwd = request.workdir;
  int limit = request.time_limit_ms > 0 ? request.time_limit_ms : config.timeout_ms;
  opts.timeout = std::chrono::milliseconds(limit);
  // Diagnostics must stay parseable: no colour, no localisation.
  opts.env = {"LC_ALL=C", "LANG=C", "GCC_COLORS=", "TERM=dumb"};

  ProcessResult pr = run_process(argv, opts);
  if (pr.timed_out) throw CompileTimeout("compilation exceeded " + std::to_string(limit) + " ms");

  CompileResult result;
  result.raw_stderr = std::move(pr.stderr_text);
  if (!pr.stdout_text.empty()) {
    if (!result.raw_stderr.empty() && result.raw_stderr.back() != '\n') result.raw_stderr.push_back('\n');
    result.raw_stderr += pr.stdout_text;
  }
  result.duration_ms = static_cast<long>(pr.duration.count());
  result.diagnostics = parse_diagnostics(result.raw_stderr);
  result.success = pr.exit_code && *pr.exit_code == 0 && fs::exists(binary);
  if (result.success) result.binary_path = fs::absolute(binary);
  else if (result.raw_stderr.empty())
    result.raw_stderr = "compiler exited abnormally" +
                        (pr.term_signal ? " (signal " + std::to_string(*pr.term_signal) + ")"
                                        : (pr.exit_code ? " (status " + std::to_string(*pr.exit_code) + ")" : ""));
  return result;
}

}  // namespace recomp
