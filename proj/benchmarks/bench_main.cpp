#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "recomp/compilebox.hpp"
#include "recomp/llm.hpp"
#include "recomp/preprocess.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every corpus source concatenated, repeated to reach a few hundred lines.
const std::string& pseudocode() {
  static const std::string text = [] {
    std::string all;
    for (const auto& e : fs::directory_iterator(fs::path(RECOMP_BENCH_DATA_DIR) / "corpus/src"))
      all += slurp(e.path()) + "\n";
    std::string out;
    for (int i = 0; i < 4; ++i) out += all;
    return out;
  }();
  return text;
}

const std::string& stderr_text() {
  static const std::string text = [] {
    std::string all;
    for (const auto& e : fs::directory_iterator(fs::path(RECOMP_BENCH_DATA_DIR) / "diagnostics/captured"))
      if (e.path().extension() == ".stderr") all += slurp(e.path());
    return all;
  }();
  return text;
}

void BM_Preprocess(benchmark::State& state) {
  const recomp::SourceUnit unit{"bench", pseudocode(), {}, {}};
  for (auto _ : state) benchmark::DoNotOptimize(recomp::preprocess(unit));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * unit.code.size()));
}
BENCHMARK(BM_Preprocess);

void BM_IndexFunctions(benchmark::State& state) {
  const std::string code = recomp::preprocess({"bench", pseudocode(), {}, {}}).code;
  for (auto _ : state) benchmark::DoNotOptimize(recomp::index_functions(code));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * code.size()));
}
BENCHMARK(BM_IndexFunctions);

void BM_ParseDiagnostics(benchmark::State& state) {
  const std::string& raw = stderr_text();
  for (auto _ : state) benchmark::DoNotOptimize(recomp::parse_diagnostics(raw));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * raw.size()));
}
BENCHMARK(BM_ParseDiagnostics);

void BM_ExtractCode(benchmark::State& state) {
  const std::string reply = "Here is the corrected program:\n\n" + recomp::fence_code(pseudocode()) +
                            "\n\nThis should compile cleanly now.";
  for (auto _ : state) benchmark::DoNotOptimize(recomp::extract_code(reply));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * reply.size()));
}
BENCHMARK(BM_ExtractCode);

}  // namespace
BENCHMARK_MAIN();
