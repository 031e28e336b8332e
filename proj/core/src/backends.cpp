#include <fstream>
#include <sstream>

#include "recomp/error.hpp"
#include "recomp/llm.hpp"

namespace recomp {
namespace fs = std::filesystem;

ReplayBackend::ReplayBackend(fs::path dir) : dir_(std::move(dir)) {}

std::string ReplayBackend::complete(const CompletionRequest& request) {
  const fs::path file = dir_ / request.program_id / (std::to_string(request.ordinal) + ".txt");
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw FixtureExhausted("no replay response for " + request.program_id + " query " +
                           std::to_string(request.ordinal) + " (" + file.string() + ")");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RecordingBackend::RecordingBackend(std::unique_ptr<CompletionBackend> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::string RecordingBackend::complete(const CompletionRequest& request) {
  std::string reply = inner_->complete(request);
  const fs::path program_dir = dir_ / request.program_id;
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(program_dir, ec);
  std::ofstream out(program_dir / (std::to_string(request.ordinal) + ".txt"), std::ios::binary | std::ios::trunc);
  if (!out) throw InfrastructureError("cannot record response under " + program_dir.string());
  out << reply;
  return reply;
}

}  // namespace recomp
