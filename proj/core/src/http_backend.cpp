#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "recomp/error.hpp"
#include "recomp/llm.hpp"

namespace recomp {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool looks_like_context_overflow(const std::string& body) {
  return body.find("context_length_exceeded") != std::string::npos ||
         body.find("maximum context length") != std::string::npos;
}

bool transient_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

}  // namespace

struct HttpBackend::State {
  std::mutex rate_mu;
  std::chrono::steady_clock::time_point next_slot{};
  std::mutex rng_mu;
  std::mt19937_64 rng;

  void wait_for_slot(double per_minute) {
    if (per_minute <= 0) return;
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / per_minute));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(rate_mu);
      auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_slot);
      next_slot = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

  std::chrono::milliseconds jitter(std::chrono::milliseconds base) {
    std::lock_guard lock(rng_mu);
    std::uniform_int_distribution<long> d(0, std::max<long>(1, base.count() / 4));
    return std::chrono::milliseconds(d(rng));
  }
};

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)), state_(std::make_unique<State>()) {
  state_->rng.seed(config_.seed);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const CompletionRequest& request) {
  const ParsedUrl url = parse_url(config_.url);
  const char* key = config_.api_key_env.empty() ? nullptr : std::getenv(config_.api_key_env.c_str());

  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages)
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  if (config_.temperature) body["temperature"] = *config_.temperature;
  if (config_.top_p) body["top_p"] = *config_.top_p;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff + state_->jitter(backoff));
      backoff = std::min(config_.max_backoff, backoff * 2);
    }
    state_->wait_for_slot(config_.max_requests_per_minute);

    httplib::Client client(url.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout).count();
    client.set_read_timeout(static_cast<time_t>(secs), 0);
    client.set_write_timeout(static_cast<time_t>(secs), 0);
    client.set_connection_timeout(10, 0);
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      nlohmann::json reply;
      try {
        reply = nlohmann::json::parse(res->body);
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw BackendUnavailable("response content is not a string");
        return content.get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("malformed completion response: ") + e.what());
      }
    }
    if (looks_like_context_overflow(res->body))
      throw ContextOverflow("backend rejected request as too long: " + res->body.substr(0, 200));
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (!transient_status(res->status)) break;
  }
  throw BackendUnavailable("completion failed for " + request.program_id + ": " + last_error);
}

}  // namespace recomp
