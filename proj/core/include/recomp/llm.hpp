#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recomp/preprocess.hpp"

namespace recomp {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// Append-only conversation record. The system message, if any, is first
/// and set once.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::string system_prompt);

  /// Throws PreconditionViolation on empty content, a second System message,
  /// or a System message after other messages.
  void append(ChatMessage message);

  const std::vector<ChatMessage>& messages() const { return messages_; }
  std::size_t total_queries() const { return total_queries_; }
  bool empty() const { return messages_.empty(); }
  const ChatMessage& back() const { return messages_.back(); }

 private:
  std::vector<ChatMessage> messages_;
  std::size_t total_queries_ = 0;
};

enum class PromptKind { Initial, CompileError, OutputError, SanitizerError };

std::string_view to_string(PromptKind k);

/// The system prompt used for every conversation.
std::string_view default_system_prompt();

using PromptSlots = std::map<std::string, std::string>;

/// Slot names required by `kind`.
std::vector<std::string> required_slots(PromptKind kind);

/// Fills the template for `kind`. The pseudocode slot is wrapped in a fenced
/// code block (a fence longer than any backtick run inside it). Throws
/// MissingSlot.
ChatMessage render_prompt(PromptKind kind, const PromptSlots& slots);

/// Wraps code in a Markdown fence that cannot collide with its content.
std::string fence_code(std::string_view code, std::string_view language = "cpp");

/// True iff tokens(code) + tokens(system_prompt) < context_limit / 2.
bool admit(const SourceUnit& unit, std::string_view system_prompt, std::size_t context_limit);

/// Pulls candidate source out of a model reply: all fenced blocks
/// concatenated, or the reply minus leading/trailing prose lines when there
/// are no fences. Throws EmptyExtraction.
std::string extract_code(std::string_view response);

struct CompletionRequest {
  std::string program_id;
  /// 1-based ordinal of this query within the program's conversation.
  int ordinal = 1;
  std::vector<ChatMessage> messages;
};

/// Pluggable chat-completion backend. Implementations must tolerate
/// concurrent calls for different programs.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Returns the assistant reply. Throws BackendUnavailable,
  /// FixtureExhausted, or ContextOverflow.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Sends the transcript (or the supplied request view of it) to the backend
/// and returns the Assistant message. The caller appends it. Throws
/// PreconditionViolation when the conversation does not end with a User
/// message.
ChatMessage complete(const Transcript& transcript, CompletionBackend& backend, std::string_view program_id,
                     int ordinal, const std::vector<ChatMessage>* request_view = nullptr);

/// Serves `<dir>/<program_id>/<ordinal>.txt`.
class ReplayBackend : public CompletionBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir);
  std::string complete(const CompletionRequest& request) override;

 private:
  std::filesystem::path dir_;
};

/// Forwards to another backend and stores each reply in the replay layout.
class RecordingBackend : public CompletionBackend {
 public:
  RecordingBackend(std::unique_ptr<CompletionBackend> inner, std::filesystem::path dir);
  std::string complete(const CompletionRequest& request) override;

 private:
  std::unique_ptr<CompletionBackend> inner_;
  std::filesystem::path dir_;
  std::mutex mu_;
};

struct HttpBackendConfig {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo-0613";
  std::string api_key_env = "OPENAI_API_KEY";
  /// Passed through untouched when set; provider defaults otherwise.
  std::optional<double> temperature;
  std::optional<double> top_p;
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::milliseconds request_timeout{120000};
  /// Global cap on requests per minute across all workers; 0 = unlimited.
  double max_requests_per_minute = 0;
  std::uint64_t seed = 0;
};

/// OpenAI-compatible POST /chat/completions client.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;
  std::string complete(const CompletionRequest& request) override;

 private:
  struct State;
  HttpBackendConfig config_;
  std::unique_ptr<State> state_;
};

}  // namespace recomp
