#include <algorithm>

#include "recomp/corpus.hpp"
#include "recomp/error.hpp"
#include "recomp/llm.hpp"

namespace recomp {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::Initial: return "Initial";
    case PromptKind::CompileError: return "CompileError";
    case PromptKind::OutputError: return "OutputError";
    case PromptKind::SanitizerError: return "SanitizerError";
  }
  return "Initial";
}

Transcript::Transcript(std::string system_prompt) { append({Role::System, std::move(system_prompt)}); }

void Transcript::append(ChatMessage message) {
  if (message.content.empty()) throw PreconditionViolation("chat message content must be nonempty");
  if (message.role == Role::System && !messages_.empty())
    throw PreconditionViolation("system message must come first and only once");
  if (message.role == Role::Assistant) ++total_queries_;
  messages_.push_back(std::move(message));
}

std::string_view default_system_prompt() {
  return "Generate linux compilable C++ code of the main and other functions in the supplied snippet without "
         "using goto, fix any missing headers and reducing the number of intermediate variable. Only reply the "
         "fixed source code. Do not explain anything and include any extra instructions, only print the fixed "
         "source code.";
}

std::vector<std::string> required_slots(PromptKind kind) {
  switch (kind) {
    case PromptKind::Initial: return {"pseudocode"};
    case PromptKind::CompileError: return {"compiler_error", "pseudocode"};
    case PromptKind::OutputError: return {"expected_input", "expected_output", "wrong_output", "pseudocode"};
    case PromptKind::SanitizerError: return {"type_of_memory_corruption", "statement", "pseudocode"};
  }
  return {};
}

std::string fence_code(std::string_view code, std::string_view language) {
  std::size_t longest = 0, run = 0;
  for (char c : code) {
    run = c == '`' ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  std::string fence(std::max<std::size_t>(3, longest + 1), '`');
  std::string out = fence;
  out.append(language);
  out.push_back('\n');
  out.append(code);
  if (!code.empty() && code.back() != '\n') out.push_back('\n');
  out += fence;
  return out;
}

namespace {

// Program I/O goes inline when it is a single line, fenced otherwise.
std::string format_io(const std::string& value) {
  std::string v = value;
  while (!v.empty() && v.back() == '\n') v.pop_back();
  if (v.empty()) return "(empty)";
  if (v.find('\n') == std::string::npos) return v;
  return "\n" + fence_code(v, "") + "\n";
}

}  // namespace

ChatMessage render_prompt(PromptKind kind, const PromptSlots& slots) {
  for (const auto& name : required_slots(kind))
    if (!slots.contains(name)) throw MissingSlot(name);
  auto slot = [&](const char* name) -> const std::string& { return slots.at(name); };
  const std::string code = fence_code(slot("pseudocode"));

  std::string content;
  switch (kind) {
    case PromptKind::Initial:
      content = code;
      break;
    case PromptKind::CompileError:
      content = "Please fix the following compilation errors in the source code:\n" + slot("compiler_error");
      if (!content.empty() && content.back() != '\n') content.push_back('\n');
      content += code;
      break;
    case PromptKind::OutputError:
      content = "The expected output of the program for input: " + format_io(slot("expected_input")) + " is " +
                format_io(slot("expected_output")) + ", but we got " + format_io(slot("wrong_output")) +
                ". Please fix the issue in the source code:\n" + code;
      break;
    case PromptKind::SanitizerError:
      content = "Please fix the " + slot("type_of_memory_corruption") + " triggered in " + slot("statement") + ":\n" +
                code;
      break;
  }
  return {Role::User, std::move(content)};
}

bool admit(const SourceUnit& unit, std::string_view system_prompt, std::size_t context_limit) {
  const std::size_t total = estimate_tokens(unit.code) + estimate_tokens(system_prompt);
  return 2 * total < context_limit;
}

ChatMessage complete(const Transcript& transcript, CompletionBackend& backend, std::string_view program_id,
                     int ordinal, const std::vector<ChatMessage>* request_view) {
  const auto& msgs = request_view ? *request_view : transcript.messages();
  if (msgs.empty() || msgs.back().role != Role::User)
    throw PreconditionViolation("conversation must end with a user message before completion");
  CompletionRequest req{std::string(program_id), ordinal, msgs};
  std::string reply = backend.complete(req);
  if (reply.empty()) throw BackendUnavailable("backend returned an empty reply");
  return {Role::Assistant, std::move(reply)};
}

}  // namespace recomp
