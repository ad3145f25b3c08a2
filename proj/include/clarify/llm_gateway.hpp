#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "clarify/core.hpp"

namespace clarify {

enum class Role { system, user, assistant };

const char* to_string(Role r);
Role parse_role(std::string_view name);

struct ChatMessage {
  Role role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 512;
  std::chrono::milliseconds timeout{30000};

  // Throws ErrorKind::validation: no messages, an empty message, negative
  // temperature, non-positive max_tokens or timeout.
  void validate() const;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
};

struct Completion {
  std::string text;
  Usage usage;
};

enum class BackendKind { http, scripted, replay };

const char* to_string(BackendKind k);

enum class GatewayFailure {
  transport,      // could not connect / read / write
  http_status,    // non-2xx reply
  deadline,       // timeout_ms elapsed
  bad_response,   // 2xx but not a chat-completions body
  no_rule_match,  // scripted backend: unanticipated prompt
  replay_miss,    // replay transcript has no entry for the request digest
};

const char* to_string(GatewayFailure f);

class GatewayError : public Error {
 public:
  GatewayError(GatewayFailure failure, const std::string& message, int http_status = 0)
      : Error(ErrorKind::gateway, message), failure_(failure), http_status_(http_status) {}

  [[nodiscard]] GatewayFailure failure() const noexcept { return failure_; }
  [[nodiscard]] int http_status() const noexcept { return http_status_; }

 private:
  GatewayFailure failure_;
  int http_status_;
};

class LlmGateway {
 public:
  virtual ~LlmGateway() = default;

  // Must be safe to call from several threads at once.
  virtual Completion complete(const CompletionRequest& request) = 0;
  [[nodiscard]] virtual BackendKind backend() const = 0;
};

// Message contents joined with '\n'; this is what script matchers see.
std::string concatenate_prompt(const CompletionRequest& request);

// Hex SHA-256 over the canonical JSON of (model, temperature, messages).
std::string request_digest(const CompletionRequest& request);

// ---------------------------------------------------------------------------
// Scripted backend

class ScriptMatcher {
 public:
  static ScriptMatcher contains(std::string needle);
  static ScriptMatcher all_of(std::vector<std::string> needles);
  static ScriptMatcher pattern(const std::string& regex);

  [[nodiscard]] bool matches(std::string_view prompt) const;
  [[nodiscard]] const std::string& describe() const noexcept { return description_; }

 private:
  ScriptMatcher() = default;

  std::vector<std::string> needles_;
  std::shared_ptr<const std::regex> regex_;
  std::string description_;
};

struct ScriptRule {
  ScriptMatcher matcher;
  std::string response;
  int priority = 0;
};

// Returns the response of the highest-priority matching rule; ties go to the
// earliest registered rule. Rules are fixed at construction.
class ScriptedBackend final : public LlmGateway {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules);

  // Script file: JSON array of {"contains"|"all_of"|"pattern": ..., "response", "priority"?}.
  static std::shared_ptr<ScriptedBackend> load(const std::filesystem::path& path);
  static std::shared_ptr<ScriptedBackend> from_json(const Json& rules);

  Completion complete(const CompletionRequest& request) override;
  [[nodiscard]] BackendKind backend() const override { return BackendKind::scripted; }

  [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }
  [[nodiscard]] std::size_t rule_count() const noexcept { return rules_.size(); }

 private:
  std::vector<ScriptRule> rules_;  // stable-sorted by descending priority
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// HTTP chat-completions backend

struct HttpBackendOptions {
  std::string base_url;     // e.g. https://api.openai.com/v1
  std::string api_key_env;  // empty: send no Authorization header
  std::string path = "/chat/completions";
};

class HttpBackend final : public LlmGateway {
 public:
  // Throws ErrorKind::configuration for a malformed URL or an unset key variable.
  explicit HttpBackend(HttpBackendOptions options);

  Completion complete(const CompletionRequest& request) override;
  [[nodiscard]] BackendKind backend() const override { return BackendKind::http; }

  [[nodiscard]] static Json request_body(const CompletionRequest& request);
  [[nodiscard]] static Completion parse_response(const std::string& body);

 private:
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // path component of base_url
  std::string path_;
  std::string bearer_;
};

// ---------------------------------------------------------------------------
// Record / replay

enum class TranscriptMode { record, replay };

// Appends {"digest","response"} JSON lines for every successful call.
class RecordingGateway final : public LlmGateway {
 public:
  RecordingGateway(std::shared_ptr<LlmGateway> inner, std::filesystem::path transcript);

  Completion complete(const CompletionRequest& request) override;
  [[nodiscard]] BackendKind backend() const override { return inner_->backend(); }

 private:
  std::shared_ptr<LlmGateway> inner_;
  std::filesystem::path transcript_;
  std::mutex mutex_;
};

class ReplayGateway final : public LlmGateway {
 public:
  explicit ReplayGateway(const std::filesystem::path& transcript);

  Completion complete(const CompletionRequest& request) override;
  [[nodiscard]] BackendKind backend() const override { return BackendKind::replay; }

  [[nodiscard]] std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
};

// record: wraps `inner`, which must be an http backend.
// replay: `inner` is ignored; the transcript must exist.
std::shared_ptr<LlmGateway> record_replay(TranscriptMode mode, const std::filesystem::path& transcript,
                                          std::shared_ptr<LlmGateway> inner = nullptr);

// ---------------------------------------------------------------------------

struct LlmSettings {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 512;
  std::chrono::milliseconds timeout{30000};
};

// A gateway plus the request parameters every pipeline call shares.
struct LlmClient {
  std::shared_ptr<LlmGateway> gateway;
  LlmSettings settings;

  Completion complete(std::vector<ChatMessage> messages) const;
};

}  // namespace clarify
