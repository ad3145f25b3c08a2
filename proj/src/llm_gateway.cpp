#include "clarify/llm_gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

namespace clarify {

const char* to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw Error(ErrorKind::validation, "unknown chat role '" + std::string(name) + "'");
}

void CompletionRequest::validate() const {
  if (messages.empty()) throw Error(ErrorKind::validation, "completion request has no messages");
  for (const auto& m : messages) {
    if (m.content.empty()) throw Error(ErrorKind::validation, "chat message content must be non-empty");
  }
  if (!(temperature >= 0.0)) throw Error(ErrorKind::validation, "temperature must be >= 0");
  if (max_tokens <= 0) throw Error(ErrorKind::validation, "max_tokens must be positive");
  if (timeout.count() <= 0) throw Error(ErrorKind::validation, "timeout_ms must be positive");
}

const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::http: return "http";
    case BackendKind::scripted: return "scripted";
    case BackendKind::replay: return "replay";
  }
  return "unknown";
}

const char* to_string(GatewayFailure f) {
  switch (f) {
    case GatewayFailure::transport: return "transport";
    case GatewayFailure::http_status: return "http_status";
    case GatewayFailure::deadline: return "deadline";
    case GatewayFailure::bad_response: return "bad_response";
    case GatewayFailure::no_rule_match: return "no_rule_match";
    case GatewayFailure::replay_miss: return "replay_miss";
  }
  return "unknown";
}

std::string concatenate_prompt(const CompletionRequest& request) {
  std::string out;
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += request.messages[i].content;
  }
  return out;
}

std::string request_digest(const CompletionRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  const std::string canonical =
      Json{{"model", request.model}, {"temperature", request.temperature}, {"messages", std::move(messages)}}.dump();

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::internal, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// --- scripted ---

ScriptMatcher ScriptMatcher::contains(std::string needle) {
  if (needle.empty()) throw Error(ErrorKind::configuration, "script matcher substring must be non-empty");
  ScriptMatcher m;
  m.description_ = "contains \"" + needle + "\"";
  m.needles_.push_back(std::move(needle));
  return m;
}

ScriptMatcher ScriptMatcher::all_of(std::vector<std::string> needles) {
  if (needles.empty() || std::any_of(needles.begin(), needles.end(), [](const auto& n) { return n.empty(); })) {
    throw Error(ErrorKind::configuration, "script matcher 'all_of' needs non-empty substrings");
  }
  ScriptMatcher m;
  m.description_ = "all_of [" + Json(needles).dump() + "]";
  m.needles_ = std::move(needles);
  return m;
}

ScriptMatcher ScriptMatcher::pattern(const std::string& regex) {
  ScriptMatcher m;
  try {
    m.regex_ = std::make_shared<const std::regex>(regex, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw Error(ErrorKind::configuration, "invalid script pattern '" + regex + "': " + e.what());
  }
  m.description_ = "pattern /" + regex + "/";
  return m;
}

bool ScriptMatcher::matches(std::string_view prompt) const {
  if (regex_) return std::regex_search(prompt.begin(), prompt.end(), *regex_);
  return std::all_of(needles_.begin(), needles_.end(),
                     [&](const std::string& n) { return prompt.find(n) != std::string_view::npos; });
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) : rules_(std::move(rules)) {
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const ScriptRule& a, const ScriptRule& b) { return a.priority > b.priority; });
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const Json& rules) {
  if (!rules.is_array()) throw Error(ErrorKind::configuration, "script must be a JSON array of rules");
  std::vector<ScriptRule> parsed;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const std::string where = "script rule " + std::to_string(i);
    if (!r.is_object() || !r.contains("response") || !r.at("response").is_string()) {
      throw Error(ErrorKind::configuration, where + ": needs a string 'response'");
    }
    const int kinds = int(r.contains("contains")) + int(r.contains("all_of")) + int(r.contains("pattern"));
    if (kinds != 1) {
      throw Error(ErrorKind::configuration, where + ": needs exactly one of 'contains', 'all_of', 'pattern'");
    }
    try {
      ScriptMatcher matcher = r.contains("contains")   ? ScriptMatcher::contains(r.at("contains").get<std::string>())
                              : r.contains("all_of") ? ScriptMatcher::all_of(r.at("all_of").get<std::vector<std::string>>())
                                                     : ScriptMatcher::pattern(r.at("pattern").get<std::string>());
      parsed.push_back({std::move(matcher), r.at("response").get<std::string>(), r.value("priority", 0)});
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::configuration, where + ": " + e.what());
    }
  }
  return std::make_shared<ScriptedBackend>(std::move(parsed));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::configuration, "cannot open script file " + path.string());
  Json rules;
  try {
    rules = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::configuration, "script file " + path.string() + ": " + e.what());
  }
  return from_json(rules);
}

Completion ScriptedBackend::complete(const CompletionRequest& request) {
  request.validate();
  ++calls_;
  const std::string prompt = concatenate_prompt(request);
  for (const auto& rule : rules_) {
    if (rule.matcher.matches(prompt)) return {rule.response, {}};
  }
  std::string preview = prompt.substr(0, 160);
  throw GatewayError(GatewayFailure::no_rule_match, "no script rule matches prompt: " + preview);
}

// --- record / replay ---

RecordingGateway::RecordingGateway(std::shared_ptr<LlmGateway> inner, std::filesystem::path transcript)
    : inner_(std::move(inner)), transcript_(std::move(transcript)) {
  if (!inner_ || inner_->backend() != BackendKind::http) {
    throw Error(ErrorKind::configuration, "record mode requires the http backend");
  }
}

Completion RecordingGateway::complete(const CompletionRequest& request) {
  Completion result = inner_->complete(request);
  const std::string line = Json{{"digest", request_digest(request)}, {"response", result.text}}.dump();
  std::lock_guard lock(mutex_);
  std::ofstream out(transcript_, std::ios::app);
  if (!out) throw Error(ErrorKind::internal, "cannot append to transcript " + transcript_.string());
  out << line << '\n';
  return result;
}

ReplayGateway::ReplayGateway(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw Error(ErrorKind::configuration, "replay transcript not found: " + transcript.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const Json record = Json::parse(line);
      // First recording of a digest wins.
      responses_.emplace(record.at("digest").get<std::string>(), record.at("response").get<std::string>());
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::data,
                  transcript.string() + ":" + std::to_string(line_no) + ": malformed transcript record: " + e.what());
    }
  }
}

Completion ReplayGateway::complete(const CompletionRequest& request) {
  request.validate();
  const std::string digest = request_digest(request);
  auto it = responses_.find(digest);
  if (it == responses_.end()) {
    throw GatewayError(GatewayFailure::replay_miss, "replay transcript has no response for digest " + digest);
  }
  return {it->second, {}};
}

std::shared_ptr<LlmGateway> record_replay(TranscriptMode mode, const std::filesystem::path& transcript,
                                          std::shared_ptr<LlmGateway> inner) {
  if (mode == TranscriptMode::record) return std::make_shared<RecordingGateway>(std::move(inner), transcript);
  return std::make_shared<ReplayGateway>(transcript);
}

Completion LlmClient::complete(std::vector<ChatMessage> messages) const {
  if (!gateway) throw Error(ErrorKind::configuration, "no LLM gateway configured");
  CompletionRequest request{std::move(messages), settings.model, settings.temperature, settings.max_tokens,
                            settings.timeout};
  return gateway->complete(request);
}

}  // namespace clarify
