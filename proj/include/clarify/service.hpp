#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "clarify/engine.hpp"
#include "clarify/eval.hpp"
#include "clarify/session_store.hpp"

namespace clarify {

struct ServiceReply {
  int http_status = 200;
  Json body;
};

int http_status_for(ErrorKind kind);
Json error_body(const Error& e);

// Session-level clarification loop on top of an Engine. Methods throw
// clarify::Error for client mistakes (unknown session, bad text, conflicts);
// a failed answering step is reported in the reply and recorded in the turn.
class ClarificationService {
 public:
  ClarificationService(std::shared_ptr<const Engine> engine, std::vector<FewShotExample> few_shot = {},
                       std::size_t eval_parallelism = 4);

  std::string create_session();

  // Supersedes a pending clarification on the same session (marked abandoned).
  ServiceReply post_query(const std::string& session_id, std::string_view text);
  ServiceReply post_feedback(const std::string& session_id, TurnId turn_id, const Feedback& feedback);

  [[nodiscard]] Json get_session(const std::string& session_id) const;
  [[nodiscard]] Json list_sessions() const;
  [[nodiscard]] Json list_agents() const;
  [[nodiscard]] Json run_eval(const std::filesystem::path& dataset_path, PipelineKind pipeline) const;

  SessionStore& store() noexcept { return store_; }
  [[nodiscard]] const Engine& engine() const noexcept { return *engine_; }

 private:
  std::shared_ptr<const Engine> engine_;
  std::vector<FewShotExample> few_shot_;
  std::size_t eval_parallelism_;
  SessionStore store_;
};

// Per-outcome summary used in query replies: status, detection, category and
// candidates, no timings.
Json evidence_summary(const std::vector<AgentOutcome>& outcomes);

}  // namespace clarify
