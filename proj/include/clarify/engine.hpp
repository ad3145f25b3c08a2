#pragma once

#include <memory>
#include <optional>
#include <string>

#include "clarify/agent_framework.hpp"
#include "clarify/clarifier.hpp"
#include "clarify/core.hpp"
#include "clarify/decision.hpp"
#include "clarify/knowledge.hpp"

namespace clarify {

struct EngineOptions {
  std::size_t choice_cap = kDefaultChoiceCap;
  PromptTemplate decision_template = default_decision_template();
  PromptTemplate question_template = default_question_template();
};

struct Analysis {
  DispatchReport report;
  DecisionResult decision;
};

struct TurnResult {
  DispatchReport report;
  Decision decision;
  std::optional<ClarificationQuestion> question;  // when clarification is needed
  std::optional<std::string> answer;              // when it is not
  std::optional<std::string> error;               // answering failed
};

struct FeedbackResult {
  std::string refined_query;
  std::optional<std::string> answer;
  std::optional<std::string> error;
};

// Query -> agents -> decision -> question or answer. Immutable after
// construction and safe to share between threads.
class Engine {
 public:
  Engine(AgentRegistry registry, std::shared_ptr<const KnowledgeContext> context, EngineOptions options = {});

  [[nodiscard]] Analysis analyze(const UserQuery& query) const;
  [[nodiscard]] TurnResult run_turn(const UserQuery& query) const;
  // Throws ErrorKind::invalid_feedback for an unknown choice id.
  [[nodiscard]] FeedbackResult apply_feedback(const UserQuery& query, const Feedback& feedback,
                                              const ClarificationQuestion& question) const;

  [[nodiscard]] const AgentRegistry& registry() const noexcept { return registry_; }
  [[nodiscard]] const KnowledgeContext& context() const noexcept { return *context_; }
  [[nodiscard]] const LlmClient& llm() const noexcept { return context_->llm; }
  [[nodiscard]] const EngineOptions& options() const noexcept { return options_; }

 private:
  AgentRegistry registry_;
  std::shared_ptr<const KnowledgeContext> context_;
  EngineOptions options_;
};

}  // namespace clarify
