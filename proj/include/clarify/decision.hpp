#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clarify/agent_framework.hpp"
#include "clarify/core.hpp"
#include "clarify/llm_gateway.hpp"
#include "clarify/prompt_template.hpp"

namespace clarify {

// Heading every decision prompt carries; scripted backends key on it.
inline constexpr const char* kDecisionPromptMarker = "AMBIGUITY EVIDENCE";

// Built-in decision template (placeholders {query}, {evidence_blocks},
// {grounding_blocks}); data/prompts/decision.txt ships the same text.
extern const char* const kDefaultDecisionTemplate;
const std::vector<std::string>& decision_placeholders();
PromptTemplate default_decision_template();

// One block per detecting agent, registration order. Each starts with
// "[evidence agent=<id> ...]".
std::string format_evidence_blocks(const DispatchReport& report);

// One block per completed grounding outcome with non-empty candidates.
std::string format_grounding_blocks(const DispatchReport& report);

// Throws ErrorKind::precondition when nothing was detected.
std::vector<ChatMessage> assemble_evidence_prompt(const UserQuery& query, const DispatchReport& report,
                                                  const PromptTemplate& tmpl = default_decision_template());

// NEEDED / NOT_NEEDED at the start of the reply (case-insensitive, leading
// whitespace ignored). nullopt when the reply fits neither.
struct ParsedDecision {
  std::optional<DecisionLabel> label;
  std::string reason;
};
ParsedDecision parse_decision_reply(std::string_view reply);

struct DecisionResult {
  Decision decision;
  std::optional<std::string> gateway_error;  // set when the LLM call failed
};

// Never throws for LLM trouble: no detection short-circuits to not_needed
// without a call; failures and unparseable replies fall back to not_needed.
DecisionResult decide_detailed(const UserQuery& query, const DispatchReport& report, const LlmClient& llm,
                               const PromptTemplate& tmpl = default_decision_template());

Decision decide(const UserQuery& query, const DispatchReport& report, const LlmClient& llm,
                const PromptTemplate& tmpl = default_decision_template());

}  // namespace clarify
