#pragma once

#include <string>
#include <vector>

#include "clarify/agent_framework.hpp"
#include "clarify/core.hpp"
#include "clarify/llm_gateway.hpp"
#include "clarify/prompt_template.hpp"

namespace clarify {

inline constexpr const char* kQuestionPromptMarker = "CLARIFICATION QUESTION REQUEST";
inline constexpr const char* kAnswerPromptMarker = "ANSWER THE USER";
inline constexpr const char* kFallbackQuestion = "Which of the following do you mean?";
inline constexpr const char* kRephraseChoiceId = "rephrase";
inline constexpr const char* kRephraseChoiceLabel = "Let me rephrase";

extern const char* const kDefaultQuestionTemplate;
const std::vector<std::string>& question_placeholders();
PromptTemplate default_question_template();

// Candidates of detecting agents, registration order then evidence order,
// de-duplicated by id and cut at choice_cap. Falls back to a single free-text
// "Let me rephrase" choice when no detecting agent offered candidates.
// Throws ErrorKind::precondition without a detection or with choice_cap == 0.
std::vector<Choice> derive_choices(const DispatchReport& report, std::size_t choice_cap = kDefaultChoiceCap);

// Text up to and including the first '.', '?' or '!' that ends a sentence.
std::string first_sentence(std::string_view text);

// Never throws for LLM trouble; falls back to kFallbackQuestion.
ClarificationQuestion generate_question(const UserQuery& query, const DispatchReport& report,
                                        std::vector<Choice> choices, const LlmClient& llm,
                                        const PromptTemplate& tmpl = default_question_template(),
                                        std::size_t choice_cap = kDefaultChoiceCap);

// Annotates the original text with the user's answer. Throws
// ErrorKind::invalid_feedback for a choice id the question does not offer.
std::string refine_query(const UserQuery& query, const Feedback& feedback, const ClarificationQuestion& question);

std::vector<ChatMessage> build_answer_prompt(std::string_view refined_query);

// Returns the LLM's answer verbatim. Gateway errors propagate; an empty
// answer is reported as ErrorKind::gateway.
std::string finalize(std::string_view refined_query, const LlmClient& llm);

}  // namespace clarify
