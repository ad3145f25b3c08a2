#include "clarify/clarifier.hpp"

#include <algorithm>
#include <cctype>

#include "clarify/decision.hpp"

namespace clarify {

const char* const kDefaultQuestionTemplate = R"([system]
CLARIFICATION QUESTION REQUEST
You write one short clarification question for an enterprise AI assistant.
The question must let the user pick between the options listed below. Reply with the question only, as a single sentence.
[user]
User query: {query}

Detected evidence:
{evidence_blocks}

Options the user can choose from:
{choice_labels}
)";

const std::vector<std::string>& question_placeholders() {
  static const std::vector<std::string> names{"query", "evidence_blocks", "choice_labels"};
  return names;
}

PromptTemplate default_question_template() {
  static const PromptTemplate tmpl = PromptTemplate::parse(kDefaultQuestionTemplate, question_placeholders());
  return tmpl;
}

std::vector<Choice> derive_choices(const DispatchReport& report, std::size_t choice_cap) {
  if (!report.any_detected()) throw Error(ErrorKind::precondition, "choices require at least one detecting agent");
  if (choice_cap == 0) throw Error(ErrorKind::precondition, "choice_cap must be at least 1");
  std::vector<Choice> choices;
  for (const auto& o : report.outcomes) {
    if (!o.detected()) continue;
    for (const auto& c : o.verdict->evidence()->candidates()) {
      if (choices.size() == choice_cap) return choices;
      const bool seen = std::any_of(choices.begin(), choices.end(), [&](const Choice& x) { return x.id == c.id; });
      if (!seen) choices.push_back({c.id, c.label, c.id});
    }
  }
  if (choices.empty()) choices.push_back({kRephraseChoiceId, kRephraseChoiceLabel, ""});
  return choices;
}

std::string first_sentence(std::string_view text) {
  const std::string t = trim(text);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (c != '.' && c != '?' && c != '!') continue;
    if (i + 1 == t.size() || std::isspace(static_cast<unsigned char>(t[i + 1]))) return t.substr(0, i + 1);
  }
  return t;
}

ClarificationQuestion generate_question(const UserQuery& query, const DispatchReport& report,
                                        std::vector<Choice> choices, const LlmClient& llm,
                                        const PromptTemplate& tmpl, std::size_t choice_cap) {
  if (choices.empty()) throw Error(ErrorKind::precondition, "generate_question needs at least one choice");
  std::string labels;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    labels += std::to_string(i + 1) + ". " + choices[i].label + "\n";
  }
  std::string text;
  try {
    const auto messages = tmpl.render({{"query", query.text()},
                                       {"evidence_blocks", format_evidence_blocks(report)},
                                       {"choice_labels", labels}});
    text = first_sentence(llm.complete(messages).text);
  } catch (const std::exception&) {
    text.clear();
  }
  if (text.empty()) text = kFallbackQuestion;
  return ClarificationQuestion(std::move(text), std::move(choices), choice_cap);
}

std::string refine_query(const UserQuery& query, const Feedback& feedback, const ClarificationQuestion& question) {
  if (const auto* selected = std::get_if<SelectedChoice>(&feedback.value())) {
    const Choice* choice = question.find_choice(selected->choice_id);
    if (choice == nullptr) {
      throw Error(ErrorKind::invalid_feedback, "choice '" + selected->choice_id + "' is not offered by this question");
    }
    return query.text() + " (referring to: " + choice->label + ")";
  }
  return query.text() + " (clarification: " + std::get<FreeText>(feedback.value()).text + ")";
}

std::vector<ChatMessage> build_answer_prompt(std::string_view refined_query) {
  return {{Role::system, std::string(kAnswerPromptMarker) +
                             "\nYou are an enterprise AI assistant. Answer the user's request directly and "
                             "concisely. Any clarification the user gave appears in parentheses."},
          {Role::user, std::string(refined_query)}};
}

std::string finalize(std::string_view refined_query, const LlmClient& llm) {
  std::string answer = llm.complete(build_answer_prompt(refined_query)).text;
  if (trim(answer).empty()) throw Error(ErrorKind::gateway, "the answering LLM returned an empty response");
  return answer;
}

}  // namespace clarify
