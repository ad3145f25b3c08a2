#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "clarify/error.hpp"

namespace clarify {

using Json = nlohmann::json;
using TurnId = std::uint64_t;

inline constexpr std::size_t kMaxQueryChars = 4096;
inline constexpr std::size_t kDefaultChoiceCap = 2;

// Lowercases ASCII, splits on whitespace and ASCII punctuation, drops
// punctuation-only pieces. Bytes >= 0x80 are kept as word characters so
// UTF-8 text passes through unsplit.
std::vector<std::string> tokenize(std::string_view text);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

std::string trim(std::string_view text);

class UserQuery {
 public:
  [[nodiscard]] const std::string& text() const noexcept { return text_; }
  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  [[nodiscard]] TurnId turn_id() const noexcept { return turn_id_; }

  friend UserQuery validate_query(std::string_view text, TurnId turn_id);

 private:
  UserQuery(std::string text, std::vector<std::string> tokens, TurnId turn_id)
      : text_(std::move(text)), tokens_(std::move(tokens)), turn_id_(turn_id) {}

  std::string text_;
  std::vector<std::string> tokens_;
  TurnId turn_id_;
};

// Trims the text and rejects empty or over-long input (ErrorKind::validation).
UserQuery validate_query(std::string_view text, TurnId turn_id = 0);

enum class AmbiguityCategory { contextual, syntactic, aleatoric };

const char* to_string(AmbiguityCategory c);
// Throws ErrorKind::validation on anything outside the closed set.
AmbiguityCategory parse_category(std::string_view name);

enum class EvidenceKind { generic, product, entity, grounding };

const char* to_string(EvidenceKind k);
EvidenceKind parse_evidence_kind(std::string_view name);

struct Span {
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  std::string surface;

  bool operator==(const Span&) const = default;
};

struct Candidate {
  std::string id;
  std::string label;

  bool operator==(const Candidate&) const = default;
};

class Evidence {
 public:
  // Rejects spans that fall outside [0, token_count), overlap, or are out of
  // order, and duplicate candidate ids.
  Evidence(std::string agent_id, EvidenceKind kind,
           std::optional<AmbiguityCategory> category, std::vector<Span> spans,
           std::vector<Candidate> candidates, std::string rationale,
           std::size_t token_count);

  [[nodiscard]] const std::string& agent_id() const noexcept { return agent_id_; }
  [[nodiscard]] EvidenceKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::optional<AmbiguityCategory>& category() const noexcept { return category_; }
  [[nodiscard]] const std::vector<Span>& spans() const noexcept { return spans_; }
  [[nodiscard]] const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
  [[nodiscard]] const std::string& rationale() const noexcept { return rationale_; }

  bool operator==(const Evidence&) const = default;

 private:
  std::string agent_id_;
  EvidenceKind kind_;
  std::optional<AmbiguityCategory> category_;
  std::vector<Span> spans_;
  std::vector<Candidate> candidates_;
  std::string rationale_;
};

class AgentVerdict {
 public:
  AgentVerdict(std::string agent_id, bool detected, std::optional<Evidence> evidence);

  static AgentVerdict none(std::string agent_id) { return {std::move(agent_id), false, std::nullopt}; }

  [[nodiscard]] const std::string& agent_id() const noexcept { return agent_id_; }
  [[nodiscard]] bool detected() const noexcept { return detected_; }
  [[nodiscard]] const std::optional<Evidence>& evidence() const noexcept { return evidence_; }

  bool operator==(const AgentVerdict&) const = default;

 private:
  std::string agent_id_;
  bool detected_;
  std::optional<Evidence> evidence_;
};

enum class DecisionLabel { needed, not_needed };

const char* to_string(DecisionLabel l);
DecisionLabel parse_decision_label(std::string_view name);

class Decision {
 public:
  // llm_consulted == false is only valid with not_needed.
  Decision(DecisionLabel label, std::string rationale, bool llm_consulted);

  [[nodiscard]] DecisionLabel label() const noexcept { return label_; }
  [[nodiscard]] const std::string& rationale() const noexcept { return rationale_; }
  [[nodiscard]] bool llm_consulted() const noexcept { return llm_consulted_; }
  [[nodiscard]] bool needed() const noexcept { return label_ == DecisionLabel::needed; }

  bool operator==(const Decision&) const = default;

 private:
  DecisionLabel label_;
  std::string rationale_;
  bool llm_consulted_;
};

struct Choice {
  std::string id;
  std::string label;
  std::string payload;  // candidate id, empty for the free-text choice

  bool operator==(const Choice&) const = default;
};

class ClarificationQuestion {
 public:
  ClarificationQuestion(std::string text, std::vector<Choice> choices,
                        std::size_t choice_cap = kDefaultChoiceCap);

  [[nodiscard]] const std::string& text() const noexcept { return text_; }
  [[nodiscard]] const std::vector<Choice>& choices() const noexcept { return choices_; }
  [[nodiscard]] const Choice* find_choice(std::string_view id) const;

  bool operator==(const ClarificationQuestion&) const = default;

 private:
  std::string text_;
  std::vector<Choice> choices_;
};

struct SelectedChoice {
  std::string choice_id;
  bool operator==(const SelectedChoice&) const = default;
};

struct FreeText {
  std::string text;
  bool operator==(const FreeText&) const = default;
};

// Exactly one of the two variants; empty payloads are rejected.
class Feedback {
 public:
  static Feedback choice(std::string choice_id);
  static Feedback free_text(std::string text);

  [[nodiscard]] bool is_choice() const noexcept { return std::holds_alternative<SelectedChoice>(value_); }
  [[nodiscard]] const std::variant<SelectedChoice, FreeText>& value() const noexcept { return value_; }

  bool operator==(const Feedback&) const = default;

 private:
  explicit Feedback(std::variant<SelectedChoice, FreeText> v) : value_(std::move(v)) {}
  std::variant<SelectedChoice, FreeText> value_;
};

// JSON views of the core types. Parsing re-runs every constructor check.
Json to_json(const Evidence& e);
Evidence evidence_from_json(const Json& j, std::size_t token_count);
Json to_json(const AgentVerdict& v);
AgentVerdict verdict_from_json(const Json& j, std::size_t token_count);
Json to_json(const Decision& d);
Decision decision_from_json(const Json& j);
Json to_json(const Choice& c);
Json to_json(const ClarificationQuestion& q);
ClarificationQuestion question_from_json(const Json& j);
Json to_json(const Feedback& f);
Feedback feedback_from_json(const Json& j);

}  // namespace clarify
