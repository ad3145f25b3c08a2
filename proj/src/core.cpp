#include "clarify/core.hpp"

#include <algorithm>
#include <set>

namespace clarify {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::invalid_feedback: return "invalid_feedback";
    case ErrorKind::gateway: return "gateway";
    case ErrorKind::data: return "data";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (is_word_byte(static_cast<unsigned char>(ch))) {
      current.push_back(ascii_lower(ch));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

UserQuery validate_query(std::string_view text, TurnId turn_id) {
  std::string trimmed = trim(text);
  if (trimmed.empty()) {
    throw Error(ErrorKind::validation, "query text must be non-empty after trimming");
  }
  if (utf8_length(trimmed) > kMaxQueryChars) {
    throw Error(ErrorKind::validation,
                "query text exceeds the maximum length of " + std::to_string(kMaxQueryChars) + " characters");
  }
  auto tokens = tokenize(trimmed);
  return UserQuery(std::move(trimmed), std::move(tokens), turn_id);
}

const char* to_string(AmbiguityCategory c) {
  switch (c) {
    case AmbiguityCategory::contextual: return "contextual";
    case AmbiguityCategory::syntactic: return "syntactic";
    case AmbiguityCategory::aleatoric: return "aleatoric";
  }
  return "unknown";
}

AmbiguityCategory parse_category(std::string_view name) {
  if (name == "contextual") return AmbiguityCategory::contextual;
  if (name == "syntactic") return AmbiguityCategory::syntactic;
  if (name == "aleatoric") return AmbiguityCategory::aleatoric;
  throw Error(ErrorKind::validation, "unknown ambiguity category '" + std::string(name) + "'");
}

const char* to_string(EvidenceKind k) {
  switch (k) {
    case EvidenceKind::generic: return "generic";
    case EvidenceKind::product: return "product";
    case EvidenceKind::entity: return "entity";
    case EvidenceKind::grounding: return "grounding";
  }
  return "unknown";
}

EvidenceKind parse_evidence_kind(std::string_view name) {
  if (name == "generic") return EvidenceKind::generic;
  if (name == "product") return EvidenceKind::product;
  if (name == "entity") return EvidenceKind::entity;
  if (name == "grounding") return EvidenceKind::grounding;
  throw Error(ErrorKind::validation, "unknown evidence kind '" + std::string(name) + "'");
}

Evidence::Evidence(std::string agent_id, EvidenceKind kind,
                   std::optional<AmbiguityCategory> category, std::vector<Span> spans,
                   std::vector<Candidate> candidates, std::string rationale,
                   std::size_t token_count)
    : agent_id_(std::move(agent_id)),
      kind_(kind),
      category_(category),
      spans_(std::move(spans)),
      candidates_(std::move(candidates)),
      rationale_(std::move(rationale)) {
  std::size_t previous_end = 0;
  for (const auto& span : spans_) {
    if (span.end_token <= span.start_token || span.end_token > token_count) {
      throw Error(ErrorKind::validation, "evidence span [" + std::to_string(span.start_token) + "," +
                                             std::to_string(span.end_token) + ") is outside the query's " +
                                             std::to_string(token_count) + " tokens");
    }
    if (span.start_token < previous_end) {
      throw Error(ErrorKind::validation, "evidence spans overlap or are not sorted by start token");
    }
    previous_end = span.end_token;
  }
  std::set<std::string_view> ids;
  for (const auto& c : candidates_) {
    if (!ids.insert(c.id).second) {
      throw Error(ErrorKind::validation, "duplicate evidence candidate id '" + c.id + "'");
    }
  }
}

AgentVerdict::AgentVerdict(std::string agent_id, bool detected, std::optional<Evidence> evidence)
    : agent_id_(std::move(agent_id)), detected_(detected), evidence_(std::move(evidence)) {
  if (detected_ && !evidence_) {
    throw Error(ErrorKind::validation, "agent '" + agent_id_ + "' reported a detection without evidence");
  }
  if (evidence_ && evidence_->agent_id() != agent_id_) {
    throw Error(ErrorKind::validation,
                "agent '" + agent_id_ + "' attached evidence from '" + evidence_->agent_id() + "'");
  }
  if (detected_ && evidence_->kind() == EvidenceKind::grounding) {
    throw Error(ErrorKind::validation, "grounding evidence from '" + agent_id_ + "' cannot carry a detection");
  }
}

const char* to_string(DecisionLabel l) {
  return l == DecisionLabel::needed ? "needed" : "not_needed";
}

DecisionLabel parse_decision_label(std::string_view name) {
  if (name == "needed") return DecisionLabel::needed;
  if (name == "not_needed") return DecisionLabel::not_needed;
  throw Error(ErrorKind::validation, "unknown label '" + std::string(name) + "'");
}

Decision::Decision(DecisionLabel label, std::string rationale, bool llm_consulted)
    : label_(label), rationale_(std::move(rationale)), llm_consulted_(llm_consulted) {
  if (!llm_consulted_ && label_ == DecisionLabel::needed) {
    throw Error(ErrorKind::validation, "a 'needed' decision requires an LLM consultation");
  }
}

ClarificationQuestion::ClarificationQuestion(std::string text, std::vector<Choice> choices,
                                             std::size_t choice_cap)
    : text_(std::move(text)), choices_(std::move(choices)) {
  if (choices_.empty() || choices_.size() > choice_cap) {
    throw Error(ErrorKind::validation, "a clarification question needs between 1 and " +
                                           std::to_string(choice_cap) + " choices, got " +
                                           std::to_string(choices_.size()));
  }
  std::set<std::string_view> ids;
  for (const auto& c : choices_) {
    if (!ids.insert(c.id).second) {
      throw Error(ErrorKind::validation, "duplicate choice id '" + c.id + "'");
    }
  }
}

const Choice* ClarificationQuestion::find_choice(std::string_view id) const {
  auto it = std::find_if(choices_.begin(), choices_.end(), [&](const Choice& c) { return c.id == id; });
  return it == choices_.end() ? nullptr : &*it;
}

Feedback Feedback::choice(std::string choice_id) {
  if (trim(choice_id).empty()) throw Error(ErrorKind::validation, "choice_id must be non-empty");
  return Feedback(SelectedChoice{std::move(choice_id)});
}

Feedback Feedback::free_text(std::string text) {
  std::string trimmed = trim(text);
  if (trimmed.empty()) throw Error(ErrorKind::validation, "free_text must be non-empty");
  if (utf8_length(trimmed) > kMaxQueryChars) {
    throw Error(ErrorKind::validation, "free_text exceeds the maximum length of " +
                                           std::to_string(kMaxQueryChars) + " characters");
  }
  return Feedback(FreeText{std::move(trimmed)});
}

// --- JSON ---

Json to_json(const Evidence& e) {
  Json spans = Json::array();
  for (const auto& s : e.spans()) {
    spans.push_back({{"start_token", s.start_token}, {"end_token", s.end_token}, {"surface", s.surface}});
  }
  Json candidates = Json::array();
  for (const auto& c : e.candidates()) candidates.push_back({{"id", c.id}, {"label", c.label}});
  Json j{{"agent_id", e.agent_id()},
         {"kind", to_string(e.kind())},
         {"category", nullptr},
         {"spans", std::move(spans)},
         {"candidates", std::move(candidates)},
         {"rationale", e.rationale()}};
  if (e.category()) j["category"] = to_string(*e.category());
  return j;
}

Evidence evidence_from_json(const Json& j, std::size_t token_count) {
  std::optional<AmbiguityCategory> category;
  if (j.contains("category") && !j.at("category").is_null()) {
    category = parse_category(j.at("category").get<std::string>());
  }
  std::vector<Span> spans;
  for (const auto& s : j.at("spans")) {
    spans.push_back({s.at("start_token").get<std::size_t>(), s.at("end_token").get<std::size_t>(),
                     s.at("surface").get<std::string>()});
  }
  std::vector<Candidate> candidates;
  for (const auto& c : j.at("candidates")) {
    candidates.push_back({c.at("id").get<std::string>(), c.at("label").get<std::string>()});
  }
  return Evidence(j.at("agent_id").get<std::string>(), parse_evidence_kind(j.at("kind").get<std::string>()),
                  category, std::move(spans), std::move(candidates), j.at("rationale").get<std::string>(),
                  token_count);
}

Json to_json(const AgentVerdict& v) {
  Json j{{"agent_id", v.agent_id()}, {"detected", v.detected()}, {"evidence", nullptr}};
  if (v.evidence()) j["evidence"] = to_json(*v.evidence());
  return j;
}

AgentVerdict verdict_from_json(const Json& j, std::size_t token_count) {
  std::optional<Evidence> evidence;
  if (j.contains("evidence") && !j.at("evidence").is_null()) {
    evidence = evidence_from_json(j.at("evidence"), token_count);
  }
  return AgentVerdict(j.at("agent_id").get<std::string>(), j.at("detected").get<bool>(), std::move(evidence));
}

Json to_json(const Decision& d) {
  return {{"label", to_string(d.label())}, {"rationale", d.rationale()}, {"llm_consulted", d.llm_consulted()}};
}

Decision decision_from_json(const Json& j) {
  return Decision(parse_decision_label(j.at("label").get<std::string>()), j.at("rationale").get<std::string>(),
                  j.at("llm_consulted").get<bool>());
}

Json to_json(const Choice& c) {
  return {{"id", c.id}, {"label", c.label}, {"payload", c.payload}};
}

Json to_json(const ClarificationQuestion& q) {
  Json choices = Json::array();
  for (const auto& c : q.choices()) choices.push_back(to_json(c));
  return {{"text", q.text()}, {"choices", std::move(choices)}};
}

ClarificationQuestion question_from_json(const Json& j) {
  std::vector<Choice> choices;
  for (const auto& c : j.at("choices")) {
    choices.push_back({c.at("id").get<std::string>(), c.at("label").get<std::string>(),
                       c.value("payload", std::string{})});
  }
  const std::size_t cap = std::max(kDefaultChoiceCap, choices.size());
  return ClarificationQuestion(j.at("text").get<std::string>(), std::move(choices), cap);
}

Json to_json(const Feedback& f) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SelectedChoice>) {
          return {{"choice_id", v.choice_id}};
        } else {
          return {{"free_text", v.text}};
        }
      },
      f.value());
}

Feedback feedback_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::validation, "feedback must be a JSON object");
  const bool has_choice = j.contains("choice_id");
  const bool has_text = j.contains("free_text");
  if (has_choice == has_text) {
    throw Error(ErrorKind::validation, "feedback needs exactly one of 'choice_id' or 'free_text'");
  }
  const auto& field = has_choice ? j.at("choice_id") : j.at("free_text");
  if (!field.is_string()) throw Error(ErrorKind::validation, "feedback value must be a string");
  return has_choice ? Feedback::choice(field.get<std::string>()) : Feedback::free_text(field.get<std::string>());
}

}  // namespace clarify
