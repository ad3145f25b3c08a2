#include "clarify/decision.hpp"

#include <sstream>

namespace clarify {

const char* const kDefaultDecisionTemplate = R"([system]
You decide whether an enterprise AI assistant has to ask the user a clarification question before it answers.
Specialist agents have already analysed the query. Every agent that found an ambiguity is listed under the evidence heading; domain grounding is background context and never a reason to clarify on its own.
Ask for clarification only when the ambiguity would change the answer. Do not over-clarify.
[user]
AMBIGUITY EVIDENCE REVIEW
User query: {query}

Evidence from detecting agents:
{evidence_blocks}

Domain grounding:
{grounding_blocks}

Reply with exactly one line, either "NEEDED: <reason>" or "NOT_NEEDED: <reason>".
)";

const std::vector<std::string>& decision_placeholders() {
  static const std::vector<std::string> names{"query", "evidence_blocks", "grounding_blocks"};
  return names;
}

PromptTemplate default_decision_template() {
  static const PromptTemplate tmpl = PromptTemplate::parse(kDefaultDecisionTemplate, decision_placeholders());
  return tmpl;
}

namespace {

void write_block(std::ostringstream& out, const char* tag, const Evidence& e) {
  out << '[' << tag << " agent=" << e.agent_id() << " kind=" << to_string(e.kind())
      << " category=" << (e.category() ? to_string(*e.category()) : "none") << "]\n";
  out << "spans:";
  if (e.spans().empty()) out << " (none)";
  for (std::size_t i = 0; i < e.spans().size(); ++i) {
    const auto& s = e.spans()[i];
    out << (i ? ", " : " ") << '"' << s.surface << "\" (tokens " << s.start_token << '-' << s.end_token << ')';
  }
  out << "\ncandidates:";
  if (e.candidates().empty()) out << " (none)";
  for (std::size_t i = 0; i < e.candidates().size(); ++i) {
    out << (i ? "; " : " ") << e.candidates()[i].label;
  }
  out << "\nrationale: " << (e.rationale().empty() ? "(none)" : e.rationale()) << '\n';
}

}  // namespace

std::string format_evidence_blocks(const DispatchReport& report) {
  std::ostringstream out;
  bool first = true;
  for (const auto& o : report.outcomes) {
    if (!o.detected()) continue;
    if (!first) out << '\n';
    first = false;
    write_block(out, "evidence", *o.verdict->evidence());
  }
  return out.str();
}

std::string format_grounding_blocks(const DispatchReport& report) {
  std::ostringstream out;
  bool first = true;
  for (const auto& o : report.outcomes) {
    if (o.status != AgentStatus::completed || o.detected() || !o.verdict->evidence()) continue;
    const Evidence& e = *o.verdict->evidence();
    if (e.kind() != EvidenceKind::grounding || e.candidates().empty()) continue;
    if (!first) out << '\n';
    first = false;
    write_block(out, "grounding", e);
  }
  return first ? "(none)\n" : out.str();
}

std::vector<ChatMessage> assemble_evidence_prompt(const UserQuery& query, const DispatchReport& report,
                                                  const PromptTemplate& tmpl) {
  if (!report.any_detected()) {
    throw Error(ErrorKind::precondition, "evidence prompt requires at least one detecting agent");
  }
  return tmpl.render({{"query", query.text()},
                      {"evidence_blocks", format_evidence_blocks(report)},
                      {"grounding_blocks", format_grounding_blocks(report)}});
}

ParsedDecision parse_decision_reply(std::string_view reply) {
  auto [label, reason] = split_labelled_reply(reply);
  if (label == "NEEDED") return {DecisionLabel::needed, std::move(reason)};
  if (label == "NOT_NEEDED") return {DecisionLabel::not_needed, std::move(reason)};
  return {std::nullopt, {}};
}

DecisionResult decide_detailed(const UserQuery& query, const DispatchReport& report, const LlmClient& llm,
                               const PromptTemplate& tmpl) {
  if (!report.any_detected()) {
    return {Decision(DecisionLabel::not_needed, "no agent detected ambiguity", false), std::nullopt};
  }
  std::string reply;
  try {
    reply = llm.complete(assemble_evidence_prompt(query, report, tmpl)).text;
  } catch (const std::exception& e) {
    return {Decision(DecisionLabel::not_needed, std::string("decision LLM call failed: ") + e.what(), false),
            std::string(e.what())};
  }
  auto parsed = parse_decision_reply(reply);
  if (!parsed.label) {
    std::string preview = trim(reply).substr(0, 200);
    return {Decision(DecisionLabel::not_needed, "unparseable decision reply: " + preview, true), std::nullopt};
  }
  if (parsed.reason.empty()) parsed.reason = *parsed.label == DecisionLabel::needed ? "clarification needed" : "no clarification needed";
  return {Decision(*parsed.label, std::move(parsed.reason), true), std::nullopt};
}

Decision decide(const UserQuery& query, const DispatchReport& report, const LlmClient& llm,
                const PromptTemplate& tmpl) {
  return decide_detailed(query, report, llm, tmpl).decision;
}

}  // namespace clarify
