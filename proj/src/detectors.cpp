#include "clarify/detectors.hpp"

#include "clarify/prompt_template.hpp"

#include <algorithm>
#include <sstream>

namespace clarify {

std::string utf8_prefix(std::string_view text, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (chars == max_chars) return std::string(text.substr(0, i));
      ++chars;
    }
  }
  return std::string(text);
}

// --- entity linking ---

std::vector<SpanMatch> link_entities(const UserQuery& query, const EntityKB& kb) {
  std::vector<SpanMatch> out;
  const auto& tokens = query.tokens();
  for (const auto& m : kb.aliases().scan(tokens)) {
    out.push_back({m.start, m.end, join_tokens(tokens, m.start, m.end), *m.value});
  }
  return out;
}

AgentVerdict detect_entity_ambiguity(const UserQuery& query, const std::vector<SpanMatch>& spans,
                                     const std::string& agent_id) {
  std::vector<Span> ambiguous;
  std::vector<Candidate> candidates;
  std::ostringstream rationale;
  for (const auto& s : spans) {
    if (s.candidates.size() < 2) continue;
    ambiguous.push_back({s.start_token, s.end_token, s.surface});
    if (ambiguous.size() > 1) rationale << "; ";
    rationale << '"' << s.surface << "\" links to " << s.candidates.size() << " entities (";
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      const auto& e = s.candidates[i];
      if (i > 0) rationale << ", ";
      rationale << e.display_name;
      if (!e.entity_type.empty()) rationale << " [" << e.entity_type << ']';
      const bool seen = std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) { return c.id == e.id; });
      if (!seen) candidates.push_back({e.id, e.display_name});
    }
    rationale << ')';
  }
  if (ambiguous.empty()) return AgentVerdict::none(agent_id);
  Evidence evidence(agent_id, EvidenceKind::entity, AmbiguityCategory::aleatoric, std::move(ambiguous),
                    std::move(candidates), rationale.str(), query.tokens().size());
  return AgentVerdict(agent_id, true, std::move(evidence));
}

// --- products ---

std::vector<ProductScore> score_products(const UserQuery& query, const ProductCatalog& catalog) {
  const std::set<std::string> present(query.tokens().begin(), query.tokens().end());
  std::vector<ProductScore> scores;
  for (const auto& p : catalog.products()) {
    const int score = static_cast<int>(std::count_if(p.keywords.begin(), p.keywords.end(),
                                                     [&](const std::string& k) { return present.count(k) > 0; }));
    scores.push_back({p.id, score});
  }
  std::sort(scores.begin(), scores.end(), [](const ProductScore& a, const ProductScore& b) {
    return a.score != b.score ? a.score > b.score : a.product_id < b.product_id;
  });
  return scores;
}

AgentVerdict detect_product(const UserQuery& query, const ProductCatalog& catalog, ProductThresholds thresholds,
                            const std::string& agent_id) {
  if (thresholds.min_score < 1 || thresholds.margin < 0) {
    throw Error(ErrorKind::precondition, "product thresholds need min_score >= 1 and margin >= 0");
  }
  const auto scores = score_products(query, catalog);
  const int top1 = scores.empty() ? 0 : scores[0].score;
  const int top2 = scores.size() < 2 ? 0 : scores[1].score;
  const auto qualifying = std::count_if(scores.begin(), scores.end(),
                                        [&](const ProductScore& s) { return s.score >= thresholds.min_score; });
  const bool detected = qualifying >= 2 && (top1 - top2) <= thresholds.margin;

  auto name_of = [&](const std::string& id) -> const Product& {
    return *std::find_if(catalog.products().begin(), catalog.products().end(),
                         [&](const Product& p) { return p.id == id; });
  };

  std::vector<Candidate> candidates;
  std::set<std::string> matched_keywords;
  for (const auto& s : scores) {
    if (s.score < thresholds.min_score || s.score < top1 - thresholds.margin) continue;
    const Product& p = name_of(s.product_id);
    candidates.push_back({p.id, p.name});
    matched_keywords.insert(p.keywords.begin(), p.keywords.end());
  }

  std::vector<Span> spans;
  const auto& tokens = query.tokens();
  if (!candidates.empty()) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (matched_keywords.count(tokens[i]) > 0) spans.push_back({i, i + 1, tokens[i]});
    }
  }

  std::ostringstream rationale;
  if (candidates.empty()) {
    rationale << "no product scored at least " << thresholds.min_score;
  } else if (detected) {
    rationale << "query fits " << candidates.size() << " products with scores within " << thresholds.margin
              << " of the top score " << top1 << ": ";
    for (std::size_t i = 0; i < candidates.size(); ++i) rationale << (i ? ", " : "") << candidates[i].label;
  } else {
    rationale << "single dominant product: " << candidates.front().label << " (score " << top1 << ")";
  }

  std::optional<AmbiguityCategory> category;
  if (detected) category = AmbiguityCategory::contextual;
  Evidence evidence(agent_id, EvidenceKind::product, category, std::move(spans), std::move(candidates),
                    rationale.str(), tokens.size());
  return AgentVerdict(agent_id, detected, std::move(evidence));
}

// --- generic ---

std::vector<ChatMessage> build_generic_prompt(const UserQuery& query) {
  std::string system = std::string(kGenericPromptMarker) +
                       "\n"
                       "You review one user query sent to an enterprise AI assistant and judge whether the "
                       "sentence itself is ambiguous, using no domain knowledge.\n"
                       "CONTEXTUAL: the context or the object being referred to is underspecified.\n"
                       "SYNTACTIC: the sentence is malformed or incomplete, so it must be read indirectly.\n"
                       "ALEATORIC: a specific token is undefined or has several possible meanings.\n"
                       "NONE: the query can be answered as written.\n"
                       "Reply with one line of the form CATEGORY: reason";
  return {{Role::system, std::move(system)}, {Role::user, "Query: " + query.text()}};
}

AgentVerdict detect_generic(const UserQuery& query, const LlmClient& llm, const std::string& agent_id) {
  const std::string reply = llm.complete(build_generic_prompt(query)).text;
  const auto [label, reason] = split_labelled_reply(reply);

  std::optional<AmbiguityCategory> category;
  if (label == "CONTEXTUAL") category = AmbiguityCategory::contextual;
  else if (label == "SYNTACTIC") category = AmbiguityCategory::syntactic;
  else if (label == "ALEATORIC") category = AmbiguityCategory::aleatoric;
  else if (label != "NONE") {
    Evidence evidence(agent_id, EvidenceKind::generic, std::nullopt, {}, {},
                      "unparseable detector reply: " + utf8_prefix(trim(reply), 200), query.tokens().size());
    return AgentVerdict(agent_id, false, std::move(evidence));
  }
  Evidence evidence(agent_id, EvidenceKind::generic, category, {}, {}, reason, query.tokens().size());
  return AgentVerdict(agent_id, category.has_value(), std::move(evidence));
}

// --- concepts ---

AgentVerdict ground_concepts(const UserQuery& query, const ConceptLexicon& lexicon, const std::string& agent_id) {
  const auto& tokens = query.tokens();
  std::vector<Span> spans;
  std::vector<Candidate> candidates;
  std::ostringstream rationale;
  for (const auto& m : lexicon.terms().scan(tokens)) {
    const ConceptNode& node = *m.value;
    spans.push_back({m.start, m.end, join_tokens(tokens, m.start, m.end)});
    if (std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) { return c.id == node.term; })) {
      continue;
    }
    if (!candidates.empty()) rationale << '\n';
    candidates.push_back({node.term, node.term});
    rationale << node.term << ": " << utf8_prefix(node.definition, kDefinitionPreviewChars);
    if (!node.related.empty()) {
      rationale << " (related: ";
      for (std::size_t i = 0; i < node.related.size(); ++i) rationale << (i ? ", " : "") << node.related[i];
      rationale << ')';
    }
  }
  Evidence evidence(agent_id, EvidenceKind::grounding, std::nullopt, std::move(spans), std::move(candidates),
                    rationale.str(), tokens.size());
  return AgentVerdict(agent_id, false, std::move(evidence));
}

void register_builtin_agents(AgentRegistry& registry, std::chrono::milliseconds timeout) {
  registry.register_agent({kGenericAgentId, AgentKind::detector, timeout, true},
                          [](const UserQuery& q, const KnowledgeContext& k) { return detect_generic(q, k.llm); });
  registry.register_agent({kProductAgentId, AgentKind::detector, timeout, true},
                          [](const UserQuery& q, const KnowledgeContext& k) {
                            return detect_product(q, *k.products, k.product_thresholds);
                          });
  registry.register_agent({kEntityAgentId, AgentKind::detector, timeout, true},
                          [](const UserQuery& q, const KnowledgeContext& k) {
                            return detect_entity_ambiguity(q, link_entities(q, *k.entities));
                          });
  registry.register_agent({kConceptAgentId, AgentKind::grounding, timeout, true},
                          [](const UserQuery& q, const KnowledgeContext& k) {
                            return ground_concepts(q, *k.concepts);
                          });
}

}  // namespace clarify
