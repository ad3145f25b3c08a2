#pragma once

#include <string>
#include <vector>

#include "clarify/agent_framework.hpp"
#include "clarify/core.hpp"
#include "clarify/knowledge.hpp"

namespace clarify {

inline constexpr const char* kGenericAgentId = "generic_detector";
inline constexpr const char* kProductAgentId = "product_detector";
inline constexpr const char* kEntityAgentId = "entity_linker";
inline constexpr const char* kConceptAgentId = "concept_graph";

// Marker the generic detector's prompt always contains.
inline constexpr const char* kGenericPromptMarker = "SENTENCE-LEVEL AMBIGUITY CHECK";

inline constexpr std::size_t kDefinitionPreviewChars = 200;

struct SpanMatch {
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  std::string surface;
  std::vector<Entity> candidates;

  bool operator==(const SpanMatch&) const = default;
};

// Leftmost-longest alias matching over the query's tokens.
std::vector<SpanMatch> link_entities(const UserQuery& query, const EntityKB& kb);

// Detected iff some span links to two or more entities.
AgentVerdict detect_entity_ambiguity(const UserQuery& query, const std::vector<SpanMatch>& spans,
                                     const std::string& agent_id = kEntityAgentId);

struct ProductScore {
  std::string product_id;
  int score = 0;
};

// Scores sorted by (score desc, id asc).
std::vector<ProductScore> score_products(const UserQuery& query, const ProductCatalog& catalog);

AgentVerdict detect_product(const UserQuery& query, const ProductCatalog& catalog, ProductThresholds thresholds,
                            const std::string& agent_id = kProductAgentId);

std::vector<ChatMessage> build_generic_prompt(const UserQuery& query);

AgentVerdict detect_generic(const UserQuery& query, const LlmClient& llm,
                            const std::string& agent_id = kGenericAgentId);

// Never detects; reports matched terminology as grounding evidence.
AgentVerdict ground_concepts(const UserQuery& query, const ConceptLexicon& lexicon,
                             const std::string& agent_id = kConceptAgentId);

// Registers generic, product, entity and concept agents in that order.
void register_builtin_agents(AgentRegistry& registry,
                             std::chrono::milliseconds timeout = kDefaultAgentTimeout);

// First `max_chars` code points of a UTF-8 string.
std::string utf8_prefix(std::string_view text, std::size_t max_chars);

}  // namespace clarify
