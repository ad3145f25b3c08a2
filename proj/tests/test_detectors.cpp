#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "clarify/detectors.hpp"
#include "test_support.hpp"

using namespace clarify;

namespace {

EntityRecord entity(std::string id, std::vector<std::string> aliases) {
  return {{id, id + " name", "type", ""}, std::move(aliases)};
}

EntityKB spec_kb() {
  return EntityKB({entity("E1", {"schema"}), entity("E2", {"schema"}), entity("E4", {"customer profile", "profile"}),
                   entity("E5", {"profile"})});
}

ProductCatalog spec_catalog() {
  return ProductCatalog({{"P1", "Real-Time CDP", {"segment", "audience", "profile"}},
                         {"P2", "Customer Journey Analytics", {"segment", "report", "metric"}},
                         {"P3", "Journey Optimizer", {"journey", "campaign"}}});
}

std::vector<std::string> ids_of(const std::vector<Entity>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.id);
  return out;
}

std::vector<std::string> ids_of(const std::vector<Candidate>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.id);
  return out;
}

// Every token interval that is an alias, then leftmost-first, longest-first,
// skipping intervals that overlap an earlier pick.
struct OracleSpan {
  std::size_t start, end;
  std::vector<std::string> ids;
  bool operator==(const OracleSpan&) const = default;
};

std::vector<OracleSpan> oracle_link(const std::vector<std::string>& tokens,
                                    const std::vector<std::pair<std::vector<std::string>, std::string>>& alias_rows) {
  std::vector<OracleSpan> all;
  for (std::size_t s = 0; s < tokens.size(); ++s) {
    for (std::size_t e = s + 1; e <= tokens.size(); ++e) {
      const std::vector<std::string> piece(tokens.begin() + s, tokens.begin() + e);
      std::vector<std::string> ids;
      for (const auto& [alias, id] : alias_rows) {
        if (alias == piece && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
      if (!ids.empty()) all.push_back({s, e, ids});
    }
  }
  std::sort(all.begin(), all.end(), [](const OracleSpan& a, const OracleSpan& b) {
    return a.start != b.start ? a.start < b.start : (a.end - a.start) > (b.end - b.start);
  });
  std::vector<OracleSpan> picked;
  std::size_t cursor = 0;
  for (const auto& span : all) {
    if (span.start < cursor) continue;
    picked.push_back(span);
    cursor = span.end;
  }
  return picked;
}

}  // namespace

TEST(LinkEntities, SpecExamples) {
  const EntityKB kb = spec_kb();
  auto spans = link_entities(validate_query("what is a schema"), kb);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].start_token, 3u);
  EXPECT_EQ(spans[0].end_token, 4u);
  EXPECT_EQ(spans[0].surface, "schema");
  EXPECT_EQ(ids_of(spans[0].candidates), (std::vector<std::string>{"E1", "E2"}));

  EXPECT_TRUE(link_entities(validate_query("hello world"), kb).empty());

  spans = link_entities(validate_query("update customer profile"), kb);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].start_token, 1u);
  EXPECT_EQ(spans[0].end_token, 3u);
  EXPECT_EQ(spans[0].surface, "customer profile");
  EXPECT_EQ(ids_of(spans[0].candidates), (std::vector<std::string>{"E4"}));
}

TEST(LinkEntities, MatchesExhaustiveOracle) {
  std::mt19937 rng(1234);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  for (int instance = 0; instance < 500; ++instance) {
    const std::size_t alias_count = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    std::vector<std::pair<std::vector<std::string>, std::string>> rows;
    std::vector<EntityRecord> records;
    for (std::size_t i = 0; i < alias_count; ++i) {
      std::vector<std::string> alias(std::uniform_int_distribution<std::size_t>(1, 3)(rng));
      for (auto& t : alias) t = vocab[word(rng)];
      const std::string id = "E" + std::to_string(std::uniform_int_distribution<int>(0, 6)(rng));
      std::string text;
      for (const auto& t : alias) text += (text.empty() ? "" : " ") + t;
      auto it = std::find_if(records.begin(), records.end(), [&](const EntityRecord& r) { return r.entity.id == id; });
      if (it == records.end()) {
        records.push_back(entity(id, {text}));
      } else if (std::find(it->aliases.begin(), it->aliases.end(), text) == it->aliases.end()) {
        it->aliases.push_back(text);
      }
    }
    // Entities under one alias keep file order, so the oracle rows follow records.
    for (const auto& r : records) {
      for (const auto& a : r.aliases) rows.push_back({tokenize(a), r.entity.id});
    }
    const EntityKB kb(records);

    std::vector<std::string> query_tokens(std::uniform_int_distribution<std::size_t>(1, 12)(rng));
    for (auto& t : query_tokens) t = vocab[word(rng)];
    std::string text;
    for (const auto& t : query_tokens) text += (text.empty() ? "" : " ") + t;

    std::vector<OracleSpan> got;
    for (const auto& s : link_entities(validate_query(text), kb)) got.push_back({s.start_token, s.end_token, ids_of(s.candidates)});
    ASSERT_EQ(got, oracle_link(query_tokens, rows)) << "instance " << instance << " query '" << text << "'";
  }
}

TEST(EntityAmbiguity, Examples) {
  const EntityKB kb = spec_kb();
  const UserQuery schema = validate_query("what is a schema");
  const AgentVerdict v = detect_entity_ambiguity(schema, link_entities(schema, kb));
  EXPECT_TRUE(v.detected());
  ASSERT_TRUE(v.evidence());
  EXPECT_EQ(v.evidence()->kind(), EvidenceKind::entity);
  EXPECT_EQ(v.evidence()->category(), AmbiguityCategory::aleatoric);
  EXPECT_EQ(ids_of(v.evidence()->candidates()), (std::vector<std::string>{"E1", "E2"}));

  const UserQuery customer = validate_query("update customer profile");
  EXPECT_FALSE(detect_entity_ambiguity(customer, link_entities(customer, kb)).detected());
  EXPECT_FALSE(detect_entity_ambiguity(customer, {}).detected());
}

TEST(EntityAmbiguity, SingleCandidateSpansNeverDetect) {
  const EntityKB kb({entity("A", {"x"}), entity("B", {"y z"}), entity("C", {"w"})});
  for (const char* q : {"x y z w", "x x", "w y z", "nothing here"}) {
    const UserQuery query = validate_query(q);
    EXPECT_FALSE(detect_entity_ambiguity(query, link_entities(query, kb)).detected()) << q;
  }
}

TEST(EntityKB, LoadErrors) {
  EXPECT_THROW(EntityKB({entity("A", {"x"}), entity("A", {"y"})}), Error);
  EXPECT_THROW(EntityKB({entity("A", {})}), Error);
  EXPECT_THROW(EntityKB({entity("A", {"!!!"})}), Error);
  EXPECT_THROW(EntityKB::load("/nonexistent.json"), Error);
  EXPECT_NO_THROW(EntityKB::load(testsupport::data_dir() / "demo" / "entities.json"));
}

TEST(Product, SpecExamples) {
  const ProductCatalog catalog = spec_catalog();
  const AgentVerdict seg = detect_product(validate_query("how do i create a segment"), catalog, {1, 0});
  EXPECT_TRUE(seg.detected());
  EXPECT_EQ(ids_of(seg.evidence()->candidates()), (std::vector<std::string>{"P1", "P2"}));
  EXPECT_EQ(seg.evidence()->category(), AmbiguityCategory::contextual);
  ASSERT_EQ(seg.evidence()->spans().size(), 1u);
  EXPECT_EQ(seg.evidence()->spans()[0].surface, "segment");

  const UserQuery journey = validate_query("how do i build a journey campaign");
  const auto scores = score_products(journey, catalog);
  EXPECT_EQ(scores[0].product_id, "P3");
  EXPECT_EQ(scores[0].score, 2);
  EXPECT_EQ(scores[1].score, 0);
  const AgentVerdict j = detect_product(journey, catalog, {1, 0});
  EXPECT_FALSE(j.detected());
  ASSERT_TRUE(j.evidence());
  EXPECT_NE(j.evidence()->rationale().find("Journey Optimizer"), std::string::npos);
  EXPECT_NE(j.evidence()->rationale().find("dominant"), std::string::npos);

  EXPECT_FALSE(detect_product(validate_query("hello"), catalog, {1, 0}).detected());
}

TEST(Product, ThresholdAndMargin) {
  const ProductCatalog catalog = spec_catalog();
  const UserQuery q = validate_query("segment report metric audience");  // P2=3, P1=2
  EXPECT_FALSE(detect_product(q, catalog, {1, 0}).detected());
  const auto wide = detect_product(q, catalog, {1, 1});
  EXPECT_TRUE(wide.detected());
  EXPECT_EQ(ids_of(wide.evidence()->candidates()), (std::vector<std::string>{"P2", "P1"}));
  EXPECT_FALSE(detect_product(validate_query("segment"), catalog, {2, 0}).detected());
  EXPECT_THROW(detect_product(q, catalog, {0, 0}), Error);
  EXPECT_THROW(detect_product(q, catalog, {1, -1}), Error);
}

TEST(Product, InvariantUnderCatalogReordering) {
  std::vector<Product> products{{"P1", "one", {"alpha", "beta"}},  {"P2", "two", {"alpha", "gamma"}},
                                {"P3", "three", {"beta", "gamma"}}, {"P4", "four", {"delta"}},
                                {"P5", "five", {"alpha", "delta"}}};
  const std::vector<std::string> queries{"alpha", "alpha beta gamma", "delta alpha", "beta", "gamma delta", "none"};
  std::mt19937 rng(5);
  for (const auto& text : queries) {
    const UserQuery q = validate_query(text);
    for (ProductThresholds t : {ProductThresholds{1, 0}, ProductThresholds{1, 1}, ProductThresholds{2, 0}}) {
      const Json reference = to_json(detect_product(q, ProductCatalog(products), t));
      for (int perm = 0; perm < 10; ++perm) {
        auto shuffled = products;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(to_json(detect_product(q, ProductCatalog(shuffled), t)), reference) << text;
      }
    }
  }
}

TEST(Generic, ParsesCategoryReplies) {
  const UserQuery q = validate_query("can you fix it");
  auto run = [&](const std::string& reply) {
    auto gw = testsupport::scripted(Json::array({{{"contains", kGenericPromptMarker}, {"response", reply}}}));
    return detect_generic(q, testsupport::client(gw));
  };
  const auto contextual = run("CONTEXTUAL: referent of 'it' unclear");
  EXPECT_TRUE(contextual.detected());
  EXPECT_EQ(contextual.evidence()->category(), AmbiguityCategory::contextual);
  EXPECT_EQ(contextual.evidence()->rationale(), "referent of 'it' unclear");
  EXPECT_EQ(run("syntactic: fragment").evidence()->category(), AmbiguityCategory::syntactic);

  EXPECT_FALSE(run("NONE: query fully specified").detected());

  const auto banana = run("banana");
  EXPECT_FALSE(banana.detected());
  EXPECT_NE(banana.evidence()->rationale().find("unparseable"), std::string::npos);
  EXPECT_FALSE(run("CONTEXTUALLY fine").detected());
}

TEST(Generic, PromptCarriesQueryAndCategories) {
  const auto prompt = build_generic_prompt(validate_query("Fix It"));
  ASSERT_EQ(prompt.size(), 2u);
  for (const char* label : {"CONTEXTUAL", "SYNTACTIC", "ALEATORIC", "NONE", kGenericPromptMarker}) {
    EXPECT_NE(prompt[0].content.find(label), std::string::npos) << label;
  }
  EXPECT_NE(prompt[1].content.find("Fix It"), std::string::npos);
}

TEST(Generic, GatewayErrorPropagates) {
  auto gw = testsupport::scripted(Json::array());
  EXPECT_THROW(detect_generic(validate_query("x"), testsupport::client(gw)), GatewayError);
}

TEST(Concepts, Examples) {
  const ConceptLexicon lexicon({{"xdm", "Experience Data Model", {"profile"}}, {"profile", "A customer record", {}}});
  const auto v = ground_concepts(validate_query("export the xdm schema"), lexicon);
  EXPECT_FALSE(v.detected());
  ASSERT_TRUE(v.evidence());
  EXPECT_EQ(v.evidence()->kind(), EvidenceKind::grounding);
  EXPECT_EQ(ids_of(v.evidence()->candidates()), (std::vector<std::string>{"xdm"}));
  EXPECT_NE(v.evidence()->rationale().find("Experience Data Model"), std::string::npos);
  EXPECT_NE(v.evidence()->rationale().find("profile"), std::string::npos);

  const auto none = ground_concepts(validate_query("hello there"), lexicon);
  EXPECT_FALSE(none.detected());
  EXPECT_TRUE(none.evidence()->candidates().empty());
}

TEST(Concepts, DefinitionPreviewIsCapped) {
  const std::string long_def(500, 'd');
  const ConceptLexicon lexicon({{"term", long_def, {}}});
  const auto v = ground_concepts(validate_query("term"), lexicon);
  EXPECT_EQ(v.evidence()->rationale(), "term: " + std::string(200, 'd'));
}

TEST(Concepts, ClosedGraph) {
  EXPECT_THROW(ConceptLexicon({{"a", "def", {"missing"}}}), Error);
  EXPECT_THROW(ConceptLexicon({{"a", "def", {}}, {"A", "dup", {}}}), Error);
  EXPECT_NO_THROW(ConceptLexicon::load(testsupport::data_dir() / "demo" / "concepts.json"));
}

TEST(Utf8Prefix, CutsOnCodePoints) {
  EXPECT_EQ(utf8_prefix("h\xC3\xA9llo", 2), "h\xC3\xA9");
  EXPECT_EQ(utf8_prefix("abc", 10), "abc");
}
