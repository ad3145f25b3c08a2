#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "clarify/core.hpp"
#include "clarify/llm_gateway.hpp"

namespace clarify {

// Token-sequence dictionary with leftmost-longest scanning.
template <typename Value>
class PhraseTable {
 public:
  struct Match {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    const Value* value = nullptr;
  };

  // Returns false if the phrase already exists (the table is unchanged).
  bool insert(std::vector<std::string> phrase, Value value) {
    const std::size_t n = phrase.size();
    const bool inserted = table_.emplace(std::move(phrase), std::move(value)).second;
    if (inserted) max_length_ = std::max(max_length_, n);
    return inserted;
  }

  Value* find_mutable(const std::vector<std::string>& phrase) {
    auto it = table_.find(phrase);
    return it == table_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] const Value* find(const std::vector<std::string>& phrase) const {
    auto it = table_.find(phrase);
    return it == table_.end() ? nullptr : &it->second;
  }

  // Left to right; at each position the longest phrase starting there wins
  // and scanning resumes after it.
  [[nodiscard]] std::vector<Match> scan(const std::vector<std::string>& tokens) const {
    std::vector<Match> out;
    std::size_t i = 0;
    std::vector<std::string> probe;
    while (i < tokens.size()) {
      const std::size_t longest = std::min(max_length_, tokens.size() - i);
      bool matched = false;
      for (std::size_t len = longest; len >= 1; --len) {
        probe.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
        if (const Value* v = find(probe)) {
          out.push_back({i, i + len, v});
          i += len;
          matched = true;
          break;
        }
      }
      if (!matched) ++i;
    }
    return out;
  }

  [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }
  [[nodiscard]] std::size_t max_length() const noexcept { return max_length_; }
  [[nodiscard]] const std::map<std::vector<std::string>, Value>& entries() const noexcept { return table_; }

 private:
  std::map<std::vector<std::string>, Value> table_;
  std::size_t max_length_ = 0;
};

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end);

// ---------------------------------------------------------------------------

struct Entity {
  std::string id;
  std::string display_name;
  std::string entity_type;
  std::string description;

  bool operator==(const Entity&) const = default;
};

struct EntityRecord {
  Entity entity;
  std::vector<std::string> aliases;  // free text; tokenized on load
};

class EntityKB {
 public:
  EntityKB() = default;
  // Throws ErrorKind::data on duplicate ids, missing aliases, or an alias that
  // tokenizes to nothing. Entities under one alias keep file order.
  explicit EntityKB(const std::vector<EntityRecord>& records);

  // [{"id","name","type","description","aliases":[...]}]
  static EntityKB from_json(const Json& j);
  static EntityKB load(const std::filesystem::path& path);

  [[nodiscard]] const PhraseTable<std::vector<Entity>>& aliases() const noexcept { return aliases_; }
  [[nodiscard]] std::size_t entity_count() const noexcept { return entity_count_; }

 private:
  PhraseTable<std::vector<Entity>> aliases_;
  std::size_t entity_count_ = 0;
};

struct Product {
  std::string id;
  std::string name;
  std::set<std::string> keywords;
};

class ProductCatalog {
 public:
  ProductCatalog() = default;
  // Keywords are tokenized; throws ErrorKind::data on duplicate ids or an empty keyword set.
  explicit ProductCatalog(std::vector<Product> products);

  // [{"id","name","keywords":[...]}]
  static ProductCatalog from_json(const Json& j);
  static ProductCatalog load(const std::filesystem::path& path);

  [[nodiscard]] const std::vector<Product>& products() const noexcept { return products_; }

 private:
  std::vector<Product> products_;
};

struct ConceptNode {
  std::string term;  // normalized display form (tokens joined by spaces)
  std::string definition;
  std::vector<std::string> related;  // normalized terms, all present in the lexicon
};

struct ConceptRecord {
  std::string term;
  std::string definition;
  std::vector<std::string> related;
};

class ConceptLexicon {
 public:
  ConceptLexicon() = default;
  // Throws ErrorKind::data on duplicate terms or dangling related references.
  explicit ConceptLexicon(const std::vector<ConceptRecord>& records);

  // [{"term","definition","related":[...]}]
  static ConceptLexicon from_json(const Json& j);
  static ConceptLexicon load(const std::filesystem::path& path);

  [[nodiscard]] const PhraseTable<ConceptNode>& terms() const noexcept { return terms_; }

 private:
  PhraseTable<ConceptNode> terms_;
};

struct ProductThresholds {
  int min_score = 1;  // a product needs at least this many keyword hits
  int margin = 0;     // max gap between the top two scores to stay ambiguous
};

// Read-only state shared by every agent invocation.
struct KnowledgeContext {
  std::shared_ptr<const EntityKB> entities = std::make_shared<EntityKB>();
  std::shared_ptr<const ProductCatalog> products = std::make_shared<ProductCatalog>();
  std::shared_ptr<const ConceptLexicon> concepts = std::make_shared<ConceptLexicon>();
  LlmClient llm;
  ProductThresholds product_thresholds;
};

}  // namespace clarify
