#include "clarify/knowledge.hpp"

#include <fstream>
#include <unordered_set>

namespace clarify {

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end && i < tokens.size(); ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

namespace {

Json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, std::string("cannot open ") + what + " file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::data, std::string(what) + " file " + path.string() + ": " + e.what());
  }
}

template <typename F>
auto wrap_json_errors(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::data, std::string(what) + ": " + e.what());
  }
}

}  // namespace

EntityKB::EntityKB(const std::vector<EntityRecord>& records) {
  std::unordered_set<std::string> ids;
  for (const auto& record : records) {
    const Entity& e = record.entity;
    if (e.id.empty()) throw Error(ErrorKind::data, "entity with empty id");
    if (!ids.insert(e.id).second) throw Error(ErrorKind::data, "duplicate entity id '" + e.id + "'");
    if (record.aliases.empty()) throw Error(ErrorKind::data, "entity '" + e.id + "' has no aliases");
    for (const auto& alias : record.aliases) {
      auto tokens = tokenize(alias);
      if (tokens.empty()) {
        throw Error(ErrorKind::data, "alias '" + alias + "' of entity '" + e.id + "' has no tokens");
      }
      if (auto* bucket = aliases_.find_mutable(tokens)) {
        const bool present =
            std::any_of(bucket->begin(), bucket->end(), [&](const Entity& x) { return x.id == e.id; });
        if (!present) bucket->push_back(e);
      } else {
        aliases_.insert(std::move(tokens), {e});
      }
    }
  }
  entity_count_ = ids.size();
}

EntityKB EntityKB::from_json(const Json& j) {
  return wrap_json_errors("entities", [&] {
    if (!j.is_array()) throw Error(ErrorKind::data, "entities must be a JSON array");
    std::vector<EntityRecord> records;
    for (const auto& item : j) {
      records.push_back({{item.at("id").get<std::string>(), item.at("name").get<std::string>(),
                          item.value("type", std::string{}), item.value("description", std::string{})},
                         item.at("aliases").get<std::vector<std::string>>()});
    }
    return EntityKB(records);
  });
}

EntityKB EntityKB::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path, "entities"));
}

ProductCatalog::ProductCatalog(std::vector<Product> products) {
  std::unordered_set<std::string> ids;
  for (auto& p : products) {
    if (p.id.empty()) throw Error(ErrorKind::data, "product with empty id");
    if (!ids.insert(p.id).second) throw Error(ErrorKind::data, "duplicate product id '" + p.id + "'");
    std::set<std::string> normalized;
    for (const auto& k : p.keywords) {
      for (auto& t : tokenize(k)) normalized.insert(std::move(t));
    }
    if (normalized.empty()) throw Error(ErrorKind::data, "product '" + p.id + "' has no keywords");
    p.keywords = std::move(normalized);
    products_.push_back(std::move(p));
  }
}

ProductCatalog ProductCatalog::from_json(const Json& j) {
  return wrap_json_errors("products", [&] {
    if (!j.is_array()) throw Error(ErrorKind::data, "products must be a JSON array");
    std::vector<Product> products;
    for (const auto& item : j) {
      const auto keywords = item.at("keywords").get<std::vector<std::string>>();
      products.push_back({item.at("id").get<std::string>(), item.at("name").get<std::string>(),
                          std::set<std::string>(keywords.begin(), keywords.end())});
    }
    return ProductCatalog(std::move(products));
  });
}

ProductCatalog ProductCatalog::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path, "products"));
}

ConceptLexicon::ConceptLexicon(const std::vector<ConceptRecord>& records) {
  for (const auto& r : records) {
    auto tokens = tokenize(r.term);
    if (tokens.empty()) throw Error(ErrorKind::data, "concept term '" + r.term + "' has no tokens");
    ConceptNode node{join_tokens(tokens, 0, tokens.size()), r.definition, {}};
    for (const auto& rel : r.related) {
      auto rel_tokens = tokenize(rel);
      node.related.push_back(join_tokens(rel_tokens, 0, rel_tokens.size()));
    }
    if (!terms_.insert(std::move(tokens), std::move(node))) {
      throw Error(ErrorKind::data, "duplicate concept term '" + r.term + "'");
    }
  }
  for (const auto& [tokens, node] : terms_.entries()) {
    for (const auto& rel : node.related) {
      if (terms_.find(tokenize(rel)) == nullptr) {
        throw Error(ErrorKind::data, "concept '" + node.term + "' relates to unknown term '" + rel + "'");
      }
    }
  }
}

ConceptLexicon ConceptLexicon::from_json(const Json& j) {
  return wrap_json_errors("concepts", [&] {
    if (!j.is_array()) throw Error(ErrorKind::data, "concepts must be a JSON array");
    std::vector<ConceptRecord> records;
    for (const auto& item : j) {
      records.push_back({item.at("term").get<std::string>(), item.value("definition", std::string{}),
                         item.value("related", std::vector<std::string>{})});
    }
    return ConceptLexicon(records);
  });
}

ConceptLexicon ConceptLexicon::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path, "concepts"));
}

}  // namespace clarify
