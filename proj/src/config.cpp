#include "clarify/config.hpp"

#include <fstream>

#include "clarify/detectors.hpp"

namespace clarify {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename T>
void read(const Json& section, const char* key, T& out) {
  if (section.contains(key) && !section.at(key).is_null()) out = section.at(key).get<T>();
}

void read_path(const Json& section, const char* key, const std::filesystem::path& base, std::filesystem::path& out) {
  if (section.contains(key) && !section.at(key).is_null()) out = resolve(base, section.at(key).get<std::string>());
}

}  // namespace

AppConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorKind::configuration, "config must be a JSON object");
  AppConfig c;
  try {
    const Json empty = Json::object();
    const Json& llm = j.contains("llm") ? j.at("llm") : empty;
    read(llm, "backend", c.llm.backend);
    read(llm, "base_url", c.llm.base_url);
    read(llm, "model", c.llm.model);
    read(llm, "api_key_env", c.llm.api_key_env);
    read(llm, "timeout_ms", c.llm.timeout_ms);
    read(llm, "max_tokens", c.llm.max_tokens);
    read(llm, "temperature", c.llm.temperature);
    read_path(llm, "script", base_dir, c.llm.script_path);
    read(llm, "transcript_mode", c.llm.transcript_mode);
    read_path(llm, "transcript", base_dir, c.llm.transcript_path);

    const Json& agents = j.contains("agents") ? j.at("agents") : empty;
    read(agents, "timeout_ms", c.agent_timeout_ms);
    read(agents, "product_min_score", c.product_thresholds.min_score);
    read(agents, "product_margin", c.product_thresholds.margin);

    read(j, "choice_cap", c.choice_cap);

    const Json& knowledge = j.contains("knowledge") ? j.at("knowledge") : empty;
    read_path(knowledge, "entities", base_dir, c.entities_path);
    read_path(knowledge, "products", base_dir, c.products_path);
    read_path(knowledge, "concepts", base_dir, c.concepts_path);

    const Json& prompts = j.contains("prompts") ? j.at("prompts") : empty;
    read_path(prompts, "decision", base_dir, c.decision_template_path);
    read_path(prompts, "question", base_dir, c.question_template_path);
    read_path(prompts, "few_shot", base_dir, c.few_shot_path);

    const Json& server = j.contains("server") ? j.at("server") : empty;
    read(server, "host", c.bind_host);
    read(server, "port", c.port);
    read_path(server, "snapshot", base_dir, c.snapshot_path);

    const Json& eval = j.contains("eval") ? j.at("eval") : empty;
    read(eval, "parallelism", c.eval_parallelism);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("config: ") + e.what());
  }

  if (c.llm.backend != "http" && c.llm.backend != "scripted") {
    throw Error(ErrorKind::configuration, "llm.backend must be 'http' or 'scripted', got '" + c.llm.backend + "'");
  }
  if (c.llm.transcript_mode != "off" && c.llm.transcript_mode != "record" && c.llm.transcript_mode != "replay") {
    throw Error(ErrorKind::configuration, "llm.transcript_mode must be off, record or replay");
  }
  if (c.llm.timeout_ms <= 0 || c.agent_timeout_ms <= 0) {
    throw Error(ErrorKind::configuration, "timeouts must be positive");
  }
  if (c.llm.temperature < 0.0) throw Error(ErrorKind::configuration, "llm.temperature must be >= 0");
  if (c.choice_cap == 0) throw Error(ErrorKind::configuration, "choice_cap must be at least 1");
  if (c.product_thresholds.min_score < 1 || c.product_thresholds.margin < 0) {
    throw Error(ErrorKind::configuration, "agents.product_min_score must be >= 1 and product_margin >= 0");
  }
  if (c.eval_parallelism == 0) c.eval_parallelism = 1;
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::configuration, "cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::configuration, path.string() + ": " + e.what());
  }
  return config_from_json(j, std::filesystem::absolute(path).parent_path());
}

std::shared_ptr<LlmGateway> build_gateway(const LlmConfig& config) {
  if (config.transcript_mode == "replay") {
    if (config.transcript_path.empty()) throw Error(ErrorKind::configuration, "replay mode needs llm.transcript");
    return record_replay(TranscriptMode::replay, config.transcript_path);
  }
  std::shared_ptr<LlmGateway> backend;
  if (config.backend == "scripted") {
    if (config.script_path.empty()) throw Error(ErrorKind::configuration, "the scripted backend needs llm.script");
    backend = ScriptedBackend::load(config.script_path);
  } else {
    if (config.base_url.empty()) throw Error(ErrorKind::configuration, "the http backend needs llm.base_url");
    backend = std::make_shared<HttpBackend>(HttpBackendOptions{config.base_url, config.api_key_env});
  }
  if (config.transcript_mode == "record") {
    if (config.transcript_path.empty()) throw Error(ErrorKind::configuration, "record mode needs llm.transcript");
    return record_replay(TranscriptMode::record, config.transcript_path, backend);
  }
  return backend;
}

std::shared_ptr<const Engine> build_engine(const AppConfig& config) {
  auto context = std::make_shared<KnowledgeContext>();
  try {
    if (!config.entities_path.empty()) context->entities = std::make_shared<EntityKB>(EntityKB::load(config.entities_path));
    if (!config.products_path.empty()) {
      context->products = std::make_shared<ProductCatalog>(ProductCatalog::load(config.products_path));
    }
    if (!config.concepts_path.empty()) {
      context->concepts = std::make_shared<ConceptLexicon>(ConceptLexicon::load(config.concepts_path));
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::configuration, e.what());
  }
  context->product_thresholds = config.product_thresholds;
  context->llm.gateway = build_gateway(config.llm);
  context->llm.settings = LlmSettings{config.llm.model, config.llm.temperature, config.llm.max_tokens,
                                      std::chrono::milliseconds(config.llm.timeout_ms)};

  EngineOptions options;
  options.choice_cap = config.choice_cap;
  if (!config.decision_template_path.empty()) {
    options.decision_template = PromptTemplate::load(config.decision_template_path, decision_placeholders());
  }
  if (!config.question_template_path.empty()) {
    options.question_template = PromptTemplate::load(config.question_template_path, question_placeholders());
  }

  AgentRegistry registry;
  register_builtin_agents(registry, std::chrono::milliseconds(config.agent_timeout_ms));
  return std::make_shared<const Engine>(std::move(registry), std::move(context), std::move(options));
}

std::vector<FewShotExample> load_configured_few_shot(const AppConfig& config) {
  if (config.few_shot_path.empty()) return {};
  return load_few_shot(config.few_shot_path);
}

}  // namespace clarify
