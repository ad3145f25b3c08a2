#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clarify/engine.hpp"
#include "clarify/eval.hpp"
#include "clarify/knowledge.hpp"
#include "clarify/llm_gateway.hpp"

namespace clarify {

struct LlmConfig {
  std::string backend = "scripted";  // http | scripted
  std::string base_url;
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_ms = 30000;
  int max_tokens = 512;
  double temperature = 0.0;
  std::filesystem::path script_path;
  std::string transcript_mode = "off";  // off | record | replay
  std::filesystem::path transcript_path;
};

struct AppConfig {
  LlmConfig llm;
  int agent_timeout_ms = 5000;
  ProductThresholds product_thresholds;
  std::size_t choice_cap = kDefaultChoiceCap;

  std::filesystem::path entities_path;
  std::filesystem::path products_path;
  std::filesystem::path concepts_path;
  std::filesystem::path decision_template_path;  // empty: built-in template
  std::filesystem::path question_template_path;  // empty: built-in template
  std::filesystem::path few_shot_path;

  std::string bind_host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path snapshot_path;  // empty: no persistence
  std::size_t eval_parallelism = 4;
};

// Relative paths inside the file resolve against the file's directory.
// Problems are reported as ErrorKind::configuration.
AppConfig load_config(const std::filesystem::path& path);
AppConfig config_from_json(const Json& j, const std::filesystem::path& base_dir);

std::shared_ptr<LlmGateway> build_gateway(const LlmConfig& config);

// Loads the knowledge stores and templates and registers the built-in agents.
std::shared_ptr<const Engine> build_engine(const AppConfig& config);

// Empty when no few-shot file is configured.
std::vector<FewShotExample> load_configured_few_shot(const AppConfig& config);

}  // namespace clarify
