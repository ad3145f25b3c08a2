#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "httplib.h"

#include "clarify/config.hpp"
#include "clarify/detectors.hpp"
#include "clarify/engine.hpp"
#include "clarify/llm_gateway.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() {
  return CLARIFY_DATA_DIR;
}

inline std::filesystem::path demo_config() {
  return data_dir() / "demo" / "config.json";
}

inline std::filesystem::path table1_dir() {
  return data_dir() / "fixtures" / "table1";
}

// Fresh temp directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("clarify_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::shared_ptr<clarify::ScriptedBackend> scripted(const clarify::Json& rules) {
  return clarify::ScriptedBackend::from_json(rules);
}

inline clarify::LlmClient client(std::shared_ptr<clarify::LlmGateway> gateway) {
  return clarify::LlmClient{std::move(gateway), {}};
}

// Forwards to another gateway and counts calls whose prompt contains `marker`.
class CountingGateway final : public clarify::LlmGateway {
 public:
  CountingGateway(std::shared_ptr<clarify::LlmGateway> inner, std::string marker)
      : inner_(std::move(inner)), marker_(std::move(marker)) {}

  clarify::Completion complete(const clarify::CompletionRequest& request) override {
    ++total_;
    if (clarify::concatenate_prompt(request).find(marker_) != std::string::npos) ++marked_;
    return inner_->complete(request);
  }
  clarify::BackendKind backend() const override { return inner_->backend(); }

  std::size_t total() const { return total_.load(); }
  std::size_t marked() const { return marked_.load(); }

 private:
  std::shared_ptr<clarify::LlmGateway> inner_;
  std::string marker_;
  std::atomic<std::size_t> total_{0};
  std::atomic<std::size_t> marked_{0};
};

// Engine over the demo knowledge stores with the given gateway and registry.
inline std::shared_ptr<const clarify::Engine> demo_engine(std::shared_ptr<clarify::LlmGateway> gateway,
                                                          clarify::AgentRegistry registry) {
  const auto config = clarify::load_config(demo_config());
  auto context = std::make_shared<clarify::KnowledgeContext>();
  context->entities = std::make_shared<clarify::EntityKB>(clarify::EntityKB::load(config.entities_path));
  context->products = std::make_shared<clarify::ProductCatalog>(clarify::ProductCatalog::load(config.products_path));
  context->concepts = std::make_shared<clarify::ConceptLexicon>(clarify::ConceptLexicon::load(config.concepts_path));
  context->llm = client(std::move(gateway));
  return std::make_shared<const clarify::Engine>(std::move(registry), std::move(context));
}

inline std::shared_ptr<const clarify::Engine> demo_engine(std::shared_ptr<clarify::LlmGateway> gateway) {
  clarify::AgentRegistry registry;
  clarify::register_builtin_agents(registry);
  return demo_engine(std::move(gateway), std::move(registry));
}

inline std::shared_ptr<clarify::LlmGateway> demo_script() {
  return clarify::ScriptedBackend::load(data_dir() / "demo" / "script.json");
}

// httplib server on an ephemeral port, served from a background thread.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
  }
  ~LocalServer() { stop(); }

  httplib::Server& server() { return server_; }
  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline std::string chat_body(const std::string& content) {
  return clarify::Json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}},
                       {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}, {"total_tokens", 10}}}}
      .dump();
}

}  // namespace testsupport
