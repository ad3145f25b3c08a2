#include <cstdlib>
#include <future>
#include <thread>

#include "httplib.h"

#include "clarify/llm_gateway.hpp"

namespace clarify {

HttpBackend::HttpBackend(HttpBackendOptions options) : path_(std::move(options.path)) {
  const std::string& url = options.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) {
    throw Error(ErrorKind::configuration, "LLM base_url must look like scheme://host[:port][/path], got '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorKind::configuration, "unsupported LLM base_url scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (origin_.size() <= scheme_end + 3) throw Error(ErrorKind::configuration, "LLM base_url has no host");

  if (!options.api_key_env.empty()) {
    const char* key = std::getenv(options.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorKind::configuration, "environment variable " + options.api_key_env + " is not set");
    }
    bearer_ = key;
  }
}

Json HttpBackend::request_body(const CompletionRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens},
          {"stream", false}};
}

Completion HttpBackend::parse_response(const std::string& body) {
  try {
    const Json j = Json::parse(body);
    const auto& choices = j.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw GatewayError(GatewayFailure::bad_response, "chat-completions response has no choices");
    }
    const auto& content = choices.at(0).at("message").at("content");
    Completion out{content.is_string() ? content.get<std::string>() : std::string{}, {}};
    if (auto it = j.find("usage"); it != j.end() && it->is_object()) {
      out.usage.prompt_tokens = it->value("prompt_tokens", std::int64_t{0});
      out.usage.completion_tokens = it->value("completion_tokens", std::int64_t{0});
      out.usage.total_tokens = it->value("total_tokens", out.usage.prompt_tokens + out.usage.completion_tokens);
    }
    return out;
  } catch (const Json::exception& e) {
    throw GatewayError(GatewayFailure::bad_response, std::string("malformed chat-completions response: ") + e.what());
  }
}

namespace {

struct CallOutcome {
  bool ok = false;
  Completion completion;
  GatewayFailure failure = GatewayFailure::transport;
  std::string message;
  int status = 0;
};

}  // namespace

Completion HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  const std::string body = request_body(request).dump();
  const auto timeout = request.timeout;

  // The worker owns its client so a call abandoned at the deadline can finish
  // (bounded by the socket timeouts) without touching this object.
  auto promise = std::make_shared<std::promise<CallOutcome>>();
  auto future = promise->get_future();
  std::thread([promise, origin = origin_, path = path_prefix_ + path_, bearer = bearer_, body, timeout] {
    CallOutcome outcome;
    try {
      httplib::Client client(origin);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
      auto result = client.Post(path, headers, body, "application/json");
      if (!result) {
        const auto err = result.error();
        outcome.failure = err == httplib::Error::ConnectionTimeout ? GatewayFailure::deadline : GatewayFailure::transport;
        outcome.message = "LLM request to " + origin + path + " failed: " + httplib::to_string(err);
      } else if (result->status < 200 || result->status >= 300) {
        outcome.failure = GatewayFailure::http_status;
        outcome.status = result->status;
        outcome.message = "LLM endpoint returned HTTP " + std::to_string(result->status) + ": " +
                          result->body.substr(0, 200);
      } else {
        outcome.completion = parse_response(result->body);
        outcome.ok = true;
      }
    } catch (const GatewayError& e) {
      outcome.failure = e.failure();
      outcome.message = e.what();
    } catch (const std::exception& e) {
      outcome.failure = GatewayFailure::transport;
      outcome.message = e.what();
    }
    promise->set_value(std::move(outcome));
  }).detach();

  if (future.wait_for(timeout) != std::future_status::ready) {
    throw GatewayError(GatewayFailure::deadline,
                       "LLM request exceeded its " + std::to_string(timeout.count()) + " ms deadline");
  }
  CallOutcome outcome = future.get();
  if (!outcome.ok) throw GatewayError(outcome.failure, outcome.message, outcome.status);
  return std::move(outcome.completion);
}

}  // namespace clarify
