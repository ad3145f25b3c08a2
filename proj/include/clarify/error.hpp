#pragma once

#include <stdexcept>
#include <string>

namespace clarify {

enum class ErrorKind {
  validation,        // malformed caller input (bad query text, bad feedback)
  configuration,     // bad config, duplicate agent id, wrong template
  precondition,      // caller broke an operation contract
  not_found,         // unknown session / turn
  conflict,          // turn not in a state that accepts the request
  invalid_feedback,  // feedback names a choice the question never offered
  gateway,           // LLM backend failure, see GatewayError for detail
  data,              // malformed dataset / knowledge-store file
  internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace clarify
