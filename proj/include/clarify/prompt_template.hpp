#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clarify/llm_gateway.hpp"

namespace clarify {

// Two-part chat template. File layout:
//
//   [system]
//   ...instruction text...
//   [user]
//   ...text with {placeholders}...
//
// Placeholders are replaced in a single left-to-right pass, so substituted
// values are never re-expanded. Unknown {names} are left as written.
class PromptTemplate {
 public:
  // Throws ErrorKind::configuration if a section is missing or empty, or a
  // required placeholder never appears.
  static PromptTemplate parse(std::string_view text, const std::vector<std::string>& required_placeholders);
  static PromptTemplate load(const std::filesystem::path& path,
                             const std::vector<std::string>& required_placeholders);

  [[nodiscard]] std::vector<ChatMessage> render(const std::map<std::string, std::string>& values) const;

  [[nodiscard]] const std::string& system() const noexcept { return system_; }
  [[nodiscard]] const std::string& user() const noexcept { return user_; }

 private:
  std::string system_;
  std::string user_;
};

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values);

struct LabelledReply {
  std::string label;   // leading [A-Za-z_] run, uppercased; empty if malformed
  std::string reason;  // rest of the first line after an optional ':'
};

// Splits replies of the form "LABEL: reason". The label must be followed by
// ':', whitespace or the end of the reply.
LabelledReply split_labelled_reply(std::string_view reply);

}  // namespace clarify
