#include "clarify/prompt_template.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace clarify {

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(text.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

LabelledReply split_labelled_reply(std::string_view reply) {
  const std::string text = trim(reply);
  std::size_t i = 0;
  std::string label;
  while (i < text.size() && (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
    label.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text[i]))));
    ++i;
  }
  if (i < text.size() && text[i] != ':' && !std::isspace(static_cast<unsigned char>(text[i]))) return {};
  std::string rest = trim(std::string_view(text).substr(i));
  if (!rest.empty() && rest.front() == ':') rest = trim(std::string_view(rest).substr(1));
  if (auto nl = rest.find('\n'); nl != std::string::npos) rest = trim(std::string_view(rest).substr(0, nl));
  return {std::move(label), std::move(rest)};
}

PromptTemplate PromptTemplate::parse(std::string_view text, const std::vector<std::string>& required_placeholders) {
  enum class Section { none, system, user } section = Section::none;
  std::string system;
  std::string user;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string marker = trim(line);
    if (marker == "[system]") {
      section = Section::system;
      continue;
    }
    if (marker == "[user]") {
      section = Section::user;
      continue;
    }
    if (section == Section::system) system += line + "\n";
    else if (section == Section::user) user += line + "\n";
    else if (!marker.empty() && marker.front() != '#') {
      throw Error(ErrorKind::configuration, "prompt template text before the [system] section");
    }
  }
  PromptTemplate t;
  t.system_ = trim(system);
  t.user_ = trim(user);
  if (t.system_.empty() || t.user_.empty()) {
    throw Error(ErrorKind::configuration, "prompt template needs non-empty [system] and [user] sections");
  }
  for (const auto& name : required_placeholders) {
    const std::string token = "{" + name + "}";
    if (t.system_.find(token) == std::string::npos && t.user_.find(token) == std::string::npos) {
      throw Error(ErrorKind::configuration, "prompt template is missing placeholder " + token);
    }
  }
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path,
                                    const std::vector<std::string>& required_placeholders) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::configuration, "cannot open prompt template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str(), required_placeholders);
  } catch (const Error& e) {
    throw Error(ErrorKind::configuration, path.string() + ": " + e.what());
  }
}

std::vector<ChatMessage> PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  return {{Role::system, substitute(system_, values)}, {Role::user, substitute(user_, values)}};
}

}  // namespace clarify
