#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clarify/core.hpp"

namespace clarify {

struct KnowledgeContext;

enum class AgentKind { detector, grounding };

const char* to_string(AgentKind k);

inline constexpr std::chrono::milliseconds kDefaultAgentTimeout{5000};

struct AgentDescriptor {
  std::string agent_id;
  AgentKind kind = AgentKind::detector;
  std::chrono::milliseconds timeout = kDefaultAgentTimeout;
  bool enabled = true;
};

Json to_json(const AgentDescriptor& d);

// Invoked concurrently from worker threads; must not share mutable state.
using AnalyzeFn = std::function<AgentVerdict(const UserQuery&, const KnowledgeContext&)>;

enum class AgentStatus { completed, failed, timed_out, disabled };

const char* to_string(AgentStatus s);
AgentStatus parse_agent_status(std::string_view name);

struct AgentOutcome {
  std::string agent_id;
  AgentKind kind = AgentKind::detector;
  AgentStatus status = AgentStatus::disabled;
  std::optional<AgentVerdict> verdict;     // present iff completed
  std::optional<std::string> error_detail;  // present for failed / timed_out
  std::chrono::milliseconds wall_time{0};

  // Failed, timed-out and disabled agents count as "not detected".
  [[nodiscard]] bool detected() const { return verdict && verdict->detected(); }
};

struct DispatchReport {
  std::vector<AgentOutcome> outcomes;  // registration order

  [[nodiscard]] std::size_t detection_count() const;
  [[nodiscard]] bool any_detected() const { return detection_count() > 0; }
  [[nodiscard]] const AgentOutcome* find(std::string_view agent_id) const;
};

// wall_time is omitted: it is the only nondeterministic field.
Json to_json(const AgentOutcome& o);
AgentOutcome outcome_from_json(const Json& j, std::size_t token_count);

class AgentRegistry {
 public:
  // Throws ErrorKind::configuration on a duplicate or empty id, a
  // non-positive timeout, or a missing analyze function.
  void register_agent(AgentDescriptor descriptor, AnalyzeFn analyze);

  [[nodiscard]] std::vector<AgentDescriptor> list() const;
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

  // Runs every enabled agent concurrently, each under its own deadline.
  // An agent that throws is reported failed, one that overruns is reported
  // timed_out and abandoned; neither affects the others. Throws
  // ErrorKind::configuration on an empty registry.
  [[nodiscard]] DispatchReport dispatch_all(const UserQuery& query,
                                            std::shared_ptr<const KnowledgeContext> context) const;

 private:
  struct Entry {
    AgentDescriptor descriptor;
    std::shared_ptr<const AnalyzeFn> analyze;
  };
  std::vector<Entry> entries_;
};

}  // namespace clarify
