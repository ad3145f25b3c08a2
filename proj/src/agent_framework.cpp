#include "clarify/agent_framework.hpp"

#include <algorithm>
#include <future>
#include <thread>

namespace clarify {

const char* to_string(AgentKind k) {
  return k == AgentKind::detector ? "detector" : "grounding";
}

const char* to_string(AgentStatus s) {
  switch (s) {
    case AgentStatus::completed: return "completed";
    case AgentStatus::failed: return "failed";
    case AgentStatus::timed_out: return "timed_out";
    case AgentStatus::disabled: return "disabled";
  }
  return "unknown";
}

AgentStatus parse_agent_status(std::string_view name) {
  if (name == "completed") return AgentStatus::completed;
  if (name == "failed") return AgentStatus::failed;
  if (name == "timed_out") return AgentStatus::timed_out;
  if (name == "disabled") return AgentStatus::disabled;
  throw Error(ErrorKind::validation, "unknown agent status '" + std::string(name) + "'");
}

Json to_json(const AgentDescriptor& d) {
  return {{"agent_id", d.agent_id},
          {"kind", to_string(d.kind)},
          {"timeout_ms", d.timeout.count()},
          {"enabled", d.enabled}};
}

std::size_t DispatchReport::detection_count() const {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const AgentOutcome& o) { return o.detected(); }));
}

const AgentOutcome* DispatchReport::find(std::string_view agent_id) const {
  auto it = std::find_if(outcomes.begin(), outcomes.end(),
                         [&](const AgentOutcome& o) { return o.agent_id == agent_id; });
  return it == outcomes.end() ? nullptr : &*it;
}

Json to_json(const AgentOutcome& o) {
  Json j{{"agent_id", o.agent_id},
         {"kind", to_string(o.kind)},
         {"status", to_string(o.status)},
         {"detected", o.detected()},
         {"verdict", nullptr},
         {"error_detail", nullptr}};
  if (o.verdict) j["verdict"] = to_json(*o.verdict);
  if (o.error_detail) j["error_detail"] = *o.error_detail;
  return j;
}

AgentOutcome outcome_from_json(const Json& j, std::size_t token_count) {
  AgentOutcome o;
  o.agent_id = j.at("agent_id").get<std::string>();
  o.kind = j.at("kind").get<std::string>() == "grounding" ? AgentKind::grounding : AgentKind::detector;
  o.status = parse_agent_status(j.at("status").get<std::string>());
  if (j.contains("verdict") && !j.at("verdict").is_null()) o.verdict = verdict_from_json(j.at("verdict"), token_count);
  if (j.contains("error_detail") && !j.at("error_detail").is_null()) {
    o.error_detail = j.at("error_detail").get<std::string>();
  }
  return o;
}

void AgentRegistry::register_agent(AgentDescriptor descriptor, AnalyzeFn analyze) {
  if (descriptor.agent_id.empty()) throw Error(ErrorKind::configuration, "agent id must be non-empty");
  if (descriptor.timeout.count() <= 0) {
    throw Error(ErrorKind::configuration, "agent '" + descriptor.agent_id + "' needs a positive timeout");
  }
  if (!analyze) throw Error(ErrorKind::configuration, "agent '" + descriptor.agent_id + "' has no analyze function");
  const bool duplicate = std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) {
    return e.descriptor.agent_id == descriptor.agent_id;
  });
  if (duplicate) throw Error(ErrorKind::configuration, "agent '" + descriptor.agent_id + "' is already registered");
  entries_.push_back({std::move(descriptor), std::make_shared<const AnalyzeFn>(std::move(analyze))});
}

std::vector<AgentDescriptor> AgentRegistry::list() const {
  std::vector<AgentDescriptor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.descriptor);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct RunResult {
  std::optional<AgentVerdict> verdict;
  std::string error;
  std::chrono::milliseconds elapsed{0};
};

std::chrono::milliseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
}

}  // namespace

DispatchReport AgentRegistry::dispatch_all(const UserQuery& query,
                                           std::shared_ptr<const KnowledgeContext> context) const {
  if (entries_.empty()) throw Error(ErrorKind::configuration, "cannot dispatch: no agents registered");
  if (!context) throw Error(ErrorKind::configuration, "cannot dispatch: no knowledge context");

  const auto start = Clock::now();
  std::vector<std::optional<std::future<RunResult>>> pending(entries_.size());

  // Workers are detached: an agent that overruns its deadline keeps only its
  // own copies of the query, the function and the shared context alive.
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].descriptor.enabled) continue;
    auto promise = std::make_shared<std::promise<RunResult>>();
    pending[i] = promise->get_future();
    std::thread([promise, analyze = entries_[i].analyze, query, context, start] {
      RunResult result;
      try {
        result.verdict.emplace((*analyze)(query, *context));
      } catch (const std::exception& e) {
        result.error = e.what();
        if (result.error.empty()) result.error = "agent threw an exception";
      } catch (...) {
        result.error = "agent threw a non-standard exception";
      }
      result.elapsed = since(start);
      promise->set_value(std::move(result));
    }).detach();
  }

  DispatchReport report;
  report.outcomes.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& d = entries_[i].descriptor;
    AgentOutcome outcome;
    outcome.agent_id = d.agent_id;
    outcome.kind = d.kind;
    if (!pending[i]) {
      outcome.status = AgentStatus::disabled;
      report.outcomes.push_back(std::move(outcome));
      continue;
    }
    auto& future = *pending[i];
    if (future.wait_until(start + d.timeout) != std::future_status::ready) {
      outcome.status = AgentStatus::timed_out;
      outcome.error_detail = "agent exceeded its " + std::to_string(d.timeout.count()) + " ms timeout";
      outcome.wall_time = since(start);
      report.outcomes.push_back(std::move(outcome));
      continue;
    }
    RunResult result = future.get();
    outcome.wall_time = result.elapsed;
    if (!result.verdict) {
      outcome.status = AgentStatus::failed;
      outcome.error_detail = std::move(result.error);
    } else if (result.verdict->agent_id() != d.agent_id) {
      outcome.status = AgentStatus::failed;
      outcome.error_detail = "verdict carries agent id '" + result.verdict->agent_id() + "'";
    } else if (d.kind == AgentKind::grounding && result.verdict->detected()) {
      outcome.status = AgentStatus::failed;
      outcome.error_detail = "grounding agent reported a detection";
    } else {
      outcome.status = AgentStatus::completed;
      outcome.verdict = std::move(result.verdict);
    }
    report.outcomes.push_back(std::move(outcome));
  }
  return report;
}

}  // namespace clarify
