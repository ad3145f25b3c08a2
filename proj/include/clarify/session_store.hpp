#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "clarify/agent_framework.hpp"
#include "clarify/core.hpp"

namespace clarify {

enum class TurnStatus {
  awaiting_feedback,  // clarification asked, no feedback yet
  answered,
  abandoned,          // superseded by a newer query before feedback arrived
  failed,             // answering failed; `error` says why
};

const char* to_string(TurnStatus s);
TurnStatus parse_turn_status(std::string_view name);

struct Turn {
  UserQuery query;
  std::vector<AgentOutcome> outcomes;
  Decision decision;
  std::optional<ClarificationQuestion> question;
  std::optional<Feedback> feedback;
  std::optional<std::string> refined_query;
  std::optional<std::string> final_response;
  TurnStatus status = TurnStatus::answered;
  std::optional<std::string> error;

  [[nodiscard]] TurnId id() const noexcept { return query.turn_id(); }
};

struct SessionState {
  std::string session_id;
  std::vector<Turn> turns;

  [[nodiscard]] TurnId next_turn_id() const noexcept { return turns.empty() ? 1 : turns.back().id() + 1; }
  [[nodiscard]] Turn* find_turn(TurnId id);

  // Feedback only with a question; strictly increasing turn ids.
  void check_invariants() const;
};

Json to_json(const Turn& t);
Json to_json(const SessionState& s);
SessionState session_from_json(const Json& j);

// 128 random bits, hex encoded.
std::string generate_session_id();

// Sessions keyed by opaque id. Mutations of one session are serialized by
// that session's own mutex; distinct sessions never block each other.
class SessionStore {
 public:
  std::string create();

  [[nodiscard]] std::vector<std::string> ids() const;
  [[nodiscard]] std::size_t size() const;

  // Copy of the current state. Throws ErrorKind::not_found.
  [[nodiscard]] SessionState get(const std::string& id) const;

  // Runs fn(SessionState&) under the session's lock and re-checks the
  // invariants before releasing it. Throws ErrorKind::not_found.
  template <typename F>
  auto mutate(const std::string& id, F&& fn) {
    auto slot = find_slot(id);
    std::lock_guard lock(slot->mutex);
    if constexpr (std::is_void_v<decltype(fn(slot->state))>) {
      fn(slot->state);
      slot->state.check_invariants();
    } else {
      auto result = fn(slot->state);
      slot->state.check_invariants();
      return result;
    }
  }

  void save_snapshot(const std::filesystem::path& path) const;
  // Replaces the current contents. A missing file leaves the store empty.
  void load_snapshot(const std::filesystem::path& path);

 private:
  struct Slot {
    std::mutex mutex;
    SessionState state;
  };

  std::shared_ptr<Slot> find_slot(const std::string& id) const;

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace clarify
