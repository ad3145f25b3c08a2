#include "clarify/session_store.hpp"

#include <cstdio>
#include <fstream>
#include <random>

namespace clarify {

const char* to_string(TurnStatus s) {
  switch (s) {
    case TurnStatus::awaiting_feedback: return "awaiting_feedback";
    case TurnStatus::answered: return "answered";
    case TurnStatus::abandoned: return "abandoned";
    case TurnStatus::failed: return "failed";
  }
  return "unknown";
}

TurnStatus parse_turn_status(std::string_view name) {
  if (name == "awaiting_feedback") return TurnStatus::awaiting_feedback;
  if (name == "answered") return TurnStatus::answered;
  if (name == "abandoned") return TurnStatus::abandoned;
  if (name == "failed") return TurnStatus::failed;
  throw Error(ErrorKind::validation, "unknown turn status '" + std::string(name) + "'");
}

Turn* SessionState::find_turn(TurnId id) {
  for (auto& t : turns) {
    if (t.id() == id) return &t;
  }
  return nullptr;
}

void SessionState::check_invariants() const {
  TurnId previous = 0;
  for (const auto& t : turns) {
    if (t.id() <= previous) throw Error(ErrorKind::internal, "session " + session_id + ": turn ids not increasing");
    previous = t.id();
    if (t.feedback && !t.question) {
      throw Error(ErrorKind::internal, "session " + session_id + ": feedback recorded without a question");
    }
  }
}

Json to_json(const Turn& t) {
  Json outcomes = Json::array();
  for (const auto& o : t.outcomes) outcomes.push_back(to_json(o));
  Json j{{"turn_id", t.id()},
         {"query", t.query.text()},
         {"status", to_string(t.status)},
         {"outcomes", std::move(outcomes)},
         {"decision", to_json(t.decision)},
         {"question", nullptr},
         {"feedback", nullptr},
         {"refined_query", nullptr},
         {"final_response", nullptr},
         {"error", nullptr}};
  if (t.question) j["question"] = to_json(*t.question);
  if (t.feedback) j["feedback"] = to_json(*t.feedback);
  if (t.refined_query) j["refined_query"] = *t.refined_query;
  if (t.final_response) j["final_response"] = *t.final_response;
  if (t.error) j["error"] = *t.error;
  return j;
}

Json to_json(const SessionState& s) {
  Json turns = Json::array();
  for (const auto& t : s.turns) turns.push_back(to_json(t));
  return {{"session_id", s.session_id}, {"turns", std::move(turns)}};
}

namespace {

std::optional<std::string> optional_string(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

Turn turn_from_json(const Json& j) {
  UserQuery query = validate_query(j.at("query").get<std::string>(), j.at("turn_id").get<TurnId>());
  const std::size_t tokens = query.tokens().size();
  std::vector<AgentOutcome> outcomes;
  for (const auto& o : j.at("outcomes")) outcomes.push_back(outcome_from_json(o, tokens));
  Turn t{std::move(query), std::move(outcomes), decision_from_json(j.at("decision")), {}, {}, {}, {},
         parse_turn_status(j.at("status").get<std::string>()), {}};
  if (j.contains("question") && !j.at("question").is_null()) t.question = question_from_json(j.at("question"));
  if (j.contains("feedback") && !j.at("feedback").is_null()) t.feedback = feedback_from_json(j.at("feedback"));
  t.refined_query = optional_string(j, "refined_query");
  t.final_response = optional_string(j, "final_response");
  t.error = optional_string(j, "error");
  return t;
}

}  // namespace

SessionState session_from_json(const Json& j) {
  SessionState s;
  s.session_id = j.at("session_id").get<std::string>();
  for (const auto& t : j.at("turns")) s.turns.push_back(turn_from_json(t));
  s.check_invariants();
  return s;
}

std::string generate_session_id() {
  static thread_local std::random_device device;
  std::uniform_int_distribution<std::uint32_t> dist;
  std::string id;
  char buf[9];
  for (int i = 0; i < 4; ++i) {
    std::snprintf(buf, sizeof buf, "%08x", dist(device));
    id += buf;
  }
  return id;
}

std::string SessionStore::create() {
  auto slot = std::make_shared<Slot>();
  std::unique_lock lock(mutex_);
  std::string id;
  do {
    id = generate_session_id();
  } while (sessions_.count(id) > 0);
  slot->state.session_id = id;
  sessions_.emplace(id, std::move(slot));
  return id;
}

std::vector<std::string> SessionStore::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, slot] : sessions_) out.push_back(id);
  return out;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionStore::Slot> SessionStore::find_slot(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::not_found, "unknown session '" + id + "'");
  return it->second;
}

SessionState SessionStore::get(const std::string& id) const {
  auto slot = find_slot(id);
  std::lock_guard lock(slot->mutex);
  return slot->state;
}

void SessionStore::save_snapshot(const std::filesystem::path& path) const {
  Json sessions = Json::array();
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, slot] : sessions_) {
      std::lock_guard session_lock(slot->mutex);
      sessions.push_back(to_json(slot->state));
    }
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::internal, "cannot write session snapshot " + tmp);
    out << Json{{"sessions", std::move(sessions)}}.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

void SessionStore::load_snapshot(const std::filesystem::path& path) {
  std::map<std::string, std::shared_ptr<Slot>> loaded;
  std::ifstream in(path);
  if (in) {
    try {
      const Json j = Json::parse(in);
      for (const auto& s : j.at("sessions")) {
        auto slot = std::make_shared<Slot>();
        slot->state = session_from_json(s);
        const std::string id = slot->state.session_id;
        loaded.emplace(id, std::move(slot));
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::data, "session snapshot " + path.string() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::data, "session snapshot " + path.string() + ": " + e.what());
    }
  }
  std::unique_lock lock(mutex_);
  sessions_ = std::move(loaded);
}

}  // namespace clarify
