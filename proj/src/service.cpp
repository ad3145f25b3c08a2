#include "clarify/service.hpp"

namespace clarify {

int http_status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::data:
      return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::invalid_feedback: return 422;
    case ErrorKind::gateway: return 502;
    case ErrorKind::configuration:
    case ErrorKind::precondition:
    case ErrorKind::internal:
      return 500;
  }
  return 500;
}

Json error_body(const Error& e) {
  return {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}};
}

Json evidence_summary(const std::vector<AgentOutcome>& outcomes) {
  Json out = Json::array();
  for (const auto& o : outcomes) {
    Json j{{"agent_id", o.agent_id},
           {"kind", to_string(o.kind)},
           {"status", to_string(o.status)},
           {"detected", o.detected()},
           {"category", nullptr},
           {"candidates", Json::array()},
           {"rationale", nullptr}};
    if (o.verdict && o.verdict->evidence()) {
      const Evidence& e = *o.verdict->evidence();
      if (e.category()) j["category"] = to_string(*e.category());
      for (const auto& c : e.candidates()) j["candidates"].push_back({{"id", c.id}, {"label", c.label}});
      j["rationale"] = e.rationale();
    }
    if (o.error_detail) j["error_detail"] = *o.error_detail;
    out.push_back(std::move(j));
  }
  return out;
}

ClarificationService::ClarificationService(std::shared_ptr<const Engine> engine, std::vector<FewShotExample> few_shot,
                                           std::size_t eval_parallelism)
    : engine_(std::move(engine)), few_shot_(std::move(few_shot)), eval_parallelism_(eval_parallelism) {
  if (!engine_) throw Error(ErrorKind::configuration, "service needs an engine");
}

std::string ClarificationService::create_session() {
  return store_.create();
}

ServiceReply ClarificationService::post_query(const std::string& session_id, std::string_view text) {
  // Validate before taking the session lock so bad input never touches state.
  (void)validate_query(text);
  return store_.mutate(session_id, [&](SessionState& state) {
    UserQuery query = validate_query(text, state.next_turn_id());
    for (auto& t : state.turns) {
      if (t.status == TurnStatus::awaiting_feedback) t.status = TurnStatus::abandoned;
    }
    TurnResult result = engine_->run_turn(query);

    ServiceReply reply;
    reply.body = {{"turn_id", query.turn_id()},
                  {"decision", to_json(result.decision)},
                  {"evidence", evidence_summary(result.report.outcomes)}};
    Turn turn{query, std::move(result.report.outcomes), result.decision, {}, {}, {}, {}, TurnStatus::answered, {}};
    if (result.question) {
      turn.status = TurnStatus::awaiting_feedback;
      reply.body["status"] = "clarification";
      reply.body["question"] = result.question->text();
      reply.body["choices"] = to_json(*result.question)["choices"];
      turn.question = std::move(result.question);
    } else if (result.answer) {
      reply.body["status"] = "answer";
      reply.body["answer"] = *result.answer;
      turn.final_response = std::move(result.answer);
    } else {
      turn.status = TurnStatus::failed;
      turn.error = result.error.value_or("answering failed");
      reply.http_status = 502;
      reply.body["status"] = "failed";
      reply.body["error"] = *turn.error;
    }
    state.turns.push_back(std::move(turn));
    return reply;
  });
}

ServiceReply ClarificationService::post_feedback(const std::string& session_id, TurnId turn_id,
                                                 const Feedback& feedback) {
  return store_.mutate(session_id, [&](SessionState& state) {
    Turn* turn = state.find_turn(turn_id);
    if (turn == nullptr) {
      throw Error(ErrorKind::not_found, "session has no turn " + std::to_string(turn_id));
    }
    if (turn->status != TurnStatus::awaiting_feedback || !turn->question || turn->feedback) {
      throw Error(ErrorKind::conflict, "turn " + std::to_string(turn_id) + " has no pending clarification (status " +
                                           to_string(turn->status) + ")");
    }
    FeedbackResult result = engine_->apply_feedback(turn->query, feedback, *turn->question);

    turn->feedback = feedback;
    turn->refined_query = result.refined_query;
    ServiceReply reply;
    reply.body = {{"turn_id", turn_id}, {"refined_query", result.refined_query}};
    if (result.answer) {
      turn->status = TurnStatus::answered;
      turn->final_response = result.answer;
      reply.body["status"] = "answer";
      reply.body["answer"] = *result.answer;
    } else {
      turn->status = TurnStatus::failed;
      turn->error = result.error.value_or("answering failed");
      reply.http_status = 502;
      reply.body["status"] = "failed";
      reply.body["error"] = *turn->error;
    }
    return reply;
  });
}

Json ClarificationService::get_session(const std::string& session_id) const {
  return to_json(store_.get(session_id));
}

Json ClarificationService::list_sessions() const {
  return {{"sessions", store_.ids()}};
}

Json ClarificationService::list_agents() const {
  Json agents = Json::array();
  for (const auto& d : engine_->registry().list()) agents.push_back(to_json(d));
  return {{"agents", std::move(agents)}};
}

Json ClarificationService::run_eval(const std::filesystem::path& dataset_path, PipelineKind pipeline) const {
  const auto records = load_dataset(dataset_path);
  const auto run = run_pipeline(records, pipeline, *engine_, few_shot_, RunOptions{eval_parallelism_});
  const auto metrics = compute_metrics(run.predictions(), records);
  return report_json(run, records, metrics);
}

}  // namespace clarify
