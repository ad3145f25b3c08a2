#include "clarify/engine.hpp"

namespace clarify {

Engine::Engine(AgentRegistry registry, std::shared_ptr<const KnowledgeContext> context, EngineOptions options)
    : registry_(std::move(registry)), context_(std::move(context)), options_(std::move(options)) {
  if (registry_.empty()) throw Error(ErrorKind::configuration, "engine needs at least one registered agent");
  if (!context_) throw Error(ErrorKind::configuration, "engine needs a knowledge context");
  if (options_.choice_cap == 0) throw Error(ErrorKind::configuration, "choice_cap must be at least 1");
}

Analysis Engine::analyze(const UserQuery& query) const {
  DispatchReport report = registry_.dispatch_all(query, context_);
  DecisionResult decision = decide_detailed(query, report, context_->llm, options_.decision_template);
  return {std::move(report), std::move(decision)};
}

TurnResult Engine::run_turn(const UserQuery& query) const {
  Analysis analysis = analyze(query);
  TurnResult result{std::move(analysis.report), std::move(analysis.decision.decision), {}, {}, {}};
  if (result.decision.needed()) {
    auto choices = derive_choices(result.report, options_.choice_cap);
    result.question = generate_question(query, result.report, std::move(choices), context_->llm,
                                        options_.question_template, options_.choice_cap);
    return result;
  }
  try {
    result.answer = finalize(query.text(), context_->llm);
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

FeedbackResult Engine::apply_feedback(const UserQuery& query, const Feedback& feedback,
                                      const ClarificationQuestion& question) const {
  FeedbackResult result{refine_query(query, feedback, question), {}, {}};
  try {
    result.answer = finalize(result.refined_query, context_->llm);
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

}  // namespace clarify
