#include <gtest/gtest.h>

#include <thread>

#include "clarify/http_server.hpp"
#include "clarify/service.hpp"
#include "test_support.hpp"

using namespace clarify;
using testsupport::TempDir;

namespace {

ClarificationService demo_service() {
  return ClarificationService(testsupport::demo_engine(testsupport::demo_script()));
}

std::vector<std::string> choice_ids(const Json& body) {
  std::vector<std::string> out;
  for (const auto& c : body.at("choices")) out.push_back(c.at("id"));
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected clarify::Error";
  return ErrorKind::internal;
}

const Json* detecting_agent(const Json& evidence) {
  for (const auto& e : evidence) {
    if (e.at("detected").get<bool>()) return &e;
  }
  return nullptr;
}

}  // namespace

TEST(Service, SegmentQueryAsksAboutProducts) {
  auto svc = demo_service();
  const auto sid = svc.create_session();
  const auto reply = svc.post_query(sid, "how do i create a segment");
  EXPECT_EQ(reply.http_status, 200);
  EXPECT_EQ(reply.body["status"], "clarification");
  EXPECT_EQ(reply.body["turn_id"], 1);
  EXPECT_EQ(reply.body["decision"]["label"], "needed");
  EXPECT_EQ(choice_ids(reply.body), (std::vector<std::string>{"P1", "P2"}));
  const Json* agent = detecting_agent(reply.body["evidence"]);
  ASSERT_NE(agent, nullptr);
  EXPECT_EQ((*agent)["agent_id"], "product_detector");

  const auto fb = svc.post_feedback(sid, 1, Feedback::choice("P2"));
  EXPECT_EQ(fb.http_status, 200);
  EXPECT_EQ(fb.body["refined_query"], "how do i create a segment (referring to: Customer Journey Analytics)");
  EXPECT_EQ(fb.body["answer"], "In Customer Journey Analytics open Components > Segments and select Create segment.");

  const Json session = svc.get_session(sid);
  ASSERT_EQ(session["turns"].size(), 1u);
  EXPECT_EQ(session["turns"][0]["status"], "answered");
  EXPECT_EQ(session["turns"][0]["feedback"]["choice_id"], "P2");
}

TEST(Service, SchemaQueryAsksAboutEntities) {
  auto svc = demo_service();
  const auto sid = svc.create_session();
  const auto reply = svc.post_query(sid, "what is a schema");
  EXPECT_EQ(reply.body["status"], "clarification");
  EXPECT_EQ(reply.body["question"], "Do you mean the XDM schema or the ad hoc schema?");
  EXPECT_EQ(choice_ids(reply.body), (std::vector<std::string>{"E1", "E2"}));
  EXPECT_EQ((*detecting_agent(reply.body["evidence"]))["agent_id"], "entity_linker");

  const auto fb = svc.post_feedback(sid, 1, Feedback::free_text("the query service one"));
  EXPECT_EQ(fb.body["refined_query"], "what is a schema (clarification: the query service one)");
}

TEST(Service, QuietQueryIsAnsweredDirectly) {
  auto svc = demo_service();
  const auto sid = svc.create_session();
  const auto reply = svc.post_query(sid, "show the journey campaign status");
  EXPECT_EQ(reply.body["status"], "answer");
  EXPECT_EQ(reply.body["decision"]["llm_consulted"], false);
  EXPECT_FALSE(reply.body.contains("choices"));
  EXPECT_EQ(kind_of([&] { svc.post_feedback(sid, 1, Feedback::choice("P3")); }), ErrorKind::conflict);
}

TEST(Service, SecondFeedbackConflicts) {
  auto svc = demo_service();
  const auto sid = svc.create_session();
  svc.post_query(sid, "what is a schema");
  svc.post_feedback(sid, 1, Feedback::choice("E1"));
  EXPECT_EQ(kind_of([&] { svc.post_feedback(sid, 1, Feedback::choice("E2")); }), ErrorKind::conflict);
}

TEST(Service, InvalidChoiceLeavesTurnPending) {
  auto svc = demo_service();
  const auto sid = svc.create_session();
  svc.post_query(sid, "what is a schema");
  EXPECT_EQ(kind_of([&] { svc.post_feedback(sid, 1, Feedback::choice("E9")); }), ErrorKind::invalid_feedback);
  EXPECT_EQ(http_status_for(ErrorKind::invalid_feedback), 422);
  EXPECT_EQ(svc.get_session(sid)["turns"][0]["status"], "awaiting_feedback");
  EXPECT_EQ(svc.post_feedback(sid, 1, Feedback::choice("E1")).http_status, 200);
}

TEST(Service, NewQueryAbandonsPendingClarification) {
  auto svc = demo_service();
  const auto sid = svc.create_session();
  svc.post_query(sid, "what is a schema");
  const auto second = svc.post_query(sid, "how do i create a segment");
  EXPECT_EQ(second.body["turn_id"], 2);
  const Json session = svc.get_session(sid);
  EXPECT_EQ(session["turns"][0]["status"], "abandoned");
  EXPECT_EQ(session["turns"][1]["status"], "awaiting_feedback");
  EXPECT_EQ(kind_of([&] { svc.post_feedback(sid, 1, Feedback::choice("E1")); }), ErrorKind::conflict);
}

TEST(Service, ClientErrors) {
  auto svc = demo_service();
  EXPECT_EQ(kind_of([&] { svc.post_query("nope", "hello"); }), ErrorKind::not_found);
  EXPECT_EQ(kind_of([&] { (void)svc.get_session("nope"); }), ErrorKind::not_found);
  const auto sid = svc.create_session();
  EXPECT_EQ(kind_of([&] { svc.post_query(sid, "   "); }), ErrorKind::validation);
  EXPECT_EQ(kind_of([&] { svc.post_query(sid, std::string(4097, 'a')); }), ErrorKind::validation);
  EXPECT_EQ(kind_of([&] { svc.post_feedback(sid, 7, Feedback::choice("x")); }), ErrorKind::not_found);
  EXPECT_TRUE(svc.get_session(sid)["turns"].empty());
}

TEST(Service, AnsweringFailureIsRecorded) {
  auto gw = testsupport::scripted(Json::parse(R"([{"contains": "SENTENCE-LEVEL", "response": "NONE: fine"}])"));
  ClarificationService svc(testsupport::demo_engine(gw));
  const auto sid = svc.create_session();
  const auto reply = svc.post_query(sid, "list my datasets");
  EXPECT_EQ(reply.http_status, 502);
  EXPECT_EQ(reply.body["status"], "failed");
  const Json turn = svc.get_session(sid)["turns"][0];
  EXPECT_EQ(turn["status"], "failed");
  EXPECT_FALSE(turn["error"].is_null());
}

TEST(Service, SnapshotRoundTrip) {
  auto svc = demo_service();
  const auto a = svc.create_session();
  svc.post_query(a, "what is a schema");
  svc.post_feedback(a, 1, Feedback::choice("E1"));
  svc.post_query(a, "how do i create a segment");
  const auto b = svc.create_session();
  svc.post_query(b, "show the journey campaign status");

  TempDir tmp;
  svc.store().save_snapshot(tmp / "sessions.json");
  auto restored = demo_service();
  restored.store().load_snapshot(tmp / "sessions.json");
  EXPECT_EQ(restored.get_session(a), svc.get_session(a));
  EXPECT_EQ(restored.get_session(b), svc.get_session(b));
  EXPECT_EQ(restored.post_feedback(a, 2, Feedback::choice("P1")).http_status, 200);

  SessionStore empty;
  empty.load_snapshot(tmp / "missing.json");
  EXPECT_EQ(empty.size(), 0u);
}

TEST(Service, ConcurrentSessionsStayIndependent) {
  auto svc = demo_service();
  constexpr int kSessions = 16;
  std::vector<std::string> ids;
  for (int i = 0; i < kSessions; ++i) ids.push_back(svc.create_session());
  std::vector<std::thread> threads;
  for (int i = 0; i < kSessions; ++i) {
    threads.emplace_back([&, i] {
      for (int k = 0; k < 5; ++k) {
        svc.post_query(ids[i], i % 2 ? "what is a schema" : "how do i create a segment");
        svc.post_feedback(ids[i], static_cast<TurnId>(k + 1), Feedback::choice(i % 2 ? "E2" : "P1"));
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& id : ids) {
    const Json s = svc.get_session(id);
    ASSERT_EQ(s["turns"].size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_EQ(s["turns"][k]["turn_id"], k + 1);
      EXPECT_EQ(s["turns"][k]["status"], "answered");
    }
  }
  EXPECT_EQ(svc.list_sessions()["sessions"].size(), static_cast<std::size_t>(kSessions));
}

TEST(Service, RepliesAreDeterministic) {
  auto one = demo_service();
  auto two = demo_service();
  const auto s1 = one.create_session();
  const auto s2 = two.create_session();
  for (const char* q : {"what is a schema", "how do i create a segment", "fix it", "show the journey campaign status"}) {
    EXPECT_EQ(one.post_query(s1, q).body.dump(), two.post_query(s2, q).body.dump()) << q;
  }
}

TEST(Service, RunEvalAndAgents) {
  const auto config = load_config(testsupport::table1_dir() / "config.json");
  ClarificationService svc(build_engine(config), load_configured_few_shot(config));
  const Json multi = svc.run_eval(testsupport::table1_dir() / "dataset_multi_agent.jsonl", PipelineKind::multi_agent);
  EXPECT_EQ(multi["matrix"]["tp"], 47);
  EXPECT_EQ(multi["matrix"]["fn"], 27);
  const Json base = svc.run_eval(testsupport::table1_dir() / "dataset_baseline.jsonl", PipelineKind::baseline);
  EXPECT_EQ(base["matrix"]["tp"], 60);
  EXPECT_EQ(kind_of([&] { (void)svc.run_eval("/nonexistent.jsonl", PipelineKind::multi_agent); }), ErrorKind::data);

  const Json agents = svc.list_agents()["agents"];
  ASSERT_EQ(agents.size(), 4u);
  EXPECT_EQ(agents[0]["agent_id"], "generic_detector");
  EXPECT_EQ(agents[3]["kind"], "grounding");
}

class HttpApi : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.serve(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  std::string new_session() const {
    auto res = client().Post("/v1/sessions", "", "application/json");
    return Json::parse(res->body)["session_id"];
  }

  ClarificationService service_{testsupport::demo_engine(testsupport::demo_script())};
  HttpServer server_{service_};
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpApi, ClarificationLoop) {
  auto cli = client();
  auto created = cli.Post("/v1/sessions", "", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string sid = Json::parse(created->body)["session_id"];
  EXPECT_EQ(sid.size(), 32u);

  auto q = cli.Post("/v1/sessions/" + sid + "/query", R"({"text":"what is a schema"})", "application/json");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->status, 200);
  const Json body = Json::parse(q->body);
  EXPECT_EQ(body["status"], "clarification");
  EXPECT_EQ(choice_ids(body), (std::vector<std::string>{"E1", "E2"}));

  auto fb = cli.Post("/v1/sessions/" + sid + "/turns/1/feedback", R"({"choice_id":"E1"})", "application/json");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->status, 200);
  EXPECT_NE(Json::parse(fb->body)["refined_query"].get<std::string>().find("XDM Individual Profile Schema"),
            std::string::npos);

  auto again = cli.Post("/v1/sessions/" + sid + "/turns/1/feedback", R"({"choice_id":"E2"})", "application/json");
  EXPECT_EQ(again->status, 409);
  EXPECT_EQ(Json::parse(again->body)["error"]["kind"], "conflict");

  auto session = cli.Get("/v1/sessions/" + sid);
  EXPECT_EQ(session->status, 200);
  EXPECT_EQ(Json::parse(session->body)["turns"][0]["status"], "answered");
  auto list = cli.Get("/v1/sessions");
  EXPECT_EQ(Json::parse(list->body)["sessions"][0], sid);
}

TEST_F(HttpApi, ErrorStatuses) {
  auto cli = client();
  const std::string sid = new_session();
  EXPECT_EQ(cli.Get("/v1/sessions/unknown")->status, 404);
  EXPECT_EQ(cli.Post("/v1/sessions/unknown/query", R"({"text":"hi"})", "application/json")->status, 404);
  EXPECT_EQ(cli.Post("/v1/sessions/" + sid + "/query", "not json", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/v1/sessions/" + sid + "/query", R"({"text":7})", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/v1/sessions/" + sid + "/query", R"({"text":"  "})", "application/json")->status, 400);
  cli.Post("/v1/sessions/" + sid + "/query", R"({"text":"how do i create a segment"})", "application/json");
  EXPECT_EQ(cli.Post("/v1/sessions/" + sid + "/turns/1/feedback", R"({"choice_id":"Z"})", "application/json")->status,
            422);
  EXPECT_EQ(cli.Post("/v1/sessions/" + sid + "/turns/1/feedback", R"({})", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/v1/sessions/" + sid + "/turns/9/feedback", R"({"choice_id":"P1"})", "application/json")->status,
            404);
  EXPECT_EQ(cli.Post("/v1/eval/run", R"({"dataset_path":"/nonexistent.jsonl"})", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/v1/eval/run", R"({"dataset_path":"x","pipeline":"other"})", "application/json")->status, 400);
}

TEST_F(HttpApi, PreflightHealthAndAgents) {
  auto cli = client();
  auto pre = cli.Options("/v1/sessions");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);

  auto health = cli.Get("/healthz");
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(Json::parse(health->body)["status"], "ok");

  auto agents = cli.Get("/v1/agents");
  EXPECT_EQ(agents->status, 200);
  EXPECT_EQ(Json::parse(agents->body)["agents"].size(), 4u);
}

TEST_F(HttpApi, EvalEndpoint) {
  const std::string path = (testsupport::table1_dir() / "dataset_multi_agent.jsonl").string();
  auto res = client().Post("/v1/eval/run", Json{{"dataset_path", path}, {"pipeline", "multi_agent"}}.dump(),
                           "application/json");
  ASSERT_TRUE(res);
  // The demo script has no per-record rules, so only the shape is checked here.
  EXPECT_EQ(res->status, 200);
  const Json body = Json::parse(res->body);
  EXPECT_EQ(body["records"].size(), 100u);
  EXPECT_TRUE(body.contains("macro"));
}
