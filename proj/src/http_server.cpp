#include "clarify/http_server.hpp"

#include "httplib.h"

namespace clarify {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

Json parse_body(const httplib::Request& req) {
  try {
    Json j = Json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorKind::validation, "request body must be a JSON object");
    return j;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::validation, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string require_string(const Json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw Error(ErrorKind::validation, std::string("request body needs a string '") + key + "'");
  }
  return body.at(key).get<std::string>();
}

// Wraps a handler so clarify::Error maps onto its HTTP status.
template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send(res, http_status_for(e.kind()), error_body(e));
    } catch (const std::exception& e) {
      send(res, 500, error_body(Error(ErrorKind::internal, e.what())));
    }
  };
}

}  // namespace

HttpServer::HttpServer(ClarificationService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type, Authorization"}});

  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"status", "ok"}}); });

  s.Post("/v1/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
           send(res, 201, {{"session_id", service_.create_session()}});
         }));

  s.Get("/v1/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
          send(res, 200, service_.list_sessions());
        }));

  s.Get(R"(/v1/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send(res, 200, service_.get_session(req.matches[1]));
        }));

  s.Post(R"(/v1/sessions/([^/]+)/query)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = parse_body(req);
           auto reply = service_.post_query(req.matches[1], require_string(body, "text"));
           send(res, reply.http_status, reply.body);
         }));

  s.Post(R"(/v1/sessions/([^/]+)/turns/(\d+)/feedback)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = parse_body(req);
           TurnId turn_id = 0;
           try {
             turn_id = std::stoull(req.matches[2]);
           } catch (const std::exception&) {
             throw Error(ErrorKind::validation, "turn id out of range");
           }
           auto reply = service_.post_feedback(req.matches[1], turn_id, feedback_from_json(body));
           send(res, reply.http_status, reply.body);
         }));

  s.Get("/v1/agents", guarded([this](const httplib::Request&, httplib::Response& res) {
          send(res, 200, service_.list_agents());
        }));

  s.Post("/v1/eval/run", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Json body = parse_body(req);
           const auto pipeline = parse_pipeline(body.value("pipeline", std::string("multi_agent")));
           send(res, 200, service_.run_eval(require_string(body, "dataset_path"), pipeline));
         }));
}

HttpServer::~HttpServer() {
  stop();
}

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) {
    throw Error(ErrorKind::configuration, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::serve() {
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const {
  server_->wait_until_ready();
}

}  // namespace clarify
