#pragma once

#include <memory>
#include <string>

#include "clarify/service.hpp"

namespace httplib {
class Server;
}

namespace clarify {

// HTTP+JSON front end for ClarificationService:
//
//   POST /v1/sessions
//   GET  /v1/sessions
//   GET  /v1/sessions/{id}
//   POST /v1/sessions/{id}/query                      {"text"}
//   POST /v1/sessions/{id}/turns/{turn_id}/feedback   {"choice_id"} | {"free_text"}
//   GET  /v1/agents
//   POST /v1/eval/run                                 {"dataset_path","pipeline"}
//
// Every response carries permissive CORS headers.
class HttpServer {
 public:
  explicit HttpServer(ClarificationService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Returns the bound port; port 0 picks a free one. Throws ErrorKind::configuration.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void serve();
  void stop();
  // Blocks until the server accepts connections (for tests running serve() on a thread).
  void wait_until_ready() const;

 private:
  ClarificationService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace clarify
