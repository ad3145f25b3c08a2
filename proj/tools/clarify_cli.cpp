#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "clarify/config.hpp"
#include "clarify/engine.hpp"
#include "clarify/eval.hpp"
#include "clarify/http_server.hpp"
#include "clarify/service.hpp"

namespace {

using namespace clarify;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct GlobalOptions {
  std::string config_path;
  std::string backend;
  std::string script_path;
};

AppConfig load_with_overrides(const GlobalOptions& opts) {
  AppConfig config = load_config(opts.config_path);
  if (!opts.backend.empty()) config.llm.backend = opts.backend;
  if (!opts.script_path.empty()) config.llm.script_path = std::filesystem::absolute(opts.script_path);
  return config;
}

void print_outcomes(const std::vector<AgentOutcome>& outcomes) {
  std::cout << "agents:\n";
  for (const auto& o : outcomes) {
    std::cout << "  " << o.agent_id << "  " << to_string(o.status);
    if (o.status == AgentStatus::completed) {
      const auto& e = o.verdict->evidence();
      if (o.kind == AgentKind::grounding) {
        std::cout << "  grounding";
      } else {
        std::cout << (o.detected() ? "  DETECTED" : "  not detected");
      }
      if (e && e->category()) std::cout << "  " << to_string(*e->category());
      if (e && !e->candidates().empty()) {
        std::cout << "  [";
        for (std::size_t i = 0; i < e->candidates().size(); ++i) {
          std::cout << (i ? ", " : "") << e->candidates()[i].label;
        }
        std::cout << ']';
      }
    } else if (o.error_detail) {
      std::cout << "  " << *o.error_detail;
    }
    std::cout << "  (" << o.wall_time.count() << " ms)\n";
  }
}

int cmd_ask(const GlobalOptions& opts, const std::string& text, const std::string& choose,
            const std::string& free_text) {
  const auto engine = build_engine(load_with_overrides(opts));
  const UserQuery query = validate_query(text, 1);
  const TurnResult turn = engine->run_turn(query);

  std::cout << "decision: " << to_string(turn.decision.label())
            << (turn.decision.llm_consulted() ? " (llm consulted)" : " (short-circuit)") << " - "
            << turn.decision.rationale() << '\n';
  print_outcomes(turn.report.outcomes);

  if (turn.question) {
    std::cout << "clarification: " << turn.question->text() << '\n';
    for (const auto& c : turn.question->choices()) std::cout << "  [" << c.id << "] " << c.label << '\n';
    if (choose.empty() && free_text.empty()) return kExitOk;
    const Feedback feedback = choose.empty() ? Feedback::free_text(free_text) : Feedback::choice(choose);
    const FeedbackResult fb = engine->apply_feedback(query, feedback, *turn.question);
    std::cout << "refined query: " << fb.refined_query << '\n';
    if (!fb.answer) {
      std::cerr << "error: " << fb.error.value_or("answering failed") << '\n';
      return kExitRuntime;
    }
    std::cout << "answer: " << *fb.answer << '\n';
    return kExitOk;
  }
  if (!turn.answer) {
    std::cerr << "error: " << turn.error.value_or("answering failed") << '\n';
    return kExitRuntime;
  }
  std::cout << "answer: " << *turn.answer << '\n';
  return kExitOk;
}

int cmd_eval(const GlobalOptions& opts, const std::string& dataset, const std::string& pipeline_name,
             const std::string& report_path) {
  const AppConfig config = load_with_overrides(opts);
  const PipelineKind pipeline = parse_pipeline(pipeline_name);
  const auto records = load_dataset(dataset);
  const auto engine = build_engine(config);
  const auto few_shot = pipeline == PipelineKind::baseline ? load_configured_few_shot(config)
                                                           : std::vector<FewShotExample>{};
  const auto run = run_pipeline(records, pipeline, *engine, few_shot, RunOptions{config.eval_parallelism});
  const auto metrics = compute_metrics(run.predictions(), records);

  std::cout << format_metrics_table(to_string(pipeline), metrics);
  const auto flagged = std::count_if(run.records.begin(), run.records.end(), [](const auto& r) { return r.flagged; });
  std::cout << "records: " << records.size() << "  flagged: " << flagged << "  matrix: tp=" << metrics.matrix.tp
            << " fp=" << metrics.matrix.fp << " fn=" << metrics.matrix.fn << " tn=" << metrics.matrix.tn << '\n';

  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::configuration, "cannot write report " + report_path);
    out << report_json(run, records, metrics).dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_agents(const GlobalOptions& opts) {
  const auto engine = build_engine(load_with_overrides(opts));
  for (const auto& d : engine->registry().list()) {
    std::cout << d.agent_id << "  " << to_string(d.kind) << "  timeout=" << d.timeout.count() << "ms"
              << (d.enabled ? "" : "  (disabled)") << '\n';
  }
  return kExitOk;
}

int cmd_serve(const GlobalOptions& opts) {
  const AppConfig config = load_with_overrides(opts);
  auto engine = build_engine(config);
  ClarificationService service(engine, load_configured_few_shot(config), config.eval_parallelism);
  if (!config.snapshot_path.empty()) service.store().load_snapshot(config.snapshot_path);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service);
  const int port = server.bind(config.bind_host, config.port);
  std::thread worker([&] { server.serve(); });
  std::cerr << "listening on " << config.bind_host << ':' << port << '\n';

  int received = 0;
  sigwait(&signals, &received);
  std::cerr << "shutting down\n";
  server.stop();
  worker.join();
  if (!config.snapshot_path.empty()) service.store().save_snapshot(config.snapshot_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent clarification engine for AI assistants"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "Config file (JSON)")->required();
  app.add_option("--backend", opts.backend, "Override the LLM backend")->check(CLI::IsMember({"http", "scripted"}));
  app.add_option("--script", opts.script_path, "Script rules for the scripted backend");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service until interrupted");

  std::string text;
  std::string choose;
  std::string free_text;
  auto* ask = app.add_subcommand("ask", "Run one query through the pipeline");
  ask->add_option("text", text, "User query")->required();
  ask->add_option("--choose", choose, "Answer the clarification with this choice id");
  ask->add_option("--free-text", free_text, "Answer the clarification with free text");

  std::string dataset;
  std::string pipeline = "multi_agent";
  std::string report;
  auto* eval = app.add_subcommand("eval", "Evaluate a labeled dataset and print P/R/F1");
  eval->add_option("--dataset", dataset, "JSON Lines dataset")->required();
  eval->add_option("--pipeline", pipeline, "multi_agent | baseline")->check(CLI::IsMember({"multi_agent", "baseline"}));
  eval->add_option("--report", report, "Write the JSON report here");

  auto* agents = app.add_subcommand("agents", "List registered agents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve) return cmd_serve(opts);
    if (*ask) return cmd_ask(opts, text, choose, free_text);
    if (*eval) return cmd_eval(opts, dataset, pipeline, report);
    if (*agents) return cmd_agents(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::configuration:
      case ErrorKind::validation:
      case ErrorKind::data:
      case ErrorKind::invalid_feedback:
        return kExitUsage;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
