#include "clarify/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace clarify {

// --- dataset ---

std::vector<EvalRecord> parse_dataset(std::istream& in, const std::string& source) {
  std::vector<EvalRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    try {
      const Json j = Json::parse(line);
      EvalRecord r;
      r.id = j.at("id").get<std::string>();
      r.query = j.at("query").get<std::string>();
      r.gold = parse_decision_label(j.at("label").get<std::string>());
      for (const auto& c : j.value("categories", Json::array())) r.categories.push_back(parse_category(c.get<std::string>()));
      if (r.id.empty()) throw Error(ErrorKind::data, "empty id");
      if (r.gold == DecisionLabel::not_needed && !r.categories.empty()) {
        throw Error(ErrorKind::data, "not_needed record '" + r.id + "' must not list categories");
      }
      if (!ids.insert(r.id).second) throw Error(ErrorKind::data, "duplicate id '" + r.id + "'");
      records.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::data, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::data, where + e.what());
    }
  }
  return records;
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, "cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

// --- metrics ---

double round3(double value) {
  return std::round(value * 1000.0) / 1000.0;
}

ClassMetrics class_metrics(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg) {
  const double tp = static_cast<double>(true_pos);
  const double p = (true_pos + false_pos) == 0 ? 0.0 : tp / static_cast<double>(true_pos + false_pos);
  const double r = (true_pos + false_neg) == 0 ? 0.0 : tp / static_cast<double>(true_pos + false_neg);
  const double f1 = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  return {p, r, f1};
}

MetricsReport metrics_from_matrix(const ConfusionMatrix& m) {
  const ClassMetrics needed = class_metrics(m.tp, m.fp, m.fn);
  // For the negative class the roles swap: tn are its hits, fn its false alarms.
  const ClassMetrics not_needed = class_metrics(m.tn, m.fn, m.fp);
  const ClassMetrics macro{(needed.precision + not_needed.precision) / 2.0, (needed.recall + not_needed.recall) / 2.0,
                           (needed.f1 + not_needed.f1) / 2.0};
  auto rounded = [](const ClassMetrics& c) { return ClassMetrics{round3(c.precision), round3(c.recall), round3(c.f1)}; };
  return {rounded(needed), rounded(not_needed), rounded(macro), m};
}

ConfusionMatrix build_matrix(const std::map<std::string, DecisionLabel>& predictions,
                             const std::vector<EvalRecord>& golds) {
  if (golds.empty()) throw Error(ErrorKind::validation, "cannot compute metrics over zero records");
  std::vector<std::string> missing;
  std::set<std::string> gold_ids;
  ConfusionMatrix m;
  for (const auto& g : golds) {
    gold_ids.insert(g.id);
    auto it = predictions.find(g.id);
    if (it == predictions.end()) {
      missing.push_back(g.id);
      continue;
    }
    const bool predicted = it->second == DecisionLabel::needed;
    const bool actual = g.gold == DecisionLabel::needed;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  std::vector<std::string> extra;
  for (const auto& [id, label] : predictions) {
    if (gold_ids.count(id) == 0) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "prediction ids do not match gold ids;";
    if (!missing.empty()) msg << " missing: " << Json(missing).dump() << ';';
    if (!extra.empty()) msg << " extra: " << Json(extra).dump() << ';';
    throw Error(ErrorKind::validation, msg.str());
  }
  return m;
}

MetricsReport compute_metrics(const std::map<std::string, DecisionLabel>& predictions,
                              const std::vector<EvalRecord>& golds) {
  return metrics_from_matrix(build_matrix(predictions, golds));
}

MetricsDelta compare(const MetricsReport& a, const MetricsReport& b) {
  if (a.matrix.total() != b.matrix.total()) {
    throw Error(ErrorKind::validation, "cannot compare reports over " + std::to_string(a.matrix.total()) + " and " +
                                           std::to_string(b.matrix.total()) + " records");
  }
  auto diff = [](const ClassMetrics& x, const ClassMetrics& y) {
    return ClassMetrics{round3(x.precision - y.precision), round3(x.recall - y.recall), round3(x.f1 - y.f1)};
  };
  return {diff(a.needed, b.needed), diff(a.not_needed, b.not_needed), diff(a.macro, b.macro)};
}

// --- few-shot baseline ---

std::vector<FewShotExample> few_shot_from_json(const Json& j) {
  try {
    if (!j.is_array()) throw Error(ErrorKind::configuration, "few-shot examples must be a JSON array");
    std::vector<FewShotExample> out;
    for (const auto& item : j) {
      FewShotExample ex;
      ex.query = item.at("query").get<std::string>();
      ex.label = parse_decision_label(item.at("label").get<std::string>());
      if (item.contains("clarification") && !item.at("clarification").is_null()) {
        ex.clarification = item.at("clarification").get<std::string>();
      }
      if (ex.label == DecisionLabel::needed && (!ex.clarification || trim(*ex.clarification).empty())) {
        throw Error(ErrorKind::configuration, "few-shot example '" + ex.query + "' is needed but has no clarification");
      }
      out.push_back(std::move(ex));
    }
    return out;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("few-shot examples: ") + e.what());
  }
}

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::configuration, "cannot open few-shot file " + path.string());
  try {
    return few_shot_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::configuration, path.string() + ": " + e.what());
  }
}

std::vector<ChatMessage> build_baseline_prompt(std::string_view query, const std::vector<FewShotExample>& examples) {
  if (examples.size() != kFewShotCount) {
    throw Error(ErrorKind::configuration, "the baseline needs exactly " + std::to_string(kFewShotCount) +
                                              " few-shot examples, got " + std::to_string(examples.size()));
  }
  std::string system = std::string(kBaselinePromptMarker) +
                       "\nYou decide whether an enterprise AI assistant must ask a clarification question before "
                       "answering a user query. If it must, reply \"NEEDED: <clarification question>\". "
                       "Otherwise reply \"NOT_NEEDED\". Follow the worked examples.";
  std::ostringstream user;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    user << kExampleBlockHeading << (i + 1) << "\nQuery: " << ex.query << "\nReply: ";
    if (ex.label == DecisionLabel::needed) user << "NEEDED: " << *ex.clarification;
    else user << "NOT_NEEDED";
    user << "\n\n";
  }
  user << "### Target\nQuery: " << query << "\nReply:";
  return {{Role::system, std::move(system)}, {Role::user, user.str()}};
}

// --- runs ---

const char* to_string(PipelineKind p) {
  return p == PipelineKind::multi_agent ? "multi_agent" : "baseline";
}

PipelineKind parse_pipeline(std::string_view name) {
  if (name == "multi_agent") return PipelineKind::multi_agent;
  if (name == "baseline") return PipelineKind::baseline;
  throw Error(ErrorKind::validation, "unknown pipeline '" + std::string(name) + "' (expected multi_agent or baseline)");
}

std::map<std::string, DecisionLabel> PipelineRun::predictions() const {
  std::map<std::string, DecisionLabel> out;
  for (const auto& r : records) out.emplace(r.id, r.predicted);
  return out;
}

namespace {

RecordResult run_multi_agent(const EvalRecord& record, const Engine& engine) {
  RecordResult result{record.id, DecisionLabel::not_needed, false, {}, 0, false, {}};
  const UserQuery query = validate_query(record.query);
  Analysis analysis = engine.analyze(query);
  result.detections = analysis.report.detection_count();
  result.predicted = analysis.decision.decision.label();
  result.llm_consulted = analysis.decision.decision.llm_consulted();
  if (analysis.decision.gateway_error) {
    result.flagged = true;
    result.note = *analysis.decision.gateway_error;
  }
  for (const auto& o : analysis.report.outcomes) {
    if (o.status == AgentStatus::failed || o.status == AgentStatus::timed_out) {
      result.flagged = true;
      if (!result.note) result.note = o.agent_id + " " + to_string(o.status) + ": " + o.error_detail.value_or("");
    }
  }
  return result;
}

RecordResult run_baseline(const EvalRecord& record, const Engine& engine, const std::vector<FewShotExample>& few_shot) {
  RecordResult result{record.id, DecisionLabel::not_needed, false, {}, 0, true, {}};
  const UserQuery query = validate_query(record.query);
  std::string reply;
  try {
    reply = engine.llm().complete(build_baseline_prompt(query.text(), few_shot)).text;
  } catch (const GatewayError& e) {
    result.flagged = true;
    result.llm_consulted = false;
    result.note = e.what();
    return result;
  }
  const auto parsed = parse_decision_reply(reply);
  if (parsed.label) result.predicted = *parsed.label;
  else result.note = "unparseable baseline reply";
  return result;
}

}  // namespace

PipelineRun run_pipeline(const std::vector<EvalRecord>& records, PipelineKind pipeline, const Engine& engine,
                         const std::vector<FewShotExample>& few_shot, RunOptions options) {
  if (pipeline == PipelineKind::baseline && few_shot.size() != kFewShotCount) {
    throw Error(ErrorKind::configuration, "the baseline needs exactly " + std::to_string(kFewShotCount) +
                                              " few-shot examples, got " + std::to_string(few_shot.size()));
  }
  PipelineRun run;
  run.pipeline = pipeline;
  run.records.resize(records.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      RecordResult result;
      try {
        result = pipeline == PipelineKind::multi_agent ? run_multi_agent(records[i], engine)
                                                       : run_baseline(records[i], engine, few_shot);
      } catch (const std::exception& e) {
        result = RecordResult{records[i].id, DecisionLabel::not_needed, true, std::string(e.what()), 0, false, {}};
      }
      result.latency =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
      run.records[i] = std::move(result);
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(records.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return run;
}

Json to_json(const MetricsReport& m) {
  auto cls = [](const ClassMetrics& c) { return Json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}}; };
  return {{"matrix", {{"tp", m.matrix.tp}, {"fp", m.matrix.fp}, {"fn", m.matrix.fn}, {"tn", m.matrix.tn}}},
          {"per_class", {{"needed", cls(m.needed)}, {"not_needed", cls(m.not_needed)}}},
          {"macro", cls(m.macro)}};
}

Json to_json(const MetricsDelta& d) {
  auto cls = [](const ClassMetrics& c) { return Json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}}; };
  return {{"needed", cls(d.needed)}, {"not_needed", cls(d.not_needed)}, {"macro", cls(d.macro)}};
}

Json report_json(const PipelineRun& run, const std::vector<EvalRecord>& golds, const MetricsReport& metrics) {
  std::map<std::string, DecisionLabel> gold_by_id;
  for (const auto& g : golds) gold_by_id.emplace(g.id, g.gold);
  Json records = Json::array();
  for (const auto& r : run.records) {
    Json j{{"id", r.id}, {"predicted", to_string(r.predicted)}, {"flagged", r.flagged},
           {"llm_consulted", r.llm_consulted}};
    if (auto it = gold_by_id.find(r.id); it != gold_by_id.end()) j["gold"] = to_string(it->second);
    if (run.pipeline == PipelineKind::multi_agent) j["detections"] = r.detections;
    if (r.note) j["note"] = *r.note;
    records.push_back(std::move(j));
  }
  Json out = to_json(metrics);
  out["pipeline"] = to_string(run.pipeline);
  out["records"] = std::move(records);
  return out;
}

std::string format_metrics_table(const std::string& model, const MetricsReport& m) {
  const int model_width = static_cast<int>(std::max<std::size_t>(model.size(), 5));
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %-16s  %5s  %5s  %5s\n", model_width, "Model", "Category", "P", "R", "F1");
  out << line;
  const struct {
    const char* name;
    const ClassMetrics* values;
  } rows[] = {{"Clar. Needed", &m.needed}, {"Clar. Not Needed", &m.not_needed}, {"Avg", &m.macro}};
  bool first = true;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%-*s  %-16s  %5.3f  %5.3f  %5.3f\n", model_width, first ? model.c_str() : "",
                  row.name, row.values->precision, row.values->recall, row.values->f1);
    out << line;
    first = false;
  }
  return out.str();
}

}  // namespace clarify
