#pragma once

#include <chrono>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clarify/core.hpp"
#include "clarify/engine.hpp"

namespace clarify {

struct EvalRecord {
  std::string id;
  std::string query;
  DecisionLabel gold = DecisionLabel::not_needed;
  std::vector<AmbiguityCategory> categories;  // empty for not_needed
};

// JSON Lines: {"id","query","label","categories"}. Blank lines are skipped.
// Every problem is reported as ErrorKind::data with "<source>:<line>:".
std::vector<EvalRecord> parse_dataset(std::istream& in, const std::string& source);
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path);

// Positive class = needed.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  [[nodiscard]] std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const ClassMetrics&) const = default;
};

// Values are rounded to 3 decimals; the macro average is taken over the
// unrounded per-class values and rounded afterwards.
struct MetricsReport {
  ClassMetrics needed;
  ClassMetrics not_needed;
  ClassMetrics macro;
  ConfusionMatrix matrix;

  bool operator==(const MetricsReport&) const = default;
};

double round3(double value);

// Unrounded P/R/F1 for one class; zero denominators give 0.
ClassMetrics class_metrics(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg);

MetricsReport metrics_from_matrix(const ConfusionMatrix& matrix);

// Throws ErrorKind::validation when the id sets differ (listing missing and
// extra ids) or when there are no records.
ConfusionMatrix build_matrix(const std::map<std::string, DecisionLabel>& predictions,
                             const std::vector<EvalRecord>& golds);
MetricsReport compute_metrics(const std::map<std::string, DecisionLabel>& predictions,
                              const std::vector<EvalRecord>& golds);

struct MetricsDelta {
  ClassMetrics needed;
  ClassMetrics not_needed;
  ClassMetrics macro;
};

// a - b per cell, on the reported (rounded) values. Throws
// ErrorKind::validation when the reports cover different dataset sizes.
MetricsDelta compare(const MetricsReport& a, const MetricsReport& b);

// ---------------------------------------------------------------------------
// Few-shot baseline

inline constexpr std::size_t kFewShotCount = 10;
inline constexpr const char* kBaselinePromptMarker = "FEW-SHOT CLARIFICATION DECISION";
inline constexpr const char* kExampleBlockHeading = "### Example ";

struct FewShotExample {
  std::string query;
  DecisionLabel label = DecisionLabel::not_needed;
  std::optional<std::string> clarification;  // required for needed
};

// JSON array of {"query","label","clarification"}.
std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path);
std::vector<FewShotExample> few_shot_from_json(const Json& j);

// Throws ErrorKind::configuration unless exactly kFewShotCount examples are given.
std::vector<ChatMessage> build_baseline_prompt(std::string_view query, const std::vector<FewShotExample>& examples);

// ---------------------------------------------------------------------------
// Runs

enum class PipelineKind { multi_agent, baseline };

const char* to_string(PipelineKind p);
PipelineKind parse_pipeline(std::string_view name);

struct RecordResult {
  std::string id;
  DecisionLabel predicted = DecisionLabel::not_needed;
  bool flagged = false;  // gateway or agent failure, or invalid query text
  std::optional<std::string> note;
  std::size_t detections = 0;  // multi_agent only
  bool llm_consulted = false;
  std::chrono::milliseconds latency{0};
};

struct PipelineRun {
  PipelineKind pipeline = PipelineKind::multi_agent;
  std::vector<RecordResult> records;  // dataset order

  [[nodiscard]] std::map<std::string, DecisionLabel> predictions() const;
};

struct RunOptions {
  std::size_t parallelism = 4;
};

// Never aborts mid-dataset: a failing record is predicted not_needed and flagged.
PipelineRun run_pipeline(const std::vector<EvalRecord>& records, PipelineKind pipeline, const Engine& engine,
                         const std::vector<FewShotExample>& few_shot = {}, RunOptions options = {});

// Everything except latencies, so identical runs serialize identically.
Json report_json(const PipelineRun& run, const std::vector<EvalRecord>& golds, const MetricsReport& metrics);
Json to_json(const MetricsReport& m);
Json to_json(const MetricsDelta& d);

// Model / Category / P / R / F1 table.
std::string format_metrics_table(const std::string& model, const MetricsReport& m);

}  // namespace clarify
