#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "txbench/exemplar/index.hpp"
#include "txbench/llmclient/client.hpp"
#include "txbench/metrics/metrics.hpp"
#include "txbench/promptgen/prompt.hpp"

namespace txbench::eval {

using metrics::MetricId;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a run is stopped on purpose after a checkpoint (used to
// exercise resumption).
class Interrupted : public EvalError {
 public:
  explicit Interrupted(std::size_t done) : EvalError("run interrupted after " + std::to_string(done) + " points"), done_(done) {}
  std::size_t completed() const { return done_; }

 private:
  std::size_t done_;
};

class ZeroBaseline : public EvalError {
 public:
  ZeroBaseline() : EvalError("relative change undefined for a zero baseline") {}
};

struct PointResult {
  std::size_t point_index = 0;  // index into bundle.points
  std::vector<std::size_t> exemplar_ids;
  std::string prompt_sha256;
  std::string reply;
  std::string error_kind;  // empty on success; "unparseable" or an llm error kind
  std::string error;
  metrics::PredictionRecord record;

  Json to_json() const;
  static PointResult from_json(const Json& j, taskdata::TaskKind kind);
};

struct EvalOptions {
  promptgen::FewShotPolicy policy;
  metrics::BootstrapOptions bootstrap;
  // Root for runs/<task>/<timestamp>/. Empty: nothing is written.
  std::filesystem::path runs_root;
  // Directory name under runs/<task>/; defaults to the current UTC time.
  std::string timestamp;
  // Resume from this run directory's checkpoint instead of starting fresh.
  std::filesystem::path resume_dir;
  // Points per checkpointed batch.
  std::size_t batch_size = 16;
  // Evaluate at most this many test points (0 = all).
  std::size_t max_points = 0;
  // Throw Interrupted once at least this many points are checkpointed (0 = never).
  std::size_t interrupt_after = 0;
};

struct EvalRun {
  std::string task_id;
  promptgen::FewShotPolicy policy;
  llm::EndpointConfig endpoint;
  std::vector<PointResult> points;
  std::vector<std::size_t> skipped;
  metrics::MetricReport report;
  // Set when the metric could not be computed (e.g. a single-class test set).
  std::string report_error;
  // Unparseable binary replies counted as wrong instead of excluded.
  std::optional<metrics::MetricReport> pessimistic_report;
  std::string started;
  std::string finished;
  std::filesystem::path run_dir;

  std::vector<metrics::PredictionRecord> records() const;
  Json report_json() const;
};

std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now());

// Turns a raw reply into a prediction for `point` under `codec`. Binary
// predictions carry score 1/0; regression bins are mapped back to labels.
metrics::PredictionRecord score_reply(const std::string& reply, const promptgen::AnswerCodec& codec,
                                      const taskdata::LabelValue& truth);

EvalRun run_task_eval(const taskdata::DatasetBundle& bundle, const exemplar::ExemplarIndex& index,
                      const EvalOptions& options, llm::Client& client);

// Reads the per-point records of a finished run directory. Reports are not
// recomputed.
EvalRun load_run(const std::filesystem::path& run_dir, const taskdata::TaskSpec& task);

// Per-model results for one table column. nullopt marks an unavailable entry.
struct TableRow {
  std::string task_id;
  MetricId metric = MetricId::kAuroc;
  std::optional<double> value;
};
using ModelTable = std::vector<TableRow>;

// Wide table: task_id, metric, then one column per model.
ModelTable load_table_column(const std::filesystem::path& tsv, const std::string& column);
std::vector<std::string> table_columns(const std::filesystem::path& tsv);
// Four-column pairs file: task_id, metric_id, value_a, value_b.
std::pair<ModelTable, ModelTable> load_pairs(const std::filesystem::path& tsv);
// Table from run report.json files (task_id, metric, value).
ModelTable table_from_reports(const std::vector<std::filesystem::path>& reports);

// (a-b)/|b|, sign flipped for error metrics so positive means a is better.
double relative_change(double a, double b, MetricId metric);
// Same, relative to the pair mean instead of b.
double relative_change_mean(double a, double b, MetricId metric);

enum class Winner { kA, kB, kTie };
std::string_view to_string(Winner w);

struct TaskComparison {
  std::string task_id;
  MetricId metric = MetricId::kAuroc;
  double value_a = 0;
  double value_b = 0;
  // nullopt when b is zero; the winner then follows the sign of a-b.
  std::optional<double> relative_change;
  std::optional<double> relative_change_mean;
  Winner winner = Winner::kTie;
  bool near = false;
};

inline constexpr double kTieEpsilon = 1e-9;
inline constexpr double kNearThreshold = -0.10;

struct ComparisonReport {
  std::vector<TaskComparison> per_task;
  std::vector<std::string> unavailable;  // tasks missing a value on either side
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
  double median_relative_change = 0;
  double median_relative_change_mean = 0;
  std::optional<metrics::WilcoxonResult> wilcoxon;
  int near_count = 0;

  Json to_json() const;
};

ComparisonReport compare_models(const ModelTable& a, const ModelTable& b);

struct ThroughputReport {
  std::size_t completed = 0;
  std::size_t failed = 0;
  int workers = 1;
  double elapsed_seconds = 0;
  double samples_per_day = 0;
  double samples_per_day_per_worker = 0;

  Json to_json() const;
};

// Each worker sends prompts back to back until `duration` has passed.
ThroughputReport bench_throughput(llm::Client& client, const std::vector<std::string>& prompts,
                                  std::chrono::milliseconds duration, int workers);

}  // namespace txbench::eval
