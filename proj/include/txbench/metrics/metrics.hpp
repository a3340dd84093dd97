#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "txbench/common/json.hpp"
#include "txbench/taskdata/task.hpp"

namespace txbench::metrics {

using taskdata::LabelValue;
using taskdata::MetricId;

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingleClass : public MetricError {
 public:
  SingleClass() : MetricError("ranking metric needs at least one positive and one negative") {}
};

class ZeroVariance : public MetricError {
 public:
  ZeroVariance() : MetricError("correlation undefined for a constant series") {}
};

class EmptyInput : public MetricError {
 public:
  EmptyInput() : MetricError("no scorable records") {}
};

class MissingScore : public MetricError {
 public:
  MissingScore() : MetricError("ranking metric needs a score on every record") {}
};

class LengthMismatch : public MetricError {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : MetricError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class AllZeroDifferences : public MetricError {
 public:
  AllZeroDifferences() : MetricError("every paired difference is zero") {}
};

class DegenerateVariance : public MetricError {
 public:
  DegenerateVariance() : MetricError("both samples have zero variance") {}
};

struct PredictionRecord {
  LabelValue truth;
  // nullopt: the reply could not be parsed.
  std::optional<LabelValue> prediction;
  std::optional<double> score;
};

// Average ranks (1-based), ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double auroc(std::span<const bool> labels, std::span<const double> scores);
double auprc(std::span<const bool> labels, std::span<const double> scores);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// Record-level metrics. Unparseable records are skipped.
double auroc(std::span<const PredictionRecord> records);
double auprc(std::span<const PredictionRecord> records);
double accuracy(std::span<const PredictionRecord> records);
double spearman(std::span<const PredictionRecord> records);
double pearson(std::span<const PredictionRecord> records);
double mae(std::span<const PredictionRecord> records);
double mse(std::span<const PredictionRecord> records);
double rmse(std::span<const PredictionRecord> records);
double set_accuracy(std::span<const PredictionRecord> records);

// Order-free set of canonical reaction components.
std::vector<std::string> canonical_components(std::string_view smiles);

double compute(MetricId metric, std::span<const PredictionRecord> records);

std::size_t count_unparseable(std::span<const PredictionRecord> records);

struct MetricReport {
  MetricId metric_id = MetricId::kAccuracy;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  std::size_t n_unparseable = 0;
  std::uint64_t seed = 0;
  // Resamples that still failed after the retry cap.
  std::size_t n_failed_resamples = 0;

  Json to_json() const;
  static MetricReport from_json(const Json& j);
};

struct BootstrapOptions {
  int n_resamples = 1000;
  std::uint64_t seed = 0;
  int retry_cap = 20;
};

// Value is the mean of the resampled metric values; the CI bounds are the
// 2.5 and 97.5 percentiles. Resample i draws from substream (seed, i).
MetricReport bootstrap(std::span<const PredictionRecord> records, MetricId metric, const BootstrapOptions& options = {});

struct TaskScore {
  MetricId metric = MetricId::kAuroc;
  double value = 0.0;
};

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  int n_effective = 0;
  bool exact = false;
};

inline constexpr int kWilcoxonExactMax = 25;

// Two-sided signed-rank test on raw differences; zeros are dropped.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences);

// Per task: both values divided by |pair mean|, sign flipped for error
// metrics, X = a' - b'.
std::vector<double> normalized_differences(std::span<const TaskScore> a, std::span<const TaskScore> b);
WilcoxonResult wilcoxon_paired(std::span<const TaskScore> a, std::span<const TaskScore> b);

struct TostResult {
  double delta = 0.0;
  double mean_difference = 0.0;
  double p_lower = 1.0;
  double p_upper = 1.0;
  double p_value = 1.0;
  bool equivalent = false;
};

// Two one-sided Welch t-tests of mean(a) - mean(b) against -delta and +delta.
TostResult tost_equivalence(std::span<const double> a, std::span<const double> b, double delta, double alpha = 0.05);

}  // namespace txbench::metrics
