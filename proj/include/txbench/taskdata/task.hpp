#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "txbench/common/json.hpp"

namespace txbench::taskdata {

enum class TaskKind { kBinary, kRegression, kGeneration };
enum class FeatureKind { kSmiles, kAminoAcid, kNucleotide, kText };
enum class MetricId { kAuroc, kAuprc, kAccuracy, kSpearman, kPearson, kMae, kMse, kRmse, kSetAccuracy };
enum class SplitPolicy { kRandom, kScaffold, kColdStart, kCombination, kTemporal };
enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

std::string_view to_string(TaskKind v);
std::string_view to_string(FeatureKind v);
std::string_view to_string(MetricId v);
std::string_view to_string(SplitPolicy v);
std::string_view to_string(Split v);

// Parsers accept the to_string spellings case-insensitively and throw
// std::invalid_argument otherwise. parse_split also accepts "val"/"valid".
TaskKind parse_task_kind(std::string_view s);
FeatureKind parse_feature_kind(std::string_view s);
MetricId parse_metric_id(std::string_view s);
SplitPolicy parse_split_policy(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

// MAE, MSE and RMSE.
bool lower_is_better(MetricId m);

using LabelValue = std::variant<bool, double, std::string>;

std::string label_to_string(const LabelValue& v);

struct LabelRange {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const LabelRange&, const LabelRange&) = default;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

class TaskDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidTaskSpec : public TaskDataError {
 public:
  using TaskDataError::TaskDataError;
};

struct TaskSpec {
  std::string task_id;
  TaskKind kind = TaskKind::kBinary;
  std::vector<FeatureKind> feature_schema;
  MetricId metric_id = MetricId::kAuroc;
  std::string instruction;
  std::string context;
  // Placeholders are {feature_1} .. {feature_k}.
  std::string question_template;
  std::optional<LabelRange> label_range;
  SplitPolicy split_policy = SplitPolicy::kRandom;
  // Reference split sizes, when known.
  std::optional<SplitCounts> expected_counts;
  // Dataset file, relative to the catalog file.
  std::string data_file;

  // Throws InvalidTaskSpec. Regression tasks without a range are accepted
  // when `allow_missing_range` is set (the range is derived after loading).
  void validate(bool allow_missing_range = false) const;
};

std::string placeholder(std::size_t feature_index);

struct Feature {
  FeatureKind kind = FeatureKind::kSmiles;
  std::string value;
  friend bool operator==(const Feature&, const Feature&) = default;
};

struct DataPoint {
  std::vector<Feature> features;
  LabelValue label;
  Split split = Split::kTrain;
  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

struct DatasetBundle {
  TaskSpec spec;
  std::vector<DataPoint> points;
  SplitCounts counts;
};

class MalformedRow : public TaskDataError {
 public:
  MalformedRow(std::size_t line_no, const std::string& detail);
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class SchemaMismatch : public TaskDataError {
 public:
  SchemaMismatch(std::string expected, std::string found);
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  std::string expected_;
  std::string found_;
};

class UnknownSplitTag : public TaskDataError {
 public:
  UnknownSplitTag(std::size_t line_no, const std::string& tag);
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

// Reads a TSV with header `split, feature_1..feature_k, label`. Text fields
// escape tab, newline, carriage return and backslash as \t \n \r \\.
// A regression spec without label_range gets the train-label min/max.
DatasetBundle load_task(const std::filesystem::path& path, const TaskSpec& spec);
DatasetBundle parse_task(std::string_view tsv, const TaskSpec& spec);

std::string serialize_task(const DatasetBundle& bundle);
void write_task(const std::filesystem::path& path, const DatasetBundle& bundle);

// Checks one point against the spec; throws SchemaMismatch or MalformedRow(line_no).
void check_point(const TaskSpec& spec, const DataPoint& point, std::size_t line_no = 0);

struct CountMismatch {
  Split split;
  std::size_t expected;
  std::size_t found;
};

struct ValidationReport {
  bool ok = true;
  std::vector<CountMismatch> mismatches;
};

ValidationReport validate_counts(const DatasetBundle& bundle, const SplitCounts& expected);

inline auto iter_split(const DatasetBundle& bundle, Split split) {
  return bundle.points | std::views::filter([split](const DataPoint& p) { return p.split == split; });
}

// Indices into bundle.points of the given split, in file order.
std::vector<std::size_t> split_indices(const DatasetBundle& bundle, Split split);

std::optional<LabelRange> train_label_range(const DatasetBundle& bundle);

std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

// Task catalog: a JSON array of task objects (see fixtures/tasks.json).
TaskSpec task_from_json(const Json& j);
Json task_to_json(const TaskSpec& spec);

class TaskCatalog {
 public:
  static TaskCatalog load(const std::filesystem::path& path);

  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  // Throws std::out_of_range for unknown ids.
  const TaskSpec& find(std::string_view task_id) const;
  std::filesystem::path data_path(const TaskSpec& spec) const;
  DatasetBundle load_bundle(std::string_view task_id) const;

 private:
  std::filesystem::path base_dir_;
  std::vector<TaskSpec> tasks_;
};

}  // namespace txbench::taskdata
