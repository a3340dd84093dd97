#include "txbench/taskdata/task.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "txbench/common/text.hpp"

namespace txbench::taskdata {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<E, N>& values, const char* what) {
  const std::string lower = text::to_lower(text::trim(s));
  for (E v : values)
    if (text::to_lower(to_string(v)) == lower) return v;
  throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(s));
}

constexpr std::array kTaskKinds = {TaskKind::kBinary, TaskKind::kRegression, TaskKind::kGeneration};
constexpr std::array kFeatureKinds = {FeatureKind::kSmiles, FeatureKind::kAminoAcid, FeatureKind::kNucleotide,
                                      FeatureKind::kText};
constexpr std::array kMetrics = {MetricId::kAuroc,    MetricId::kAuprc, MetricId::kAccuracy,
                                 MetricId::kSpearman, MetricId::kPearson, MetricId::kMae,
                                 MetricId::kMse,      MetricId::kRmse,   MetricId::kSetAccuracy};
constexpr std::array kPolicies = {SplitPolicy::kRandom, SplitPolicy::kScaffold, SplitPolicy::kColdStart,
                                  SplitPolicy::kCombination, SplitPolicy::kTemporal};

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view s) {
  s = text::trim(s);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string describe_header(std::size_t k) {
  std::string out = "split";
  for (std::size_t i = 1; i <= k; ++i) out += "\tfeature_" + std::to_string(i);
  return out + "\tlabel";
}

std::string kind_name_of(const LabelValue& v) {
  switch (v.index()) {
    case 0: return "bool";
    case 1: return "float";
    default: return "string";
  }
}

}  // namespace

std::string_view to_string(TaskKind v) {
  switch (v) {
    case TaskKind::kBinary: return "binary";
    case TaskKind::kRegression: return "regression";
    case TaskKind::kGeneration: return "generation";
  }
  return "?";
}

std::string_view to_string(FeatureKind v) {
  switch (v) {
    case FeatureKind::kSmiles: return "smiles";
    case FeatureKind::kAminoAcid: return "amino_acid";
    case FeatureKind::kNucleotide: return "nucleotide";
    case FeatureKind::kText: return "text";
  }
  return "?";
}

std::string_view to_string(MetricId v) {
  switch (v) {
    case MetricId::kAuroc: return "auroc";
    case MetricId::kAuprc: return "auprc";
    case MetricId::kAccuracy: return "accuracy";
    case MetricId::kSpearman: return "spearman";
    case MetricId::kPearson: return "pearson";
    case MetricId::kMae: return "mae";
    case MetricId::kMse: return "mse";
    case MetricId::kRmse: return "rmse";
    case MetricId::kSetAccuracy: return "set_accuracy";
  }
  return "?";
}

std::string_view to_string(SplitPolicy v) {
  switch (v) {
    case SplitPolicy::kRandom: return "random";
    case SplitPolicy::kScaffold: return "scaffold";
    case SplitPolicy::kColdStart: return "cold_start";
    case SplitPolicy::kCombination: return "combination";
    case SplitPolicy::kTemporal: return "temporal";
  }
  return "?";
}

std::string_view to_string(Split v) {
  switch (v) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view s) { return parse_enum(s, kTaskKinds, "task kind"); }
FeatureKind parse_feature_kind(std::string_view s) { return parse_enum(s, kFeatureKinds, "feature kind"); }
MetricId parse_metric_id(std::string_view s) { return parse_enum(s, kMetrics, "metric"); }
SplitPolicy parse_split_policy(std::string_view s) { return parse_enum(s, kPolicies, "split policy"); }

std::optional<Split> parse_split(std::string_view s) {
  const std::string t = text::to_lower(text::trim(s));
  if (t == "train") return Split::kTrain;
  if (t == "valid" || t == "val" || t == "validation") return Split::kValidation;
  if (t == "test") return Split::kTest;
  return std::nullopt;
}

bool lower_is_better(MetricId m) { return m == MetricId::kMae || m == MetricId::kMse || m == MetricId::kRmse; }

std::string label_to_string(const LabelValue& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b ? "1" : "0";
  if (const double* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

std::string placeholder(std::size_t feature_index) { return "{feature_" + std::to_string(feature_index + 1) + "}"; }

void TaskSpec::validate(bool allow_missing_range) const {
  if (task_id.empty()) throw InvalidTaskSpec("task_id is empty");
  if (feature_schema.empty()) throw InvalidTaskSpec(task_id + ": feature_schema is empty");
  if (kind == TaskKind::kRegression) {
    if (!label_range) {
      if (!allow_missing_range) throw InvalidTaskSpec(task_id + ": regression task without label_range");
    } else if (!(label_range->min < label_range->max)) {
      throw InvalidTaskSpec(task_id + ": label_range min must be below max");
    }
  }
  for (std::size_t i = 0; i < feature_schema.size(); ++i) {
    const std::string ph = placeholder(i);
    std::size_t first = question_template.find(ph);
    if (first == std::string::npos) throw InvalidTaskSpec(task_id + ": question_template lacks " + ph);
    if (question_template.find(ph, first + 1) != std::string::npos)
      throw InvalidTaskSpec(task_id + ": question_template repeats " + ph);
  }
  if (question_template.find(placeholder(feature_schema.size())) != std::string::npos)
    throw InvalidTaskSpec(task_id + ": question_template has more placeholders than features");
}

MalformedRow::MalformedRow(std::size_t line_no, const std::string& detail)
    : TaskDataError("malformed row at line " + std::to_string(line_no) + ": " + detail), line_no_(line_no) {}

SchemaMismatch::SchemaMismatch(std::string expected, std::string found)
    : TaskDataError("schema mismatch: expected " + expected + ", found " + found),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

UnknownSplitTag::UnknownSplitTag(std::size_t line_no, const std::string& tag)
    : TaskDataError("unknown split tag '" + tag + "' at line " + std::to_string(line_no)), line_no_(line_no) {}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case '\\': out.push_back('\\'); break;
      default:
        out.push_back('\\');
        out.push_back(s[i]);
    }
  }
  return out;
}

void check_point(const TaskSpec& spec, const DataPoint& p, std::size_t line_no) {
  if (p.features.size() != spec.feature_schema.size())
    throw SchemaMismatch(std::to_string(spec.feature_schema.size()) + " features",
                         std::to_string(p.features.size()) + " features");
  for (std::size_t i = 0; i < p.features.size(); ++i) {
    if (p.features[i].kind != spec.feature_schema[i])
      throw SchemaMismatch(std::string(to_string(spec.feature_schema[i])),
                           std::string(to_string(p.features[i].kind)));
    if (p.features[i].value.empty()) throw MalformedRow(line_no, "empty feature_" + std::to_string(i + 1));
  }
  switch (spec.kind) {
    case TaskKind::kBinary:
      if (!std::holds_alternative<bool>(p.label)) throw SchemaMismatch("bool label", kind_name_of(p.label));
      break;
    case TaskKind::kRegression:
      if (!std::holds_alternative<double>(p.label)) throw SchemaMismatch("float label", kind_name_of(p.label));
      if (!std::isfinite(std::get<double>(p.label))) throw MalformedRow(line_no, "non-finite label");
      break;
    case TaskKind::kGeneration:
      if (!std::holds_alternative<std::string>(p.label))
        throw SchemaMismatch("string label", kind_name_of(p.label));
      if (std::get<std::string>(p.label).empty()) throw MalformedRow(line_no, "empty label");
      break;
  }
}

DatasetBundle parse_task(std::string_view tsv, const TaskSpec& spec) {
  spec.validate(/*allow_missing_range=*/true);
  DatasetBundle bundle;
  bundle.spec = spec;
  const std::size_t k = spec.feature_schema.size();

  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < tsv.size()) {
    std::size_t nl = tsv.find('\n', pos);
    std::string_view line = tsv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? tsv.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cols = text::split(line, '\t');
    if (!header_seen) {
      header_seen = true;
      const std::string expected = describe_header(k);
      std::string found;
      for (std::size_t c = 0; c < cols.size(); ++c) found += (c ? "\t" : "") + std::string(text::trim(cols[c]));
      if (found != expected) throw SchemaMismatch(expected, found);
      continue;
    }
    if (cols.size() != k + 2)
      throw MalformedRow(line_no, "expected " + std::to_string(k + 2) + " columns, found " +
                                      std::to_string(cols.size()));
    DataPoint p;
    auto split = parse_split(cols[0]);
    if (!split) throw UnknownSplitTag(line_no, cols[0]);
    p.split = *split;
    for (std::size_t i = 0; i < k; ++i) {
      std::string value = unescape_field(cols[i + 1]);
      if (spec.feature_schema[i] != FeatureKind::kText) value = std::string(text::trim(value));
      p.features.push_back({spec.feature_schema[i], std::move(value)});
    }
    const std::string& raw = cols[k + 1];
    switch (spec.kind) {
      case TaskKind::kBinary: {
        std::string_view t = text::trim(raw);
        if (t == "1") p.label = true;
        else if (t == "0") p.label = false;
        else throw MalformedRow(line_no, "binary label must be 0 or 1, found '" + raw + "'");
        break;
      }
      case TaskKind::kRegression: {
        auto v = parse_double(raw);
        if (!v || !std::isfinite(*v)) throw MalformedRow(line_no, "invalid regression label '" + raw + "'");
        p.label = *v;
        break;
      }
      case TaskKind::kGeneration:
        p.label = unescape_field(raw);
        break;
    }
    check_point(spec, p, line_no);
    switch (p.split) {
      case Split::kTrain: ++bundle.counts.train; break;
      case Split::kValidation: ++bundle.counts.validation; break;
      case Split::kTest: ++bundle.counts.test; break;
    }
    bundle.points.push_back(std::move(p));
  }
  if (!header_seen) throw MalformedRow(0, "empty file");
  if (spec.kind == TaskKind::kRegression && !bundle.spec.label_range) {
    bundle.spec.label_range = train_label_range(bundle);
    if (!bundle.spec.label_range) throw InvalidTaskSpec(spec.task_id + ": cannot derive label range from train split");
  }
  return bundle;
}

DatasetBundle load_task(const std::filesystem::path& path, const TaskSpec& spec) {
  std::string contents;
  try {
    contents = read_file(path);
  } catch (const std::exception& e) {
    throw TaskDataError("cannot read " + path.string() + ": " + e.what());
  }
  return parse_task(contents, spec);
}

std::string serialize_task(const DatasetBundle& bundle) {
  std::string out = describe_header(bundle.spec.feature_schema.size()) + "\n";
  for (const DataPoint& p : bundle.points) {
    out += to_string(p.split);
    for (const Feature& f : p.features) out += "\t" + escape_field(f.value);
    out += "\t" + escape_field(label_to_string(p.label)) + "\n";
  }
  return out;
}

void write_task(const std::filesystem::path& path, const DatasetBundle& bundle) {
  write_file_atomic(path, serialize_task(bundle));
}

ValidationReport validate_counts(const DatasetBundle& bundle, const SplitCounts& expected) {
  ValidationReport report;
  auto check = [&](Split s, std::size_t want, std::size_t got) {
    if (want != got) report.mismatches.push_back({s, want, got});
  };
  check(Split::kTrain, expected.train, bundle.counts.train);
  check(Split::kValidation, expected.validation, bundle.counts.validation);
  check(Split::kTest, expected.test, bundle.counts.test);
  report.ok = report.mismatches.empty();
  return report;
}

std::vector<std::size_t> split_indices(const DatasetBundle& bundle, Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bundle.points.size(); ++i)
    if (bundle.points[i].split == split) out.push_back(i);
  return out;
}

std::optional<LabelRange> train_label_range(const DatasetBundle& bundle) {
  std::optional<LabelRange> range;
  for (const DataPoint& p : iter_split(bundle, Split::kTrain)) {
    const double* v = std::get_if<double>(&p.label);
    if (!v) continue;
    if (!range) range = LabelRange{*v, *v};
    range->min = std::min(range->min, *v);
    range->max = std::max(range->max, *v);
  }
  if (range && !(range->min < range->max)) return std::nullopt;
  return range;
}

TaskSpec task_from_json(const Json& j) {
  TaskSpec t;
  try {
    t.task_id = j.at("task_id").get<std::string>();
    t.kind = parse_task_kind(j.at("kind").get<std::string>());
    for (const auto& f : j.at("features")) t.feature_schema.push_back(parse_feature_kind(f.get<std::string>()));
    t.metric_id = parse_metric_id(j.at("metric").get<std::string>());
    t.instruction = j.at("instruction").get<std::string>();
    t.context = j.at("context").get<std::string>();
    t.question_template = j.at("question_template").get<std::string>();
    if (j.contains("label_range"))
      t.label_range = LabelRange{j["label_range"].at(0).get<double>(), j["label_range"].at(1).get<double>()};
    if (j.contains("split_policy")) t.split_policy = parse_split_policy(j["split_policy"].get<std::string>());
    if (j.contains("expected_counts")) {
      const auto& c = j["expected_counts"];
      t.expected_counts = SplitCounts{c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>(),
                                      c.at(2).get<std::size_t>()};
    }
    t.data_file = j.value("data", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidTaskSpec(std::string("bad task entry: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidTaskSpec(std::string("bad task entry: ") + e.what());
  }
  t.validate(true);
  return t;
}

Json task_to_json(const TaskSpec& t) {
  Json j;
  j["task_id"] = t.task_id;
  j["kind"] = to_string(t.kind);
  j["features"] = Json::array();
  for (FeatureKind f : t.feature_schema) j["features"].push_back(to_string(f));
  j["metric"] = to_string(t.metric_id);
  j["instruction"] = t.instruction;
  j["context"] = t.context;
  j["question_template"] = t.question_template;
  if (t.label_range) j["label_range"] = {t.label_range->min, t.label_range->max};
  j["split_policy"] = to_string(t.split_policy);
  if (t.expected_counts)
    j["expected_counts"] = {t.expected_counts->train, t.expected_counts->validation, t.expected_counts->test};
  if (!t.data_file.empty()) j["data"] = t.data_file;
  return j;
}

TaskCatalog TaskCatalog::load(const std::filesystem::path& path) {
  TaskCatalog c;
  c.base_dir_ = path.parent_path();
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw TaskDataError("cannot load catalog " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw TaskDataError("catalog must be a JSON array");
  for (const auto& entry : j) {
    TaskSpec t = task_from_json(entry);
    for (const TaskSpec& other : c.tasks_)
      if (other.task_id == t.task_id) throw InvalidTaskSpec("duplicate task id " + t.task_id);
    c.tasks_.push_back(std::move(t));
  }
  return c;
}

const TaskSpec& TaskCatalog::find(std::string_view task_id) const {
  for (const TaskSpec& t : tasks_)
    if (t.task_id == task_id) return t;
  throw std::out_of_range("unknown task: " + std::string(task_id));
}

std::filesystem::path TaskCatalog::data_path(const TaskSpec& spec) const { return base_dir_ / spec.data_file; }

DatasetBundle TaskCatalog::load_bundle(std::string_view task_id) const {
  const TaskSpec& spec = find(task_id);
  return load_task(data_path(spec), spec);
}

}  // namespace txbench::taskdata
