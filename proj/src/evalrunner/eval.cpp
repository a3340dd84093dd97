#include "txbench/evalrunner/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <thread>
#include <unordered_map>

#include "txbench/common/hashing.hpp"
#include "txbench/common/text.hpp"

namespace txbench::eval {

using taskdata::DataPoint;
using taskdata::LabelValue;
using taskdata::TaskKind;

namespace {

Json label_json(const LabelValue& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  if (const double* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

LabelValue label_from_json(const Json& j, TaskKind kind) {
  switch (kind) {
    case TaskKind::kBinary: return j.get<bool>();
    case TaskKind::kRegression: return j.get<double>();
    case TaskKind::kGeneration: return j.get<std::string>();
  }
  throw EvalError("bad task kind");
}

Json policy_json(const promptgen::FewShotPolicy& p) {
  return Json{{"mode", p.mode == promptgen::ShotMode::kEvalNearest ? "eval_nearest" : "train_random"},
              {"eval_shots", p.eval_shots},
              {"zero_shot_fraction", p.zero_shot_fraction},
              {"shot_min", p.shot_min},
              {"shot_max", p.shot_max},
              {"rng_seed", p.rng_seed},
              {"order", p.order == promptgen::ShotOrder::kNearestLast ? "nearest_last" : "nearest_first"}};
}

void write_checkpoint(const std::filesystem::path& dir, const std::string& task_id,
                      const std::map<std::size_t, PointResult>& done) {
  Json completed = Json::array();
  for (const auto& [_, r] : done) completed.push_back(r.to_json());
  write_file_atomic(dir / "checkpoint.json", Json{{"task_id", task_id}, {"completed", completed}}.dump());
}

std::map<std::size_t, PointResult> read_checkpoint(const std::filesystem::path& dir, const std::string& task_id,
                                                   TaskKind kind) {
  std::map<std::size_t, PointResult> done;
  const auto path = dir / "checkpoint.json";
  if (!std::filesystem::exists(path)) return done;
  Json j = Json::parse(read_file(path));
  if (j.at("task_id").get<std::string>() != task_id)
    throw EvalError("checkpoint in " + dir.string() + " belongs to task " + j.at("task_id").get<std::string>());
  for (const Json& r : j.at("completed")) {
    PointResult p = PointResult::from_json(r, kind);
    done.emplace(p.point_index, std::move(p));
  }
  return done;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::optional<double> parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  const std::string_view t = text::trim(cell);
  if (t == "N/A" || t == "NA" || t.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size())
    throw EvalError(path.string() + ":" + std::to_string(line) + ": bad number '" + std::string(t) + "'");
  return v;
}

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    rows.push_back(text::split(line, '\t'));
  }
  if (rows.empty()) throw EvalError(path.string() + " is empty");
  return rows;
}

}  // namespace

Json PointResult::to_json() const {
  return Json{{"point_index", point_index},
              {"exemplar_ids", exemplar_ids},
              {"prompt_sha256", prompt_sha256},
              {"reply", reply},
              {"error_kind", error_kind},
              {"error", error},
              {"truth", label_json(record.truth)},
              {"prediction", record.prediction ? label_json(*record.prediction) : Json()},
              {"score", record.score ? Json(*record.score) : Json()}};
}

PointResult PointResult::from_json(const Json& j, TaskKind kind) {
  PointResult r;
  r.point_index = j.at("point_index").get<std::size_t>();
  r.exemplar_ids = j.at("exemplar_ids").get<std::vector<std::size_t>>();
  r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
  r.reply = j.at("reply").get<std::string>();
  r.error_kind = j.at("error_kind").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.record.truth = label_from_json(j.at("truth"), kind);
  if (!j.at("prediction").is_null()) r.record.prediction = label_from_json(j.at("prediction"), kind);
  if (!j.at("score").is_null()) r.record.score = j.at("score").get<double>();
  return r;
}

std::vector<metrics::PredictionRecord> EvalRun::records() const {
  std::vector<metrics::PredictionRecord> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.record);
  return out;
}

Json EvalRun::report_json() const {
  Json j{{"task_id", task_id},
         {"model_id", endpoint.model_id},
         {"policy", policy_json(policy)},
         {"n_points", points.size()},
         {"skipped", skipped}};
  if (report_error.empty()) j["report"] = report.to_json();
  else j["report_error"] = report_error;
  if (pessimistic_report) j["pessimistic_report"] = pessimistic_report->to_json();
  return j;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

metrics::PredictionRecord score_reply(const std::string& reply, const promptgen::AnswerCodec& codec,
                                      const LabelValue& truth) {
  metrics::PredictionRecord rec{truth, std::nullopt, std::nullopt};
  LabelValue parsed = promptgen::parse_reply(reply, codec);
  switch (codec.kind) {
    case TaskKind::kBinary: rec.score = std::get<bool>(parsed) ? 1.0 : 0.0; break;
    case TaskKind::kRegression:
      parsed = promptgen::unbin_label(static_cast<int>(std::get<double>(parsed)), *codec.label_range);
      break;
    case TaskKind::kGeneration: break;
  }
  rec.prediction = std::move(parsed);
  return rec;
}

EvalRun run_task_eval(const taskdata::DatasetBundle& bundle, const exemplar::ExemplarIndex& index,
                      const EvalOptions& options, llm::Client& client) {
  options.policy.validate();
  if (options.batch_size == 0) throw EvalError("batch_size must be positive");
  const taskdata::TaskSpec& task = bundle.spec;
  const promptgen::AnswerCodec codec = promptgen::AnswerCodec::for_task(task);

  EvalRun run;
  run.task_id = task.task_id;
  run.policy = options.policy;
  run.endpoint = client.config();
  run.started = utc_timestamp();

  if (!options.resume_dir.empty()) {
    run.run_dir = options.resume_dir;
  } else if (!options.runs_root.empty()) {
    run.run_dir = options.runs_root / task.task_id / (options.timestamp.empty() ? run.started : options.timestamp);
  }
  if (!run.run_dir.empty()) std::filesystem::create_directories(run.run_dir);

  std::map<std::size_t, PointResult> done;
  if (!options.resume_dir.empty()) done = read_checkpoint(run.run_dir, task.task_id, task.kind);

  std::vector<std::size_t> todo;
  std::vector<std::size_t> test = taskdata::split_indices(bundle, taskdata::Split::kTest);
  if (options.max_points > 0 && test.size() > options.max_points) test.resize(options.max_points);
  for (std::size_t i : test) {
    try {
      taskdata::check_point(task, bundle.points[i], i);
    } catch (const taskdata::TaskDataError&) {
      run.skipped.push_back(i);
      continue;
    }
    if (!done.count(i)) todo.push_back(i);
  }

  for (std::size_t start = 0; start < todo.size(); start += options.batch_size) {
    const std::size_t end = std::min(todo.size(), start + options.batch_size);
    std::vector<std::string> prompts;
    std::vector<PointResult> batch;
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t i = todo[k];
      const DataPoint& point = bundle.points[i];
      PointResult r;
      r.point_index = i;
      r.exemplar_ids = promptgen::choose_shots(options.policy, index, point, static_cast<std::uint64_t>(i));
      std::vector<DataPoint> shots;
      for (std::size_t id : r.exemplar_ids) shots.push_back(index.pool()[id]);
      promptgen::RenderedPrompt prompt = promptgen::render_prompt(task, point, shots, r.exemplar_ids);
      r.prompt_sha256 = sha256_hex(prompt.text);
      r.record.truth = point.label;
      prompts.push_back(std::move(prompt.text));
      batch.push_back(std::move(r));
    }
    std::vector<llm::GenerateResult> replies = client.batch_generate(prompts);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      PointResult& r = batch[k];
      if (replies[k].error_kind == "config_error") throw llm::ConfigError(replies[k].error);
      if (!replies[k].ok()) {
        r.error_kind = replies[k].error_kind;
        r.error = replies[k].error;
      } else {
        r.reply = *replies[k].text;
        try {
          r.record = score_reply(r.reply, codec, r.record.truth);
        } catch (const promptgen::PromptError& e) {
          r.error_kind = "unparseable";
          r.error = e.what();
        }
      }
      done.emplace(r.point_index, std::move(r));
    }
    if (!run.run_dir.empty()) write_checkpoint(run.run_dir, task.task_id, done);
    if (options.interrupt_after > 0 && done.size() >= options.interrupt_after && end < todo.size())
      throw Interrupted(done.size());
  }

  for (std::size_t i : test)
    if (auto it = done.find(i); it != done.end()) run.points.push_back(it->second);

  const std::vector<metrics::PredictionRecord> recs = run.records();
  try {
    run.report = metrics::bootstrap(recs, task.metric_id, options.bootstrap);
  } catch (const metrics::MetricError& e) {
    run.report_error = e.what();
  }
  if (task.kind == TaskKind::kBinary && metrics::count_unparseable(recs) > 0 && run.report_error.empty()) {
    std::vector<metrics::PredictionRecord> pessimistic = recs;
    for (auto& r : pessimistic) {
      if (r.prediction) continue;
      const bool wrong = !std::get<bool>(r.truth);
      r.prediction = wrong;
      r.score = wrong ? 1.0 : 0.0;
    }
    try {
      run.pessimistic_report = metrics::bootstrap(pessimistic, task.metric_id, options.bootstrap);
    } catch (const metrics::MetricError&) {
    }
  }
  run.finished = utc_timestamp();

  if (!run.run_dir.empty()) {
    std::string lines;
    for (const auto& p : run.points) lines += p.to_json().dump() + "\n";
    write_file_atomic(run.run_dir / "records.jsonl", lines);
    write_file_atomic(run.run_dir / "report.json", run.report_json().dump(2) + "\n");
    write_file_atomic(run.run_dir / "run.json", Json{{"task_id", run.task_id},
                                                      {"started", run.started},
                                                      {"finished", run.finished},
                                                      {"endpoint", run.endpoint.to_json()}}
                                                    .dump(2) + "\n");
  }
  return run;
}

EvalRun load_run(const std::filesystem::path& run_dir, const taskdata::TaskSpec& task) {
  const auto records = run_dir / "records.jsonl";
  if (!std::filesystem::exists(records)) throw EvalError(run_dir.string() + " has no records.jsonl");
  EvalRun run;
  run.task_id = task.task_id;
  run.run_dir = run_dir;
  for (const std::string& line : text::split(read_file(records), '\n'))
    if (!text::trim(line).empty()) run.points.push_back(PointResult::from_json(Json::parse(line), task.kind));
  return run;
}

std::vector<std::string> table_columns(const std::filesystem::path& tsv) {
  auto rows = read_tsv(tsv);
  if (rows[0].size() < 3) throw EvalError(tsv.string() + ": need task_id, metric and at least one model column");
  return {rows[0].begin() + 2, rows[0].end()};
}

ModelTable load_table_column(const std::filesystem::path& tsv, const std::string& column) {
  auto rows = read_tsv(tsv);
  const auto& header = rows[0];
  auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end() || it - header.begin() < 2) throw EvalError(tsv.string() + ": no model column '" + column + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());
  ModelTable out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) throw EvalError(tsv.string() + ":" + std::to_string(r + 1) + ": wrong column count");
    out.push_back({rows[r][0], taskdata::parse_metric_id(rows[r][1]), parse_cell(rows[r][col], tsv, r + 1)});
  }
  return out;
}

std::pair<ModelTable, ModelTable> load_pairs(const std::filesystem::path& tsv) {
  auto rows = read_tsv(tsv);
  std::pair<ModelTable, ModelTable> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 4) throw EvalError(tsv.string() + ":" + std::to_string(r + 1) + ": expected 4 columns");
    const MetricId m = taskdata::parse_metric_id(rows[r][1]);
    out.first.push_back({rows[r][0], m, parse_cell(rows[r][2], tsv, r + 1)});
    out.second.push_back({rows[r][0], m, parse_cell(rows[r][3], tsv, r + 1)});
  }
  return out;
}

ModelTable table_from_reports(const std::vector<std::filesystem::path>& reports) {
  ModelTable out;
  for (const auto& path : reports) {
    Json j = Json::parse(read_file(path));
    TableRow row;
    row.task_id = j.at("task_id").get<std::string>();
    if (j.contains("report")) {
      const auto rep = metrics::MetricReport::from_json(j.at("report"));
      row.metric = rep.metric_id;
      row.value = rep.value;
    }
    out.push_back(row);
  }
  return out;
}

double relative_change(double a, double b, MetricId metric) {
  if (b == 0.0) throw ZeroBaseline();
  const double d = taskdata::lower_is_better(metric) ? b - a : a - b;
  return d / std::abs(b);
}

double relative_change_mean(double a, double b, MetricId metric) {
  const double m = (a + b) / 2.0;
  if (m == 0.0) throw ZeroBaseline();
  const double d = taskdata::lower_is_better(metric) ? b - a : a - b;
  return d / std::abs(m);
}

std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::kA: return "A";
    case Winner::kB: return "B";
    case Winner::kTie: return "Tie";
  }
  return "?";
}

ComparisonReport compare_models(const ModelTable& a, const ModelTable& b) {
  if (a.size() != b.size()) throw metrics::LengthMismatch(a.size(), b.size());
  std::unordered_map<std::string, const TableRow*> by_task;
  for (const auto& row : b) by_task[row.task_id] = &row;
  ComparisonReport rep;
  std::vector<double> rel, rel_mean;
  std::vector<metrics::TaskScore> sa, sb;
  for (const auto& ra : a) {
    auto it = by_task.find(ra.task_id);
    if (it == by_task.end()) throw EvalError("task '" + ra.task_id + "' missing from the second table");
    const TableRow& rb = *it->second;
    if (ra.metric != rb.metric) throw EvalError("task '" + ra.task_id + "' uses different metrics");
    if (!ra.value || !rb.value) {
      rep.unavailable.push_back(ra.task_id);
      continue;
    }
    TaskComparison c;
    c.task_id = ra.task_id;
    c.metric = ra.metric;
    c.value_a = *ra.value;
    c.value_b = *rb.value;
    const double signed_diff = taskdata::lower_is_better(c.metric) ? c.value_b - c.value_a : c.value_a - c.value_b;
    try {
      c.relative_change = relative_change(c.value_a, c.value_b, c.metric);
    } catch (const ZeroBaseline&) {
    }
    try {
      c.relative_change_mean = relative_change_mean(c.value_a, c.value_b, c.metric);
    } catch (const ZeroBaseline&) {
    }
    const double decider = c.relative_change ? *c.relative_change : signed_diff;
    if (std::abs(decider) < kTieEpsilon) c.winner = Winner::kTie;
    else c.winner = decider > 0 ? Winner::kA : Winner::kB;
    c.near = c.winner != Winner::kB || (c.relative_change && *c.relative_change >= kNearThreshold);
    switch (c.winner) {
      case Winner::kA: ++rep.wins_a; break;
      case Winner::kB: ++rep.wins_b; break;
      case Winner::kTie: ++rep.ties; break;
    }
    if (c.near) ++rep.near_count;
    if (c.relative_change) rel.push_back(*c.relative_change);
    if (c.relative_change_mean) rel_mean.push_back(*c.relative_change_mean);
    sa.push_back({c.metric, c.value_a});
    sb.push_back({c.metric, c.value_b});
    rep.per_task.push_back(c);
  }
  rep.median_relative_change = median(rel);
  rep.median_relative_change_mean = median(rel_mean);
  if (!sa.empty()) {
    try {
      rep.wilcoxon = metrics::wilcoxon_paired(sa, sb);
    } catch (const metrics::AllZeroDifferences&) {
    }
  }
  return rep;
}

Json ComparisonReport::to_json() const {
  Json tasks = Json::array();
  for (const auto& c : per_task) {
    tasks.push_back(Json{{"task_id", c.task_id},
                         {"metric", std::string(taskdata::to_string(c.metric))},
                         {"value_a", c.value_a},
                         {"value_b", c.value_b},
                         {"relative_change", c.relative_change ? Json(*c.relative_change) : Json()},
                         {"relative_change_mean", c.relative_change_mean ? Json(*c.relative_change_mean) : Json()},
                         {"winner", std::string(to_string(c.winner))},
                         {"near", c.near}});
  }
  Json j{{"per_task", tasks},
         {"unavailable", unavailable},
         {"wins_a", wins_a},
         {"wins_b", wins_b},
         {"ties", ties},
         {"median_relative_change", median_relative_change},
         {"median_relative_change_mean", median_relative_change_mean},
         {"near_count", near_count}};
  if (wilcoxon) {
    j["wilcoxon"] = Json{{"w_plus", wilcoxon->w_plus},
                         {"w_minus", wilcoxon->w_minus},
                         {"statistic", wilcoxon->statistic},
                         {"p_value", wilcoxon->p_value},
                         {"n_effective", wilcoxon->n_effective},
                         {"exact", wilcoxon->exact}};
  }
  return j;
}

Json ThroughputReport::to_json() const {
  return Json{{"completed", completed},
              {"failed", failed},
              {"workers", workers},
              {"elapsed_seconds", elapsed_seconds},
              {"samples_per_day", samples_per_day},
              {"samples_per_day_per_worker", samples_per_day_per_worker}};
}

ThroughputReport bench_throughput(llm::Client& client, const std::vector<std::string>& prompts,
                                  std::chrono::milliseconds duration, int workers) {
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  ThroughputReport rep;
  rep.workers = workers;
  if (duration.count() <= 0 || prompts.empty()) return rep;
  using Clock = std::chrono::steady_clock;
  std::atomic<std::size_t> completed{0}, failed{0};
  const auto start = Clock::now();
  const auto deadline = start + duration;
  auto worker = [&](int w) {
    for (std::size_t k = static_cast<std::size_t>(w); Clock::now() < deadline; k += static_cast<std::size_t>(workers)) {
      try {
        client.generate(prompts[k % prompts.size()]);
        ++completed;
      } catch (const std::exception&) {
        ++failed;
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(worker, w);
  worker(0);
  for (auto& t : threads) t.join();
  rep.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  rep.completed = completed.load();
  rep.failed = failed.load();
  rep.samples_per_day = static_cast<double>(rep.completed) / rep.elapsed_seconds * 86400.0;
  rep.samples_per_day_per_worker = rep.samples_per_day / workers;
  return rep;
}

}  // namespace txbench::eval
