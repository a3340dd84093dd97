#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "txbench/agent/agent.hpp"
#include "txbench/agent/scripted.hpp"
#include "txbench/common/text.hpp"
#include "txbench/contam/contam.hpp"
#include "txbench/evalrunner/eval.hpp"
#include "txbench/exemplar/index.hpp"
#include "txbench/promptgen/prompt.hpp"
#include "txbench/service/service.hpp"
#include "txbench/taskdata/task.hpp"

namespace fs = std::filesystem;
using namespace txbench;

namespace {

// Bad flags, unknown config keys, or contradictory options. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- settings: flags > TXBENCH_* environment > config file > defaults

struct Setting {
  std::string key;
  std::string fallback;
  std::string doc;
};

std::vector<Setting> setting_table() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return {
      {"catalog", "fixtures/tasks.json", "task catalog JSON"},
      {"runs_dir", "runs", "root directory for evaluation runs"},
      {"sessions_dir", "sessions", "agent session logs for the service"},
      {"endpoint", "http://127.0.0.1:8000/generate", "model endpoint URL"},
      {"model_id", "txgemma-27b-predict", "model identifier sent to the endpoint"},
      {"transport", "http", "model transport: http, replay or fixed"},
      {"cassette", "", "model cassette for the replay transport"},
      {"record", "", "append successful model replies to this cassette"},
      {"fixed_reply", "(B)", "reply of the fixed transport"},
      {"timeout_ms", "60000", "model request timeout"},
      {"max_retries", "3", "model request retries"},
      {"seed", "0", "seed for sampling and bootstrap"},
      {"workers", std::to_string(hw), "concurrent model requests"},
      {"host", "127.0.0.1", "bind address for serve"},
      {"port", "8080", "port for serve (0 picks a free port)"},
      {"cors_origin", "*", "allowed CORS origin for serve"},
      {"web_cassettes", "", "replay tool HTTP from cassettes under this directory"},
      {"tool_endpoints", "", "JSON file overriding the tool service URLs"},
      {"log_level", "info", "debug, info, warn or error"},
  };
}

std::string dashed(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

std::string env_name(const std::string& key) {
  std::string out = "TXBENCH_";
  for (char c : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

class Settings {
 public:
  void resolve(const std::map<std::string, CLI::Option*>& flags, const std::map<std::string, std::string>& raw,
               const std::string& config_flag) {
    for (const auto& s : setting_table()) {
      values_[s.key] = s.fallback;
      origin_[s.key] = "default";
    }
    std::string config = config_flag;
    if (config.empty())
      if (const char* e = std::getenv("TXBENCH_CONFIG")) config = e;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw UsageError("cannot read config file " + config);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::exception& e) {
        throw UsageError("config file " + config + " is not valid JSON: " + e.what());
      }
      if (!j.is_object()) throw UsageError("config file " + config + " must hold a JSON object");
      for (const auto& [k, v] : j.items()) {
        if (!values_.count(k)) throw UsageError("unknown config key '" + k + "' in " + config);
        values_[k] = v.is_string() ? v.get<std::string>() : v.dump();
        origin_[k] = "config";
      }
    }
    for (auto& [k, v] : values_) {
      if (const char* e = std::getenv(env_name(k).c_str())) {
        v = e;
        origin_[k] = "env";
      }
      if (flags.at(k)->count() > 0) {
        v = raw.at(k);
        origin_[k] = "flag";
      }
    }
    const std::string level = values_["log_level"];
    if (level != "debug" && level != "info" && level != "warn" && level != "error")
      throw UsageError("log_level must be debug, info, warn or error");
    for (const char* k : {"seed", "workers", "timeout_ms", "max_retries", "port"}) integer(k);
  }

  const std::string& str(const std::string& k) const { return values_.at(k); }
  long integer(const std::string& k) const {
    const std::string& v = values_.at(k);
    try {
      std::size_t used = 0;
      const long n = std::stol(v, &used);
      if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw UsageError(k + " must be an integer, got '" + v + "'");
  }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }
  int workers() const {
    const long w = integer("workers");
    if (w < 1) throw UsageError("workers must be at least 1");
    return static_cast<int>(w);
  }
  Json to_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : values_) j[k] = {{"value", v}, {"source", origin_.at(k)}};
    return j;
  }
  bool logs(const std::string& level) const {
    static const std::map<std::string, int> rank{{"debug", 0}, {"info", 1}, {"warn", 2}, {"error", 3}};
    return rank.at(level) >= rank.at(values_.at("log_level"));
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;
};

struct Context {
  Settings settings;
  bool json = false;

  void log(const std::string& level, const std::string& msg) const {
    if (settings.logs(level)) std::cerr << "[" << level << "] " << msg << "\n";
  }
};

// ---- shared builders

llm::EndpointConfig endpoint_config(const Context& ctx, const std::string& url = "") {
  llm::EndpointConfig cfg;
  cfg.base_url = url.empty() ? ctx.settings.str("endpoint") : url;
  cfg.model_id = ctx.settings.str("model_id");
  cfg.timeout = std::chrono::milliseconds(ctx.settings.integer("timeout_ms"));
  cfg.max_retries = static_cast<int>(ctx.settings.integer("max_retries"));
  cfg.max_in_flight = ctx.settings.workers();
  cfg.validate();
  return cfg;
}

std::shared_ptr<llm::Client> make_client(const Context& ctx, const std::string& url = "") {
  llm::TransportSpec spec;
  try {
    spec.kind = llm::parse_transport_kind(ctx.settings.str("transport"));
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  spec.cassette_path = ctx.settings.str("cassette");
  spec.fixed_reply = ctx.settings.str("fixed_reply");
  spec.record_path = ctx.settings.str("record");
  if (spec.kind == llm::TransportKind::kReplay && spec.cassette_path.empty())
    throw UsageError("the replay transport needs --cassette");
  return std::make_shared<llm::Client>(endpoint_config(ctx, url), llm::make_transport(spec));
}

taskdata::TaskCatalog catalog(const Context& ctx) { return taskdata::TaskCatalog::load(ctx.settings.str("catalog")); }

const taskdata::DataPoint& test_point(const taskdata::DatasetBundle& b, std::size_t n) {
  const auto idx = taskdata::split_indices(b, taskdata::Split::kTest);
  if (n >= idx.size())
    throw UsageError("test point " + std::to_string(n) + " out of range (" + std::to_string(idx.size()) +
                     " test points)");
  return b.points[idx[n]];
}

promptgen::ShotMode parse_mode(const std::string& m) {
  if (m == "nearest") return promptgen::ShotMode::kEvalNearest;
  if (m == "random") return promptgen::ShotMode::kTrainRandom;
  throw UsageError("shot mode must be nearest or random");
}

std::shared_ptr<tools::WebTransport> web_transport(const Context& ctx) {
  const std::string dir = ctx.settings.str("web_cassettes");
  if (!dir.empty()) return std::make_shared<tools::CassetteWebTransport>(fs::path(dir));
  return std::make_shared<tools::HttpWebTransport>();
}

// Model table from "path" (third column) or "path:column".
eval::ModelTable load_table(const std::string& spec) {
  fs::path path = spec;
  std::string column;
  const auto colon = spec.rfind(':');
  if (colon != std::string::npos && !fs::exists(spec)) {
    path = spec.substr(0, colon);
    column = spec.substr(colon + 1);
  }
  if (fs::is_directory(path)) {
    std::vector<fs::path> reports;
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.path().filename() == "report.json") reports.push_back(e.path());
    std::sort(reports.begin(), reports.end());
    return eval::table_from_reports(reports);
  }
  if (column.empty()) {
    const auto cols = eval::table_columns(path);
    if (cols.size() != 1)
      throw UsageError(path.string() + " has " + std::to_string(cols.size()) + " model columns; use " +
                       path.string() + ":<column>");
    column = cols[0];
  }
  return eval::load_table_column(path, column);
}

std::pair<eval::ModelTable, eval::ModelTable> load_comparison(const std::string& pairs, const std::string& a,
                                                              const std::string& b) {
  if (!pairs.empty()) {
    if (!a.empty() || !b.empty()) throw UsageError("give either --pairs or --a and --b");
    return eval::load_pairs(pairs);
  }
  if (a.empty() || b.empty()) throw UsageError("give --pairs, or both --a and --b");
  return {load_table(a), load_table(b)};
}

// ---- data / index / prompt

int data_validate(const Context& ctx, const std::vector<std::string>& ids_in) {
  const auto cat = catalog(ctx);
  std::vector<std::string> ids = ids_in;
  if (ids.empty())
    for (const auto& t : cat.tasks()) ids.push_back(t.task_id);
  int rc = 0;
  Json out = Json::array();
  for (const auto& id : ids) {
    Json row{{"task_id", id}};
    try {
      const auto bundle = cat.load_bundle(id);
      row["counts"] = {{"train", bundle.counts.train}, {"valid", bundle.counts.validation}, {"test", bundle.counts.test}};
      std::string status = "OK";
      if (bundle.spec.expected_counts) {
        const auto report = taskdata::validate_counts(bundle, *bundle.spec.expected_counts);
        Json mm = Json::array();
        for (const auto& m : report.mismatches) {
          mm.push_back({{"split", taskdata::to_string(m.split)}, {"expected", m.expected}, {"found", m.found}});
          status = "MISMATCH";
        }
        row["mismatches"] = mm;
      }
      row["status"] = status;
      if (status != "OK") rc = 1;
      if (!ctx.json) {
        std::cout << id << "\ttrain=" << bundle.counts.train << "\tvalid=" << bundle.counts.validation
                  << "\ttest=" << bundle.counts.test << "\t" << status;
        for (const auto& m : row.value("mismatches", Json::array()))
          std::cout << "\t" << m["split"].get<std::string>() << " expected " << m["expected"] << " found "
                    << m["found"];
        std::cout << "\n";
      }
    } catch (const std::out_of_range&) {
      throw UsageError("unknown task '" + id + "'");
    } catch (const taskdata::TaskDataError& e) {
      row["status"] = "ERROR";
      row["error"] = e.what();
      rc = 1;
      if (!ctx.json) std::cout << id << "\tERROR\t" << e.what() << "\n";
    }
    out.push_back(row);
  }
  if (ctx.json) std::cout << out.dump(2) << "\n";
  return rc;
}

int index_build(const Context& ctx, const std::string& task, const std::string& out) {
  const auto bundle = catalog(ctx).load_bundle(task);
  auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
  index.save(out);
  for (const auto& d : index.diagnostics()) ctx.log("warn", d);
  if (ctx.json)
    std::cout << Json{{"task_id", task}, {"size", index.size()}, {"path", out}}.dump() << "\n";
  else
    std::cout << "indexed " << index.size() << " points of " << task << " into " << out << "\n";
  return 0;
}

int index_query(const Context& ctx, const std::string& path, const std::vector<std::string>& features, int k) {
  const auto index = exemplar::ExemplarIndex::load(path);
  const auto& schema = index.task().feature_schema;
  if (features.size() != schema.size())
    throw UsageError("task " + index.task().task_id + " needs " + std::to_string(schema.size()) + " --feature values");
  taskdata::DataPoint q;
  for (std::size_t i = 0; i < schema.size(); ++i) q.features.push_back({schema[i], features[i]});
  q.label = index.pool().empty() ? taskdata::LabelValue{false} : index.pool()[0].label;
  const auto hits = index.query_knn(q, static_cast<std::size_t>(std::max(k, 0)));
  Json out = Json::array();
  for (std::size_t r = 0; r < hits.size(); ++r) {
    const auto& p = index.pool()[hits[r].point_index];
    std::string feats;
    for (const auto& f : p.features) feats += (feats.empty() ? "" : "\t") + f.value;
    if (ctx.json)
      out.push_back({{"rank", r + 1},
                     {"point", hits[r].point_index},
                     {"similarity", hits[r].similarity},
                     {"label", taskdata::label_to_string(p.label)}});
    else
      std::cout << r + 1 << "\t" << hits[r].point_index << "\t" << num(hits[r].similarity) << "\t"
                << taskdata::label_to_string(p.label) << "\t" << feats << "\n";
  }
  if (ctx.json) std::cout << out.dump(2) << "\n";
  return 0;
}

int prompt_render(const Context& ctx, const std::string& task, std::size_t point, int shots, const std::string& mode) {
  const auto bundle = catalog(ctx).load_bundle(task);
  const auto& query = test_point(bundle, point);
  promptgen::RenderedPrompt p;
  if (shots <= 0) {
    p = promptgen::render_prompt(bundle.spec, query, {});
  } else {
    const auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
    promptgen::FewShotPolicy policy;
    policy.mode = parse_mode(mode);
    policy.eval_shots = shots;
    policy.shot_min = 1;
    policy.shot_max = shots;
    policy.zero_shot_fraction = 0.0;
    policy.rng_seed = ctx.settings.seed();
    const auto ids = promptgen::choose_shots(policy, index, query, point);
    std::vector<taskdata::DataPoint> chosen;
    for (auto i : ids) chosen.push_back(index.pool()[i]);
    p = promptgen::render_prompt(bundle.spec, query, chosen, ids);
  }
  if (ctx.json)
    std::cout << Json{{"text", p.text}, {"shot_count", p.shot_count}, {"exemplar_ids", p.exemplar_ids}}.dump() << "\n";
  else
    std::cout << p.text;
  return 0;
}

// ---- eval / compare / contam / stats

struct EvalArgs {
  std::vector<std::string> tasks;
  std::size_t max_points = 0;
  std::string mode = "nearest";
  int eval_shots = 10;
  int n_resamples = 1000;
  std::string resume;
  std::string run_name;
};

int eval_run(const Context& ctx, const EvalArgs& a) {
  const auto cat = catalog(ctx);
  std::vector<std::string> ids = a.tasks;
  if (ids.empty())
    for (const auto& t : cat.tasks()) ids.push_back(t.task_id);
  if (!a.resume.empty() && ids.size() != 1) throw UsageError("--resume needs exactly one --task");
  auto client = make_client(ctx);
  int rc = 0;
  Json out = Json::array();
  for (const auto& id : ids) {
    const auto bundle = cat.load_bundle(id);
    const auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
    eval::EvalOptions opt;
    opt.policy.mode = parse_mode(a.mode);
    opt.policy.eval_shots = a.eval_shots;
    opt.policy.rng_seed = ctx.settings.seed();
    opt.bootstrap.seed = ctx.settings.seed();
    opt.bootstrap.n_resamples = a.n_resamples;
    opt.runs_root = ctx.settings.str("runs_dir");
    opt.timestamp = a.run_name;
    opt.resume_dir = a.resume;
    opt.max_points = a.max_points;
    ctx.log("info", "evaluating " + id);
    const auto run = eval::run_task_eval(bundle, index, opt, *client);
    if (!run.report_error.empty()) rc = 1;
    if (ctx.json) {
      out.push_back(run.report_json());
    } else if (!run.report_error.empty()) {
      std::cout << id << "\tERROR\t" << run.report_error << "\n";
    } else {
      const auto& r = run.report;
      std::cout << id << "\t" << taskdata::to_string(r.metric_id) << "=" << num(r.value) << " [" << num(r.ci_low)
                << ", " << num(r.ci_high) << "]\tn=" << r.n << "\tunparseable=" << r.n_unparseable << "\t"
                << run.run_dir.string() << "\n";
    }
  }
  if (ctx.json) std::cout << out.dump(2) << "\n";
  return rc;
}

void print_wilcoxon(const metrics::WilcoxonResult& w) {
  std::cout << "W+=" << num(w.w_plus) << " W-=" << num(w.w_minus) << " statistic=" << num(w.statistic)
            << " p=" << num(w.p_value) << " n=" << w.n_effective << " exact=" << (w.exact ? "yes" : "no") << "\n";
}

int compare(const Context& ctx, const std::string& pairs, const std::string& a, const std::string& b, bool per_task) {
  auto [ta, tb] = load_comparison(pairs, a, b);
  const auto r = eval::compare_models(ta, tb);
  if (ctx.json) {
    std::cout << r.to_json().dump(2) << "\n";
    return 0;
  }
  if (per_task)
    for (const auto& t : r.per_task)
      std::cout << t.task_id << "\t" << taskdata::to_string(t.metric) << "\t" << num(t.value_a) << "\t"
                << num(t.value_b) << "\t" << eval::to_string(t.winner) << "\n";
  std::cout << "wins_a=" << r.wins_a << " wins_b=" << r.wins_b << " ties=" << r.ties
            << " unavailable=" << r.unavailable.size() << "\n";
  if (r.wilcoxon) {
    std::cout << "wilcoxon ";
    print_wilcoxon(*r.wilcoxon);
  }
  std::cout << "median_relative_change=" << num(100 * r.median_relative_change) << "%"
            << " median_relative_change_mean=" << num(100 * r.median_relative_change_mean) << "%"
            << " near=" << r.near_count << "\n";
  return 0;
}

int contam_scan(const Context& ctx, const std::string& task, const std::vector<std::string>& corpus,
                const std::string& run_dir) {
  const auto bundle = catalog(ctx).load_bundle(task);
  std::vector<fs::path> paths(corpus.begin(), corpus.end());
  const auto index = contam::CorpusIndex::build(paths);
  const auto flagged = contam::flag_contaminated(bundle, index);
  const std::size_t n_test = taskdata::split_indices(bundle, taskdata::Split::kTest).size();
  Json out{{"task_id", task}, {"flagged", flagged}, {"test_points", n_test}};
  if (!run_dir.empty()) {
    metrics::BootstrapOptions opt;
    opt.seed = ctx.settings.seed();
    const auto run = eval::load_run(run_dir, bundle.spec);
    out["report"] = contam::filtered_report(run, flagged, bundle.spec.metric_id, opt).to_json();
  }
  if (ctx.json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::cout << task << "\tflagged=" << flagged.size() << "/" << n_test << "\n";
  if (out.contains("report")) {
    const auto& r = out["report"];
    std::cout << "full=" << num(r["report_full"]["value"].get<double>())
              << " filtered=" << num(r["report_filtered"]["value"].get<double>()) << "\n";
  }
  return 0;
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<double> out;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    try {
      out.push_back(std::stod(line.substr(b)));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": not a number: " + line);
    }
  }
  return out;
}

int stats_wilcoxon(const Context& ctx, const std::string& pairs, const std::string& a, const std::string& b) {
  auto [ta, tb] = load_comparison(pairs, a, b);
  if (ta.size() != tb.size()) throw std::runtime_error("tables have different task counts");
  std::vector<metrics::TaskScore> sa, sb;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!ta[i].value || !tb[i].value) continue;
    sa.push_back({ta[i].metric, *ta[i].value});
    sb.push_back({tb[i].metric, *tb[i].value});
  }
  const auto w = metrics::wilcoxon_paired(sa, sb);
  if (ctx.json)
    std::cout << Json{{"w_plus", w.w_plus},   {"w_minus", w.w_minus},         {"statistic", w.statistic},
                      {"p_value", w.p_value}, {"n_effective", w.n_effective}, {"exact", w.exact}}
                     .dump()
              << "\n";
  else
    print_wilcoxon(w);
  return 0;
}

int stats_tost(const Context& ctx, const std::string& a, const std::string& b, double delta, double alpha) {
  const auto t = metrics::tost_equivalence(read_numbers(a), read_numbers(b), delta, alpha);
  if (ctx.json)
    std::cout << Json{{"delta", t.delta},     {"mean_difference", t.mean_difference}, {"p_lower", t.p_lower},
                      {"p_upper", t.p_upper}, {"p_value", t.p_value},                 {"equivalent", t.equivalent}}
                     .dump()
              << "\n";
  else
    std::cout << "mean_difference=" << num(t.mean_difference) << " p_lower=" << num(t.p_lower)
              << " p_upper=" << num(t.p_upper) << " p=" << num(t.p_value)
              << " equivalent=" << (t.equivalent ? "yes" : "no") << "\n";
  return 0;
}

// ---- agent / serve / bench

struct AgentArgs {
  std::string question;
  std::string script;
  std::string agent_cassette;
  std::string predict_endpoint;
  std::string log;
  int max_steps = agent::kDefaultMaxSteps;
  std::size_t summary_max_chars = agent::kDefaultSummaryMaxChars;
};

agent::AgentRuntime make_runtime(const Context& ctx, const AgentArgs& a) {
  if (!a.script.empty()) {
    const auto script = agent::EpisodeScript::load(a.script);
    const fs::path cassette =
        a.agent_cassette.empty() ? fs::path(a.script).parent_path() / "llm.jsonl" : fs::path(a.agent_cassette);
    return agent::replay_runtime(script, web_transport(ctx), cassette);
  }
  auto env = std::make_shared<tools::ToolEnv>();
  env->predict = make_client(ctx, a.predict_endpoint);
  env->chat = env->predict;
  env->web = std::make_shared<tools::ServiceClient>(web_transport(ctx), std::make_shared<tools::HostRateLimiter>());
  const std::string endpoints = ctx.settings.str("tool_endpoints");
  if (!endpoints.empty()) {
    std::ifstream in(endpoints);
    if (!in) throw UsageError("cannot read " + endpoints);
    env->endpoints = tools::ServiceEndpoints::from_json(Json::parse(in));
  }
  agent::AgentRuntime rt;
  rt.orchestrator = make_client(ctx);
  rt.registry = std::make_shared<const agent::ToolRegistry>(agent::canonical_registry(env));
  rt.options.max_steps = a.max_steps;
  rt.options.summary_max_chars = a.summary_max_chars;
  return rt;
}

void print_step(const agent::AgentStep& s) {
  const std::string n = std::to_string(s.index);
  std::cout << "Thought " << n << ": " << s.thought << "\nAction " << n << ": " << s.tool << "\n";
  for (const auto& [k, v] : s.input) std::cout << "Input " << k << ": " << v << "\n";
  std::cout << "Observation " << n << ": " << s.summarized_observation << " (" << s.latency_ms << " ms)\n\n";
  std::cout.flush();
}

int run_question(const Context& ctx, const agent::AgentRuntime& rt, const std::string& question,
                 const std::string& log) {
  agent::AgentOptions opt;
  if (!log.empty()) opt.log_path = log;
  opt.on_step = [&ctx](const agent::AgentStep& s) {
    if (ctx.json)
      std::cout << s.to_event().dump() << "\n" << std::flush;
    else
      print_step(s);
  };
  const auto ep = rt.run(question, opt);
  if (ctx.json) {
    std::cout << ep.final_event().dump() << "\n";
  } else if (ep.terminated_by == agent::Termination::kFinalAnswer) {
    std::cout << "Final Answer: " << ep.final_response << "\n";
  } else {
    std::cout << "No final answer (" << agent::to_string(ep.terminated_by) << ")"
              << (ep.error.empty() ? "" : ": " + ep.error) << "\n";
  }
  return ep.terminated_by == agent::Termination::kError ? 1 : 0;
}

int agent_run(const Context& ctx, const AgentArgs& a) {
  std::string q = a.question;
  if (q.empty() && !a.script.empty()) q = agent::EpisodeScript::load(a.script).question;
  if (q.empty()) throw UsageError("--question is required");
  return run_question(ctx, make_runtime(ctx, a), q, a.log);
}

int agent_repl(const Context& ctx, const AgentArgs& a) {
  const auto rt = make_runtime(ctx, a);
  int rc = 0;
  for (std::string line;;) {
    std::cerr << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    const std::string q(text::trim(line));
    if (q.empty()) continue;
    if (q == "exit" || q == "quit") break;
    rc = std::max(rc, run_question(ctx, rt, q, ""));
  }
  return rc;
}

int agent_record(const Context& ctx, const std::string& script, const std::string& calls, std::string out) {
  if (ctx.settings.str("web_cassettes").empty()) throw UsageError("recording needs --web-cassettes");
  if (script.empty() == calls.empty()) throw UsageError("give exactly one of --script or --calls");
  auto web = web_transport(ctx);
  if (!script.empty()) {
    if (out.empty()) out = (fs::path(script).parent_path() / "llm.jsonl").string();
    const auto ep = agent::record_episode(agent::EpisodeScript::load(script), web, out);
    std::cout << "recorded " << ep.steps.size() << " steps to " << out << "\n";
  } else {
    if (out.empty()) throw UsageError("--out is required with --calls");
    const auto results = agent::record_tool_calls(agent::load_tool_calls(calls), web, out);
    std::cout << "recorded " << results.size() << " tool calls to " << out << "\n";
  }
  return 0;
}

service::Service* g_service = nullptr;

int serve(const Context& ctx, const AgentArgs& a) {
  make_runtime(ctx, a);  // fail fast on bad settings
  service::ServiceConfig cfg;
  cfg.sessions_root = ctx.settings.str("sessions_dir");
  cfg.runs_root = ctx.settings.str("runs_dir");
  cfg.cors_origin = ctx.settings.str("cors_origin");
  service::Service svc(cfg, [&ctx, a] { return make_runtime(ctx, a); });
  const std::string host = ctx.settings.str("host");
  const long port = ctx.settings.integer("port");
  const int bound = port == 0 ? svc.bind_any(host) : (svc.http().bind_to_port(host, static_cast<int>(port)) ? static_cast<int>(port) : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  g_service = &svc;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  std::cerr << "listening on http://" << host << ":" << bound << "\n";
  svc.serve();
  g_service = nullptr;
  return 0;
}

int bench_throughput(const Context& ctx, long duration_ms, long latency_ms, const std::string& prompts_file) {
  std::shared_ptr<llm::Client> client;
  if (ctx.settings.str("transport") == "fixed" && latency_ms > 0) {
    client = std::make_shared<llm::Client>(
        endpoint_config(ctx),
        std::make_shared<llm::FixedMockTransport>(ctx.settings.str("fixed_reply"), std::chrono::milliseconds(latency_ms)));
  } else {
    client = make_client(ctx);
  }
  std::vector<std::string> prompts{"ping"};
  if (!prompts_file.empty()) {
    prompts.clear();
    std::ifstream in(prompts_file);
    if (!in) throw std::runtime_error("cannot read " + prompts_file);
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) prompts.push_back(line);
  }
  const auto r = eval::bench_throughput(*client, prompts, std::chrono::milliseconds(duration_ms), ctx.settings.workers());
  if (ctx.json)
    std::cout << r.to_json().dump() << "\n";
  else
    std::cout << "completed=" << r.completed << " failed=" << r.failed << " workers=" << r.workers
              << " elapsed_s=" << num(r.elapsed_seconds) << " samples_per_day=" << num(r.samples_per_day)
              << " per_worker=" << num(r.samples_per_day_per_worker) << "\n";
  return r.failed > 0 && r.completed == 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Therapeutics benchmark toolkit: datasets, prompts, evaluation, statistics and the tool-using agent."};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> flags;
  for (const auto& s : setting_table())
    flags[s.key] = app.add_option("--" + dashed(s.key), raw[s.key], s.doc + " (default " + (s.fallback.empty() ? "none" : s.fallback) + ")");
  std::string config;
  app.add_option("--config", config, "JSON config file; keys as the long flags with underscores");
  bool json = false;
  app.add_flag("--json", json, "machine-readable output");
  bool show_settings = false;
  app.add_flag("--show-settings", show_settings, "print resolved settings and their sources, then exit");

  std::function<int(const Context&)> action;
  auto leaf = [&](CLI::App* sub, std::function<int(const Context&)> fn) {
    sub->callback([&action, fn] { action = fn; });
  };

  // data
  auto* data = app.add_subcommand("data", "task datasets");
  data->require_subcommand(1);
  std::vector<std::string> validate_tasks;
  auto* validate = data->add_subcommand("validate", "load tasks and check split sizes");
  validate->add_option("--task", validate_tasks, "task id (repeatable; default all)");
  leaf(validate, [&](const Context& c) { return data_validate(c, validate_tasks); });

  // index
  auto* index = app.add_subcommand("index", "exemplar similarity index");
  index->require_subcommand(1);
  std::string index_task, index_out, index_path;
  std::vector<std::string> index_features;
  int index_k = 10;
  auto* build = index->add_subcommand("build", "index the train and validation points of a task");
  build->add_option("--task", index_task, "task id")->required();
  build->add_option("--out", index_out, "index file")->required();
  leaf(build, [&](const Context& c) { return index_build(c, index_task, index_out); });
  auto* query = index->add_subcommand("query", "nearest neighbours of a query point");
  query->add_option("--index", index_path, "index file")->required();
  query->add_option("--feature", index_features, "feature value, in schema order (repeatable)")->required();
  query->add_option("-k", index_k, "neighbours to return");
  leaf(query, [&](const Context& c) { return index_query(c, index_path, index_features, index_k); });

  // prompt
  auto* prompt = app.add_subcommand("prompt", "prompt rendering");
  prompt->require_subcommand(1);
  std::string prompt_task, prompt_mode = "nearest";
  std::size_t prompt_point = 0;
  int prompt_shots = 0;
  auto* render = prompt->add_subcommand("render", "render the prompt for one test point");
  render->add_option("--task", prompt_task, "task id")->required();
  render->add_option("--point", prompt_point, "index among the test points");
  render->add_option("--shots", prompt_shots, "number of exemplars");
  render->add_option("--mode", prompt_mode, "exemplar choice: nearest or random");
  leaf(render, [&](const Context& c) { return prompt_render(c, prompt_task, prompt_point, prompt_shots, prompt_mode); });

  // eval
  auto* evalc = app.add_subcommand("eval", "model evaluation");
  evalc->require_subcommand(1);
  EvalArgs eval_args;
  auto* run = evalc->add_subcommand("run", "evaluate tasks against the configured endpoint");
  run->add_option("--task", eval_args.tasks, "task id (repeatable; default all)");
  run->add_option("--max-points", eval_args.max_points, "evaluate at most this many test points");
  run->add_option("--mode", eval_args.mode, "exemplar choice: nearest or random");
  run->add_option("--eval-shots", eval_args.eval_shots, "exemplars per prompt in nearest mode");
  run->add_option("--resamples", eval_args.n_resamples, "bootstrap resamples");
  run->add_option("--resume", eval_args.resume, "continue the run in this directory");
  run->add_option("--run-name", eval_args.run_name, "run directory name (default: UTC timestamp)");
  leaf(run, [&](const Context& c) { return eval_run(c, eval_args); });

  // compare
  std::string cmp_pairs, cmp_a, cmp_b;
  bool cmp_per_task = false;
  auto* cmp = app.add_subcommand("compare", "per-task wins, Wilcoxon test and relative changes of model A over B");
  cmp->add_option("--pairs", cmp_pairs, "TSV: task_id, metric_id, value_a, value_b");
  cmp->add_option("--a", cmp_a, "model A: table.tsv[:column] or a runs directory");
  cmp->add_option("--b", cmp_b, "model B: table.tsv[:column] or a runs directory");
  cmp->add_flag("--per-task", cmp_per_task, "also print one line per task");
  leaf(cmp, [&](const Context& c) { return compare(c, cmp_pairs, cmp_a, cmp_b, cmp_per_task); });

  // contam
  auto* contamc = app.add_subcommand("contam", "data contamination analysis");
  contamc->require_subcommand(1);
  std::string contam_task, contam_run;
  std::vector<std::string> contam_corpus;
  auto* scan = contamc->add_subcommand("scan", "flag test points found in a corpus");
  scan->add_option("--task", contam_task, "task id")->required();
  scan->add_option("--corpus", contam_corpus, "corpus file, one snippet per line (repeatable)")->required();
  scan->add_option("--run", contam_run, "run directory to rescore without flagged points");
  leaf(scan, [&](const Context& c) { return contam_scan(c, contam_task, contam_corpus, contam_run); });

  // agent
  auto* agentc = app.add_subcommand("agent", "tool-using agent");
  agentc->require_subcommand(1);
  AgentArgs agent_args;
  auto agent_opts = [&](CLI::App* sub) {
    sub->add_option("--script", agent_args.script, "replay a recorded script (models served from its cassette)");
    sub->add_option("--agent-cassette", agent_args.agent_cassette, "cassette for --script (default: llm.jsonl beside it)");
    sub->add_option("--predict-endpoint", agent_args.predict_endpoint, "endpoint of the prediction model");
    sub->add_option("--max-steps", agent_args.max_steps, "tool calls per question");
    sub->add_option("--summary-max-chars", agent_args.summary_max_chars, "observations longer than this are summarized");
  };
  auto* arun = agentc->add_subcommand("run", "answer one question");
  agent_opts(arun);
  arun->add_option("--question", agent_args.question, "the question");
  arun->add_option("--log", agent_args.log, "JSON-lines event log");
  leaf(arun, [&](const Context& c) { return agent_run(c, agent_args); });
  auto* repl = agentc->add_subcommand("repl", "answer questions read from stdin, one per line");
  agent_opts(repl);
  leaf(repl, [&](const Context& c) { return agent_repl(c, agent_args); });
  std::string rec_script, rec_calls, rec_out;
  auto* record = agentc->add_subcommand("record", "record the model cassette for a scripted run");
  record->add_option("--script", rec_script, "episode script JSON");
  record->add_option("--calls", rec_calls, "scripted tool calls JSON");
  record->add_option("--out", rec_out, "cassette to write");
  leaf(record, [&](const Context& c) { return agent_record(c, rec_script, rec_calls, rec_out); });

  // serve
  auto* servec = app.add_subcommand("serve", "HTTP API for agent sessions and evaluation reports");
  agent_opts(servec);
  leaf(servec, [&](const Context& c) { return serve(c, agent_args); });

  // bench
  auto* bench = app.add_subcommand("bench", "benchmarks");
  bench->require_subcommand(1);
  long bench_duration = 10000, bench_latency = 0;
  std::string bench_prompts;
  auto* tp = bench->add_subcommand("throughput", "requests per day against the configured endpoint");
  tp->add_option("--duration-ms", bench_duration, "measurement window");
  tp->add_option("--latency-ms", bench_latency, "simulated latency of the fixed transport");
  tp->add_option("--prompts", bench_prompts, "file with one prompt per line");
  leaf(tp, [&](const Context& c) { return bench_throughput(c, bench_duration, bench_latency, bench_prompts); });

  // stats
  auto* stats = app.add_subcommand("stats", "statistical tests");
  stats->require_subcommand(1);
  std::string w_pairs, w_a, w_b;
  auto* wil = stats->add_subcommand("wilcoxon", "signed-rank test on normalized per-task differences");
  wil->add_option("--pairs", w_pairs, "TSV: task_id, metric_id, value_a, value_b");
  wil->add_option("--a", w_a, "model A table");
  wil->add_option("--b", w_b, "model B table");
  leaf(wil, [&](const Context& c) { return stats_wilcoxon(c, w_pairs, w_a, w_b); });
  std::string t_a, t_b;
  double t_delta = 0, t_alpha = 0.05;
  auto* tost = stats->add_subcommand("tost", "two one-sided tests for equivalence of two samples");
  tost->add_option("--a", t_a, "file with one value per line")->required();
  tost->add_option("--b", t_b, "file with one value per line")->required();
  tost->add_option("--delta", t_delta, "equivalence margin")->required();
  tost->add_option("--alpha", t_alpha, "significance level");
  leaf(tost, [&](const Context& c) { return stats_tost(c, t_a, t_b, t_delta, t_alpha); });

  if (argc < 2) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Context ctx;
  ctx.json = json;
  try {
    ctx.settings.resolve(flags, raw, config);
    if (show_settings) {
      std::cout << ctx.settings.to_json().dump(2) << "\n";
      return 0;
    }
    if (!action) {
      std::cerr << "error: a subcommand is required\n\n" << app.help();
      return 2;
    }
    return action(ctx);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
