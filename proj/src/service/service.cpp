#include "txbench/service/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <random>
#include <regex>

namespace txbench::service {

namespace fs = std::filesystem;

std::string_view to_string(SessionStatus s) { return s == SessionStatus::kIdle ? "idle" : "running"; }

Json SessionInfo::to_json() const {
  return {{"id", id}, {"created_at", created_at}, {"status", to_string(status)}, {"episodes", episodes}};
}

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string random_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[24];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

Json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

}  // namespace

// ---- sessions

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  if (!fs::exists(root_)) return;
  std::vector<std::pair<std::string, Session>> found;
  for (const auto& dir : fs::directory_iterator(root_)) {
    const fs::path meta = dir.path() / "session.json";
    if (!fs::exists(meta)) continue;
    try {
      const Json j = read_json_file(meta);
      Session s;
      s.info.id = j.at("id").get<std::string>();
      s.info.created_at = j.at("created_at").get<std::string>();
      s.questions = j.at("questions").get<std::vector<std::string>>();
      s.info.episodes = s.questions.size();
      found.emplace_back(s.info.created_at + s.info.id, std::move(s));
    } catch (const Json::exception&) {
      continue;
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, s] : found) {
    order_.push_back(s.info.id);
    sessions_.emplace(s.info.id, std::move(s));
  }
}

void SessionStore::save_meta(const Session& s) const {
  const fs::path dir = root_ / s.info.id;
  fs::create_directories(dir);
  const fs::path tmp = dir / "session.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << Json{{"id", s.info.id}, {"created_at", s.info.created_at}, {"questions", s.questions}}.dump(2) << '\n';
  }
  fs::rename(tmp, dir / "session.json");
}

SessionInfo SessionStore::create() {
  Session s;
  s.info.created_at = iso_now();
  std::lock_guard lock(mu_);
  do {
    s.info.id = random_id();
  } while (sessions_.count(s.info.id));
  save_meta(s);
  order_.push_back(s.info.id);
  sessions_.emplace(s.info.id, s);
  return s.info;
}

std::vector<SessionInfo> SessionStore::list() const {
  std::lock_guard lock(mu_);
  std::vector<SessionInfo> out;
  for (const auto& id : order_) out.push_back(sessions_.at(id).info);
  return out;
}

const SessionStore::Session& SessionStore::get(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionNotFound(id);
  return it->second;
}

SessionInfo SessionStore::info(const std::string& id) const {
  std::lock_guard lock(mu_);
  return get(id).info;
}

fs::path SessionStore::episode_path(const std::string& id, std::size_t index) const {
  return root_ / id / ("episode_" + std::to_string(index) + ".jsonl");
}

std::pair<std::size_t, fs::path> SessionStore::begin(const std::string& id, const std::string& question) {
  std::lock_guard lock(mu_);
  auto& s = const_cast<Session&>(get(id));
  if (s.info.status == SessionStatus::kRunning) throw SessionBusy(id);
  s.info.status = SessionStatus::kRunning;
  const std::size_t index = s.questions.size();
  s.questions.push_back(question);
  s.info.episodes = s.questions.size();
  save_meta(s);
  return {index, episode_path(id, index)};
}

void SessionStore::finish(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it != sessions_.end()) it->second.info.status = SessionStatus::kIdle;
}

agent::AgentEpisode SessionStore::trace(const std::string& id, std::size_t index) const {
  std::string question;
  bool running = false;
  std::size_t count = 0;
  {
    std::lock_guard lock(mu_);
    const Session& s = get(id);
    count = s.questions.size();
    if (index >= count) throw SessionNotFound(id + " episode " + std::to_string(index));
    question = s.questions[index];
    running = s.info.status == SessionStatus::kRunning && index + 1 == count;
  }
  agent::EventLog log = agent::read_event_log(episode_path(id, index));
  if (log.finished) {
    log.finished->question = question;
    return *log.finished;
  }
  agent::AgentEpisode ep;
  ep.question = question;
  ep.steps = std::move(log.steps);
  ep.terminated_by = agent::Termination::kError;
  ep.error = running ? "episode in progress" : "episode did not finish";
  return ep;
}

std::vector<agent::AgentEpisode> SessionStore::episodes(const std::string& id) const {
  std::size_t n = info(id).episodes;
  std::vector<agent::AgentEpisode> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(trace(id, i));
  return out;
}

std::vector<agent::AgentEpisode> SessionStore::all_episodes() const {
  std::vector<agent::AgentEpisode> out;
  for (const auto& s : list()) {
    auto e = episodes(s.id);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

// ---- reports

std::vector<ReportEntry> list_reports(const fs::path& runs_root) {
  std::vector<ReportEntry> out;
  if (!fs::is_directory(runs_root)) return out;
  for (const auto& task : fs::directory_iterator(runs_root)) {
    if (!task.is_directory()) continue;
    for (const auto& run : fs::directory_iterator(task.path())) {
      const fs::path report = run.path() / "report.json";
      if (!run.is_directory() || !fs::is_regular_file(report)) continue;
      const std::string t = task.path().filename().string(), r = run.path().filename().string();
      out.push_back({t + "/" + r, t, r, report});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::optional<std::string> read_report(const fs::path& runs_root, const std::string& id) {
  for (const auto& r : list_reports(runs_root)) {
    if (r.id != id) continue;
    std::ifstream in(r.path, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return std::nullopt;
}

// ---- HTTP

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, Json{{"error", message}});
}

}  // namespace

Service::Service(ServiceConfig config, RuntimeFactory factory)
    : config_(std::move(config)),
      factory_(std::move(factory)),
      store_(config_.sessions_root),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

void Service::routes() {
  httplib::Server& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin}});
  s.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  s.Post("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 201, store_.create().to_json());
  });
  s.Get("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
    Json list = Json::array();
    for (const auto& i : store_.list()) list.push_back(i.to_json());
    send_json(res, 200, Json{{"sessions", list}});
  });
  s.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, store_.info(req.matches[1]).to_json());
    } catch (const SessionNotFound& e) {
      send_error(res, 404, e.what());
    }
  });

  s.Post(R"(/v1/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    std::string question;
    try {
      question = Json::parse(req.body).at("question").get<std::string>();
    } catch (const Json::exception&) {
      return send_error(res, 400, "body must be a JSON object with a string \"question\"");
    }
    if (question.find_first_not_of(" \t\r\n") == std::string::npos)
      return send_error(res, 400, "question must not be empty");

    fs::path log_path;
    try {
      log_path = store_.begin(id, question).second;
    } catch (const SessionNotFound& e) {
      return send_error(res, 404, e.what());
    } catch (const SessionBusy& e) {
      return send_error(res, 409, e.what());
    }
    std::shared_ptr<agent::AgentRuntime> runtime;
    try {
      runtime = std::make_shared<agent::AgentRuntime>(factory_());
    } catch (const std::exception& e) {
      store_.finish(id);
      return send_error(res, 500, std::string("cannot start agent: ") + e.what());
    }

    auto started = std::make_shared<bool>(false);
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, id, question, log_path, runtime, started](std::size_t, httplib::DataSink& sink) {
          *started = true;
          auto emit = [&sink](const OrderedJson& event) {
            const std::string line = event.dump() + "\n";
            // A disconnected client does not stop the episode; its trace is
            // still persisted.
            if (sink.is_writable()) sink.write(line.data(), line.size());
          };
          agent::AgentOptions opt;
          opt.log_path = log_path;
          opt.on_step = [&emit](const agent::AgentStep& step) { emit(step.to_event()); };
          agent::AgentEpisode ep;
          try {
            ep = runtime->run(question, opt);
          } catch (const std::exception& e) {
            ep.question = question;
            ep.terminated_by = agent::Termination::kError;
            ep.error = e.what();
            std::ofstream(log_path, std::ios::app) << ep.final_event().dump() << '\n';
          }
          emit(ep.final_event());
          store_.finish(id);
          sink.done();
          return true;
        },
        [this, id, started](bool) {
          if (!*started) store_.finish(id);
        });
  });

  s.Get(R"(/v1/sessions/([^/]+)/trace/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::size_t n = std::stoul(req.matches[2]);
      send_json(res, 200, Json::parse(store_.trace(req.matches[1], n).to_json().dump()));
    } catch (const SessionNotFound& e) {
      send_error(res, 404, e.what());
    } catch (const std::out_of_range&) {
      send_error(res, 404, "no such episode");
    }
  });
  s.Get(R"(/v1/sessions/([^/]+)/usage)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, agent::usage_stats(store_.episodes(req.matches[1])).to_json());
    } catch (const SessionNotFound& e) {
      send_error(res, 404, e.what());
    }
  });
  s.Get("/v1/usage", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, agent::usage_stats(store_.all_episodes()).to_json());
  });

  s.Get("/v1/reports", [this](const httplib::Request&, httplib::Response& res) {
    Json list = Json::array();
    for (const auto& r : list_reports(config_.runs_root))
      list.push_back({{"id", r.id}, {"task_id", r.task_id}, {"run", r.run}});
    send_json(res, 200, Json{{"reports", list}});
  });
  s.Get(R"(/v1/reports/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = read_report(config_.runs_root, req.matches[1]);
    if (!body) return send_error(res, 404, "unknown report " + std::string(req.matches[1]));
    res.status = 200;
    res.set_content(*body, "application/json");
  });
}

bool Service::listen(const std::string& host, int port) { return server_->listen(host, port); }

int Service::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool Service::serve() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace txbench::service
