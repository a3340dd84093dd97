#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "txbench/agent/agent.hpp"
#include "txbench/agent/scripted.hpp"
#include "txbench/common/json.hpp"

namespace httplib {
class Server;
}

namespace txbench::service {

class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SessionNotFound : public ServiceError {
 public:
  explicit SessionNotFound(const std::string& id) : ServiceError("unknown session " + id) {}
};

class SessionBusy : public ServiceError {
 public:
  explicit SessionBusy(const std::string& id) : ServiceError("session " + id + " is running an episode") {}
};

enum class SessionStatus { kIdle, kRunning };
std::string_view to_string(SessionStatus s);

struct SessionInfo {
  std::string id;
  std::string created_at;
  SessionStatus status = SessionStatus::kIdle;
  std::size_t episodes = 0;

  Json to_json() const;
};

// Sessions live in memory; each episode's event log is on disk under
// <root>/<session id>/, so traces survive a restart while Running state does
// not.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  SessionInfo create();
  std::vector<SessionInfo> list() const;
  SessionInfo info(const std::string& id) const;

  // Marks the session Running and returns the new episode's index and log
  // path. Throws SessionNotFound or SessionBusy.
  std::pair<std::size_t, std::filesystem::path> begin(const std::string& id, const std::string& question);
  void finish(const std::string& id);

  agent::AgentEpisode trace(const std::string& id, std::size_t index) const;
  std::vector<agent::AgentEpisode> episodes(const std::string& id) const;
  std::vector<agent::AgentEpisode> all_episodes() const;

 private:
  struct Session {
    SessionInfo info;
    std::vector<std::string> questions;
  };
  void save_meta(const Session& s) const;
  const Session& get(const std::string& id) const;
  std::filesystem::path episode_path(const std::string& id, std::size_t index) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
  std::vector<std::string> order_;
  std::uint64_t counter_ = 0;
};

struct ReportEntry {
  std::string id;  // <task>/<run>
  std::string task_id;
  std::string run;
  std::filesystem::path path;
};

// Evaluation reports under runs/<task>/<run>/report.json. Files are only
// ever opened for reading.
std::vector<ReportEntry> list_reports(const std::filesystem::path& runs_root);
std::optional<std::string> read_report(const std::filesystem::path& runs_root, const std::string& id);

using RuntimeFactory = std::function<agent::AgentRuntime()>;

struct ServiceConfig {
  std::filesystem::path sessions_root = "sessions";
  std::filesystem::path runs_root = "runs";
  std::string cors_origin = "*";
};

// HTTP API:
//   POST /v1/sessions                      create
//   GET  /v1/sessions                      list
//   GET  /v1/sessions/{id}                 info
//   POST /v1/sessions/{id}/messages        {"question"} -> NDJSON step events, then the final event
//   GET  /v1/sessions/{id}/trace/{n}       episode n (0-based)
//   GET  /v1/sessions/{id}/usage           tool usage for the session
//   GET  /v1/usage                         tool usage over all sessions
//   GET  /v1/reports, /v1/reports/{task}/{run}
class Service {
 public:
  Service(ServiceConfig config, RuntimeFactory factory);
  ~Service();

  httplib::Server& http() { return *server_; }
  SessionStore& sessions() { return store_; }

  // Binds and serves until stop(). Returns false if the port cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds to a free port and returns it; call serve() afterwards.
  int bind_any(const std::string& host);
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  void routes();

  ServiceConfig config_;
  RuntimeFactory factory_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace txbench::service
