#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "txbench/common/json.hpp"

namespace txbench::tools {

class ToolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServiceUnavailable : public ToolError {
 public:
  using ToolError::ToolError;
};

class RateLimited : public ToolError {
 public:
  RateLimited(const std::string& host, std::chrono::milliseconds retry_after)
      : ToolError("rate limited by " + host), retry_after_(retry_after) {}
  std::chrono::milliseconds retry_after() const { return retry_after_; }

 private:
  std::chrono::milliseconds retry_after_;
};

class NotFound : public ToolError {
 public:
  using ToolError::ToolError;
};

class FetchFailed : public ToolError {
 public:
  explicit FetchFailed(int status) : ToolError("fetch failed with HTTP " + std::to_string(status)), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class CassetteMiss : public ToolError {
 public:
  explicit CassetteMiss(const std::string& key) : ToolError("no cassette entry for " + key) {}
};

struct WebRequest {
  std::string method = "GET";
  std::string url;
  // Form-encoded or raw body for POST.
  std::string body;
  std::string content_type;
};

struct WebResponse {
  int status = 200;
  std::string body;
  // Seconds from a Retry-After header, when present.
  std::optional<int> retry_after_s;
};

// "GET https://host/path?q" plus the body hash for requests with a body.
std::string request_key(const WebRequest& req);

std::string percent_encode(std::string_view s);
std::string host_of(std::string_view url);

class WebTransport {
 public:
  virtual ~WebTransport() = default;
  // Returns any HTTP response; throws ServiceUnavailable on connection failure.
  virtual WebResponse fetch(const WebRequest& req) = 0;
};

class FunctionWebTransport : public WebTransport {
 public:
  using Fn = std::function<WebResponse(const WebRequest&)>;
  explicit FunctionWebTransport(Fn fn) : fn_(std::move(fn)) {}
  WebResponse fetch(const WebRequest& req) override { return fn_(req); }

 private:
  Fn fn_;
};

struct WebCassetteEntry {
  std::string key;
  WebResponse response;

  Json to_json() const;
  static WebCassetteEntry from_json(const Json& j);
};

std::vector<WebCassetteEntry> read_web_cassette(const std::filesystem::path& path);

// Serves recorded responses. Repeated keys are served in file order and the
// last one repeats. Loading a directory reads every http.jsonl below it.
class CassetteWebTransport : public WebTransport {
 public:
  explicit CassetteWebTransport(const std::filesystem::path& path);
  explicit CassetteWebTransport(const std::vector<WebCassetteEntry>& entries);
  WebResponse fetch(const WebRequest& req) override;
  std::size_t size() const { return count_; }

 private:
  void add(const WebCassetteEntry& e);

  std::mutex mu_;
  std::unordered_map<std::string, std::vector<WebResponse>> responses_;
  std::unordered_map<std::string, std::size_t> served_;
  std::size_t count_ = 0;
};

class RecordingWebTransport : public WebTransport {
 public:
  RecordingWebTransport(std::shared_ptr<WebTransport> inner, std::filesystem::path cassette);
  WebResponse fetch(const WebRequest& req) override;

 private:
  std::shared_ptr<WebTransport> inner_;
  std::filesystem::path path_;
  std::mutex mu_;
};

// Live HTTP(S) via cpp-httplib. Follows redirects.
class HttpWebTransport : public WebTransport {
 public:
  explicit HttpWebTransport(std::chrono::milliseconds timeout = std::chrono::seconds(30)) : timeout_(timeout) {}
  WebResponse fetch(const WebRequest& req) override;

 private:
  std::chrono::milliseconds timeout_;
};

using Clock = std::function<std::chrono::steady_clock::time_point()>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

Clock steady_clock_fn();
Sleeper thread_sleeper();

class TokenBucket {
 public:
  TokenBucket(double rate_per_s, double burst, Clock clock);
  // Takes one token and returns how long the caller must wait before using it.
  std::chrono::milliseconds reserve();

 private:
  double rate_;
  double burst_;
  double tokens_;
  Clock clock_;
  std::chrono::steady_clock::time_point last_;
};

// One bucket per host, shared by every tool using the limiter.
class HostRateLimiter {
 public:
  explicit HostRateLimiter(double default_rate_per_s = 3.0, double burst = 3.0, Clock clock = steady_clock_fn());
  void set_rate(const std::string& host, double rate_per_s, double burst);
  std::chrono::milliseconds reserve(const std::string& host);

 private:
  std::mutex mu_;
  double default_rate_;
  double default_burst_;
  Clock clock_;
  std::map<std::string, TokenBucket> buckets_;
};

struct ServiceOptions {
  int max_retries = 3;
  std::chrono::milliseconds default_retry_after{1000};
};

// Rate-limited request helper. 429 and 503 are retried, honoring Retry-After.
class ServiceClient {
 public:
  ServiceClient(std::shared_ptr<WebTransport> transport, std::shared_ptr<HostRateLimiter> limiter,
                Sleeper sleeper = thread_sleeper(), ServiceOptions options = {});

  // Returns the final response, whatever its status, unless retries run out
  // (RateLimited or ServiceUnavailable).
  WebResponse request(const WebRequest& req);
  // GET expecting 2xx. 404 maps to NotFound, other failures to ServiceUnavailable.
  std::string get(const std::string& url);
  Json get_json(const std::string& url);

  std::vector<std::string> retry_log() const;

 private:
  std::shared_ptr<WebTransport> transport_;
  std::shared_ptr<HostRateLimiter> limiter_;
  Sleeper sleeper_;
  ServiceOptions options_;
  mutable std::mutex log_mu_;
  std::vector<std::string> log_;
};

}  // namespace txbench::tools
