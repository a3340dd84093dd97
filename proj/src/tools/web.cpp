#include "txbench/tools/web.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <thread>

#include "txbench/common/hashing.hpp"
#include "txbench/common/text.hpp"

namespace txbench::tools {

std::string request_key(const WebRequest& req) {
  std::string key = req.method + " " + req.url;
  if (!req.body.empty()) key += " sha256:" + sha256_hex(req.body);
  return key;
}

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

std::string host_of(std::string_view url) {
  static const std::regex re(R"(^[a-zA-Z]+://([^/:?#]+))");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(url.begin(), url.end(), m, re)) return text::to_lower(m[1].str());
  return {};
}

Json WebCassetteEntry::to_json() const {
  Json j{{"key", key}, {"status", response.status}, {"body", response.body}};
  if (response.retry_after_s) j["retry_after_s"] = *response.retry_after_s;
  return j;
}

WebCassetteEntry WebCassetteEntry::from_json(const Json& j) {
  WebCassetteEntry e;
  e.key = j.at("key").get<std::string>();
  e.response.status = j.value("status", 200);
  e.response.body = j.value("body", std::string{});
  if (j.contains("retry_after_s")) e.response.retry_after_s = j.at("retry_after_s").get<int>();
  return e;
}

std::vector<WebCassetteEntry> read_web_cassette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ToolError("cannot open cassette " + path.string());
  std::vector<WebCassetteEntry> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(WebCassetteEntry::from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ToolError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

CassetteWebTransport::CassetteWebTransport(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(path))
      if (entry.is_regular_file() && entry.path().filename() == "http.jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      for (const auto& e : read_web_cassette(f)) add(e);
  } else {
    for (const auto& e : read_web_cassette(path)) add(e);
  }
}

CassetteWebTransport::CassetteWebTransport(const std::vector<WebCassetteEntry>& entries) {
  for (const auto& e : entries) add(e);
}

void CassetteWebTransport::add(const WebCassetteEntry& e) {
  responses_[e.key].push_back(e.response);
  ++count_;
}

WebResponse CassetteWebTransport::fetch(const WebRequest& req) {
  const std::string key = request_key(req);
  std::lock_guard lock(mu_);
  auto it = responses_.find(key);
  if (it == responses_.end()) throw CassetteMiss(key);
  std::size_t& n = served_[key];
  const WebResponse& r = it->second[std::min(n, it->second.size() - 1)];
  ++n;
  return r;
}

RecordingWebTransport::RecordingWebTransport(std::shared_ptr<WebTransport> inner, std::filesystem::path cassette)
    : inner_(std::move(inner)), path_(std::move(cassette)) {}

WebResponse RecordingWebTransport::fetch(const WebRequest& req) {
  WebResponse r = inner_->fetch(req);
  const std::string line = WebCassetteEntry{request_key(req), r}.to_json().dump() + "\n";
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  out << line;
  return r;
}

WebResponse HttpWebTransport::fetch(const WebRequest& req) {
  static const std::regex re(R"(^(https?://[^/?#]+)([^#]*)$)");
  std::smatch m;
  if (!std::regex_match(req.url, m, re)) throw ToolError("bad URL '" + req.url + "'");
  httplib::Client cli(m[1].str());
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  cli.set_connection_timeout(secs.count(), 0);
  cli.set_read_timeout(secs.count(), 0);
  cli.set_follow_location(true);
  const std::string path = m[2].length() ? m[2].str() : "/";
  httplib::Headers headers{{"User-Agent", "txbench-tools/1.0"}};
  httplib::Result res = req.method == "POST"
                            ? cli.Post(path, headers, req.body,
                                       req.content_type.empty() ? "application/x-www-form-urlencoded"
                                                                : req.content_type.c_str())
                            : cli.Get(path, headers);
  if (!res) throw ServiceUnavailable(host_of(req.url) + ": " + httplib::to_string(res.error()));
  WebResponse out{res->status, res->body, std::nullopt};
  if (res->has_header("Retry-After")) {
    const std::string v = res->get_header_value("Retry-After");
    if (!v.empty() && std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); }))
      out.retry_after_s = std::stoi(v);
  }
  return out;
}

Clock steady_clock_fn() {
  return [] { return std::chrono::steady_clock::now(); };
}

Sleeper thread_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

TokenBucket::TokenBucket(double rate_per_s, double burst, Clock clock)
    : rate_(rate_per_s), burst_(burst), tokens_(burst), clock_(std::move(clock)), last_(clock_()) {
  if (!(rate_per_s > 0) || !(burst >= 1)) throw std::invalid_argument("token bucket needs rate > 0 and burst >= 1");
}

std::chrono::milliseconds TokenBucket::reserve() {
  const auto now = clock_();
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  last_ = now;
  tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
  tokens_ -= 1.0;
  if (tokens_ >= 0) return std::chrono::milliseconds(0);
  // Debt is paid off at `rate_` tokens per second.
  return std::chrono::milliseconds(static_cast<long>(std::ceil(-tokens_ / rate_ * 1000.0)));
}

HostRateLimiter::HostRateLimiter(double default_rate_per_s, double burst, Clock clock)
    : default_rate_(default_rate_per_s), default_burst_(burst), clock_(std::move(clock)) {}

void HostRateLimiter::set_rate(const std::string& host, double rate_per_s, double burst) {
  std::lock_guard lock(mu_);
  buckets_.insert_or_assign(host, TokenBucket(rate_per_s, burst, clock_));
}

std::chrono::milliseconds HostRateLimiter::reserve(const std::string& host) {
  std::lock_guard lock(mu_);
  auto it = buckets_.find(host);
  if (it == buckets_.end()) it = buckets_.emplace(host, TokenBucket(default_rate_, default_burst_, clock_)).first;
  return it->second.reserve();
}

ServiceClient::ServiceClient(std::shared_ptr<WebTransport> transport, std::shared_ptr<HostRateLimiter> limiter,
                             Sleeper sleeper, ServiceOptions options)
    : transport_(std::move(transport)),
      limiter_(std::move(limiter)),
      sleeper_(std::move(sleeper)),
      options_(options) {}

WebResponse ServiceClient::request(const WebRequest& req) {
  const std::string host = host_of(req.url);
  for (int attempt = 0;; ++attempt) {
    if (limiter_) {
      const auto wait = limiter_->reserve(host);
      if (wait.count() > 0) sleeper_(wait);
    }
    WebResponse r = transport_->fetch(req);
    if (r.status != 429 && r.status != 503) return r;
    const auto retry_after =
        r.retry_after_s ? std::chrono::milliseconds(*r.retry_after_s * 1000) : options_.default_retry_after;
    if (attempt >= options_.max_retries) {
      if (r.status == 429) throw RateLimited(host, retry_after);
      throw ServiceUnavailable(host + " returned HTTP 503");
    }
    {
      std::lock_guard lock(log_mu_);
      log_.push_back("retry " + std::to_string(attempt + 1) + " for " + host + " after HTTP " +
                     std::to_string(r.status) + ", waiting " + std::to_string(retry_after.count()) + " ms");
    }
    sleeper_(retry_after);
  }
}

std::string ServiceClient::get(const std::string& url) {
  WebResponse r = request({"GET", url, "", ""});
  if (r.status == 404) throw NotFound("not found: " + url);
  if (r.status < 200 || r.status >= 300)
    throw ServiceUnavailable(host_of(url) + " returned HTTP " + std::to_string(r.status));
  return r.body;
}

Json ServiceClient::get_json(const std::string& url) {
  const std::string body = get(url);
  try {
    return Json::parse(body);
  } catch (const Json::exception&) {
    throw ServiceUnavailable(host_of(url) + " returned a malformed JSON body");
  }
}

std::vector<std::string> ServiceClient::retry_log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

}  // namespace txbench::tools
