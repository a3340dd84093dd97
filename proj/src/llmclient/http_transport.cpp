#include <httplib.h>

#include <regex>

#include "txbench/llmclient/client.hpp"

namespace txbench::llm {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("bad endpoint URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/generate"};
}

}  // namespace

std::string HttpTransport::send(const EndpointConfig& cfg, const std::string& prompt) {
  const ParsedUrl url = parse_url(cfg.base_url);
  httplib::Client cli(url.scheme_host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!cfg.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + cfg.bearer_token);
  auto res = cli.Post(url.path, headers, request_body(cfg, prompt).dump(), "application/json");
  if (!res) {
    const httplib::Error err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) throw Timeout();
    throw TransportFailure("transport failure: " + httplib::to_string(err));
  }
  if (res->status != 200) throw EndpointError(res->status, res->body.substr(0, 200));
  try {
    return Json::parse(res->body).at("text").get<std::string>();
  } catch (const Json::exception& e) {
    throw EndpointError(res->status, std::string("malformed reply body: ") + e.what());
  }
}

}  // namespace txbench::llm
