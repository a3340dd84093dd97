#include "txbench/llmclient/client.hpp"

#include <fstream>
#include <thread>

#include "txbench/common/hashing.hpp"
#include "txbench/common/text.hpp"

namespace txbench::llm {

void EndpointConfig::validate() const {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (decode.max_tokens < 1) throw ConfigError("max_tokens must be positive");
  if (backoff_base.count() < 0) throw ConfigError("backoff_base must be non-negative");
}

Json EndpointConfig::to_json() const {
  return Json{{"base_url", base_url},
              {"model_id", model_id},
              {"timeout_ms", timeout.count()},
              {"max_retries", max_retries},
              {"max_in_flight", max_in_flight},
              {"temperature", decode.temperature},
              {"max_tokens", decode.max_tokens},
              {"backoff_ms", backoff_base.count()}};
}

EndpointConfig EndpointConfig::from_json(const Json& j) {
  EndpointConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.model_id = j.value("model_id", c.model_id);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
  c.max_retries = j.value("max_retries", c.max_retries);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.decode.temperature = j.value("temperature", c.decode.temperature);
  c.decode.max_tokens = j.value("max_tokens", c.decode.max_tokens);
  c.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", c.backoff_base.count()));
  c.validate();
  return c;
}

Json request_body(const EndpointConfig& cfg, const std::string& prompt) {
  return Json{{"model", cfg.model_id},
              {"prompt", prompt},
              {"temperature", cfg.decode.temperature},
              {"max_tokens", cfg.decode.max_tokens}};
}

std::string FixedMockTransport::send(const EndpointConfig&, const std::string&) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return reply_;
}

std::vector<CassetteEntry> read_cassette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cassette " + path.string());
  std::vector<CassetteEntry> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      Json j = Json::parse(line);
      out.push_back({j.at("prompt_sha256").get<std::string>(), j.at("reply").get<std::string>()});
    } catch (const Json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string SequenceTransport::send(const EndpointConfig&, const std::string& prompt) {
  std::lock_guard lock(mu_);
  if (next_ >= replies_.size()) throw CassetteMiss(sha256_hex(prompt));
  return replies_[next_++];
}

ReplayTransport::ReplayTransport(const std::filesystem::path& cassette) : ReplayTransport(read_cassette(cassette)) {}

ReplayTransport::ReplayTransport(const std::vector<CassetteEntry>& entries) {
  // Later entries win, so re-recorded cassettes can be appended to.
  for (const auto& e : entries) replies_[e.prompt_sha256] = e.reply;
}

std::string ReplayTransport::send(const EndpointConfig&, const std::string& prompt) {
  const std::string h = sha256_hex(prompt);
  auto it = replies_.find(h);
  if (it == replies_.end()) throw CassetteMiss(h);
  return it->second;
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path cassette)
    : inner_(std::move(inner)), path_(std::move(cassette)) {}

std::string RecordingTransport::send(const EndpointConfig& cfg, const std::string& prompt) {
  std::string reply = inner_->send(cfg, prompt);
  const std::string line = Json{{"prompt_sha256", sha256_hex(prompt)}, {"reply", reply}}.dump() + "\n";
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  out << line;
  return reply;
}

TransportKind parse_transport_kind(std::string_view s) {
  const std::string v = text::to_lower(s);
  if (v == "http") return TransportKind::kHttp;
  if (v == "replay") return TransportKind::kReplay;
  if (v == "fixed" || v == "fixed_mock" || v == "mock") return TransportKind::kFixedMock;
  throw ConfigError("unknown transport '" + std::string(s) + "'");
}

std::shared_ptr<Transport> make_transport(const TransportSpec& spec) {
  std::shared_ptr<Transport> t;
  switch (spec.kind) {
    case TransportKind::kHttp: t = std::make_shared<HttpTransport>(); break;
    case TransportKind::kReplay:
      if (spec.cassette_path.empty()) throw ConfigError("replay transport needs a cassette path");
      t = std::make_shared<ReplayTransport>(spec.cassette_path);
      break;
    case TransportKind::kFixedMock: t = std::make_shared<FixedMockTransport>(spec.fixed_reply); break;
  }
  if (!spec.record_path.empty()) t = std::make_shared<RecordingTransport>(t, spec.record_path);
  return t;
}

void Semaphore::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return permits_ > 0; });
  --permits_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mu_);
    ++permits_;
  }
  cv_.notify_one();
}

Client::Client(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)), in_flight_(cfg_.max_in_flight) {
  cfg_.validate();
  if (!transport_) throw ConfigError("client needs a transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string Client::generate(const std::string& prompt) {
  if (prompt.empty()) throw std::invalid_argument("prompt must be non-empty");
  std::string last;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(cfg_.backoff_base * (1LL << std::min(attempt - 1, 20)));
    in_flight_.acquire();
    ++calls_;
    try {
      std::string reply = transport_->send(cfg_, prompt);
      in_flight_.release();
      return reply;
    } catch (const LlmError& e) {
      in_flight_.release();
      if (!e.retryable()) throw;
      last = e.what();
    } catch (...) {
      in_flight_.release();
      throw;
    }
  }
  throw RetriesExhausted(cfg_.max_retries + 1, last);
}

std::vector<GenerateResult> Client::batch_generate(const std::vector<std::string>& prompts) {
  std::vector<GenerateResult> results(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      GenerateResult& r = results[i];
      try {
        r.text = generate(prompts[i]);
      } catch (const LlmError& e) {
        r.error_kind = e.kind();
        r.error = e.what();
      } catch (const std::exception& e) {
        r.error_kind = "error";
        r.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(prompts.size(), static_cast<std::size_t>(cfg_.max_in_flight));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  if (n_workers > 0) worker();
  for (auto& t : threads) t.join();
  return results;
}

}  // namespace txbench::llm
