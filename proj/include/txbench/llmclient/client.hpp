#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "txbench/common/json.hpp"

namespace txbench::llm {

class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool retryable() const { return false; }
  virtual std::string kind() const { return "llm_error"; }
};

class Timeout : public LlmError {
 public:
  Timeout() : LlmError("request timed out") {}
  bool retryable() const override { return true; }
  std::string kind() const override { return "timeout"; }
};

class EndpointError : public LlmError {
 public:
  EndpointError(int status, const std::string& detail)
      : LlmError("endpoint returned HTTP " + std::to_string(status) + (detail.empty() ? "" : ": " + detail)),
        status_(status) {}
  int status() const { return status_; }
  bool retryable() const override { return status_ == 429 || status_ >= 500; }
  std::string kind() const override { return "endpoint_error"; }

 private:
  int status_;
};

// Connection refused, reset, or similar transport-level failure.
class TransportFailure : public LlmError {
 public:
  using LlmError::LlmError;
  bool retryable() const override { return true; }
  std::string kind() const override { return "transport_failure"; }
};

class RetriesExhausted : public LlmError {
 public:
  RetriesExhausted(int attempts, const std::string& last)
      : LlmError("gave up after " + std::to_string(attempts) + " attempts: " + last), attempts_(attempts) {}
  int attempts() const { return attempts_; }
  std::string kind() const override { return "retries_exhausted"; }

 private:
  int attempts_;
};

class CassetteMiss : public LlmError {
 public:
  explicit CassetteMiss(std::string hash) : LlmError("no cassette entry for prompt " + hash), hash_(std::move(hash)) {}
  const std::string& prompt_hash() const { return hash_; }
  std::string kind() const override { return "cassette_miss"; }

 private:
  std::string hash_;
};

class ConfigError : public LlmError {
 public:
  using LlmError::LlmError;
  std::string kind() const override { return "config_error"; }
};

struct DecodeParams {
  double temperature = 0.0;
  int max_tokens = 512;
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/generate";
  std::string model_id = "txgemma-27b-predict";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  int max_in_flight = 4;
  DecodeParams decode;
  std::chrono::milliseconds backoff_base{200};
  std::string bearer_token;

  void validate() const;
  Json to_json() const;
  static EndpointConfig from_json(const Json& j);
};

// Request body for the HTTP endpoint.
Json request_body(const EndpointConfig& cfg, const std::string& prompt);

class Transport {
 public:
  virtual ~Transport() = default;
  // One attempt. Throws an LlmError on failure.
  virtual std::string send(const EndpointConfig& cfg, const std::string& prompt) = 0;
};

class FixedMockTransport : public Transport {
 public:
  explicit FixedMockTransport(std::string reply, std::chrono::microseconds latency = {})
      : reply_(std::move(reply)), latency_(latency) {}
  std::string send(const EndpointConfig&, const std::string&) override;

 private:
  std::string reply_;
  std::chrono::microseconds latency_;
};

// Test and fault-injection hook: the function decides each reply.
class FunctionTransport : public Transport {
 public:
  using Fn = std::function<std::string(const EndpointConfig&, const std::string&)>;
  explicit FunctionTransport(Fn fn) : fn_(std::move(fn)) {}
  std::string send(const EndpointConfig& cfg, const std::string& prompt) override { return fn_(cfg, prompt); }

 private:
  Fn fn_;
};

// Replies in order, one per call; throws CassetteMiss once exhausted. Used to
// script a conversation before recording it.
class SequenceTransport : public Transport {
 public:
  explicit SequenceTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string send(const EndpointConfig& cfg, const std::string& prompt) override;

 private:
  std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

struct CassetteEntry {
  std::string prompt_sha256;
  std::string reply;
};

std::vector<CassetteEntry> read_cassette(const std::filesystem::path& path);

// Serves replies from a JSON-lines cassette; never touches the network.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& cassette);
  explicit ReplayTransport(const std::vector<CassetteEntry>& entries);
  std::string send(const EndpointConfig& cfg, const std::string& prompt) override;
  std::size_t size() const { return replies_.size(); }

 private:
  std::unordered_map<std::string, std::string> replies_;
};

// Appends every successful (prompt hash, reply) pair to a cassette file.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path cassette);
  std::string send(const EndpointConfig& cfg, const std::string& prompt) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path path_;
  std::mutex mu_;
};

// POSTs request_body() to base_url and reads {"text": ...}.
class HttpTransport : public Transport {
 public:
  std::string send(const EndpointConfig& cfg, const std::string& prompt) override;
};

enum class TransportKind { kHttp, kReplay, kFixedMock };

struct TransportSpec {
  TransportKind kind = TransportKind::kHttp;
  std::filesystem::path cassette_path;
  std::string fixed_reply = "(B)";
  // When set, successful replies are appended here.
  std::filesystem::path record_path;
};

TransportKind parse_transport_kind(std::string_view s);
std::shared_ptr<Transport> make_transport(const TransportSpec& spec);

class Semaphore {
 public:
  explicit Semaphore(int permits) : permits_(permits) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int permits_;
};

struct GenerateResult {
  std::optional<std::string> text;
  std::string error_kind;
  std::string error;
  int attempts = 0;
  bool ok() const { return text.has_value(); }
};

class Client {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Client(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  // Retries retryable failures up to max_retries with exponential backoff.
  std::string generate(const std::string& prompt);
  // Results in input order. At most max_in_flight transport calls run at once
  // across all callers of this client.
  std::vector<GenerateResult> batch_generate(const std::vector<std::string>& prompts);

  const EndpointConfig& config() const { return cfg_; }
  std::uint64_t transport_calls() const { return calls_.load(); }

 private:
  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  Semaphore in_flight_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace txbench::llm
