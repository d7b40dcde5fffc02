#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "posaudit/rum.hpp"

namespace posaudit {

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_initial_ms = 250;
  double backoff_factor = 2.0;
};

struct EndpointConfig {
  std::string base_url;   // "sim:" for the built-in simulator, else http(s)://...
  std::string model_name;
  std::string auth_env;   // name of the environment variable holding the bearer token
  int max_concurrency = 8;
  RetryPolicy retry;
  double timeout_s = 30.0;
  std::string cache_dir;  // empty disables caching
  int max_tokens = 16;
  double rate_limit_rps = 0.0;  // 0 = unlimited

  bool is_simulator() const { return base_url.rfind("sim:", 0) == 0; }
  void validate() const;
};

struct Query {
  std::string prompt_text;
  double temperature = 0.0;
  int max_tokens = 16;
  std::string trial_key;  // stable hash of (scenario, cell, repetition)
  // Simulator context: presented option ids and their answer labels, in
  // presentation order. Ignored by HTTP endpoints.
  std::vector<std::string> sim_option_ids;
  std::vector<std::string> sim_labels;
};

struct RawCompletion {
  std::string text;
  std::string finish_reason;
  double latency_ms = 0.0;
  bool from_cache = false;
  int attempt_count = 0;
  // batch_dispatch outcome; dispatch throws instead.
  bool ok = true;
  std::string error;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 16;
};

struct ChatResponse {
  int status = 0;  // 0 = transport-level failure; error text in body
  std::string body;
};

/// Pluggable wire layer; the default posts to {base_url}/chat/completions.
using Transport = std::function<ChatResponse(const EndpointConfig&, const ChatRequest&)>;

Transport default_http_transport();

/// Cache key: (model_name, prompt_text, temperature, trial_key). Distinct
/// repetition indices at T > 0 stay distinct entries, so repetitions remain
/// independent samples.
std::string cache_key_digest(const EndpointConfig& cfg, const Query& q);

class ProviderClient {
 public:
  explicit ProviderClient(EndpointConfig cfg);
  ProviderClient(EndpointConfig cfg, RandomUtilityConfig sim_cfg, std::uint64_t sim_root_seed);

  void set_transport(Transport t) { transport_ = std::move(t); }
  void set_sleep_hook(std::function<void(int)> f) { sleep_ms_ = std::move(f); }

  /// Throws TransportError / ProviderError / TimeoutError on failure.
  RawCompletion dispatch(const Query& q);

  /// Order-aligned with the input; per-query failures are reported in the
  /// result (ok = false), never aborting the batch. In-flight requests are
  /// bounded by max_concurrency.
  std::vector<RawCompletion> batch_dispatch(const std::vector<Query>& queries);

  /// Test hooks.
  int peak_in_flight() const { return peak_in_flight_.load(); }
  std::int64_t network_calls() const { return network_calls_.load(); }

  const EndpointConfig& config() const { return cfg_; }

 private:
  RawCompletion dispatch_simulated(const Query& q);
  RawCompletion dispatch_http(const Query& q);
  std::optional<RawCompletion> cache_lookup(const Query& q) const;
  void cache_store(const Query& q, const RawCompletion& c) const;
  void rate_limit_acquire();

  EndpointConfig cfg_;
  std::optional<RandomUtilityConfig> sim_cfg_;
  std::uint64_t sim_root_seed_ = 0;
  Transport transport_;
  std::function<void(int)> sleep_ms_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
  std::atomic<std::int64_t> network_calls_{0};
  std::mutex rate_mutex_;
  double rate_tokens_ = 0.0;
  double rate_last_refill_ = 0.0;
};

}  // namespace posaudit
