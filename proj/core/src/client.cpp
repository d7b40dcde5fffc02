#include "posaudit/client.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "posaudit/errors.hpp"
#include "posaudit/hash.hpp"

namespace posaudit {

namespace fs = std::filesystem;
using nlohmann::json;

void EndpointConfig::validate() const {
  if (max_concurrency < 1) throw ValidationError("max_concurrency must be >= 1");
  if (timeout_s <= 0) throw ValidationError("timeout must be > 0");
  if (retry.max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
}

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // leading path prefix, no trailing slash
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("endpoint base_url must be sim: or an http(s) URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Transport default_http_transport() {
  return [](const EndpointConfig& cfg, const ChatRequest& req) -> ChatResponse {
    const auto parts = split_url(cfg.base_url);
    httplib::Client client(parts.origin);
    const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!cfg.auth_env.empty()) {
      if (const char* token = std::getenv(cfg.auth_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    json payload = {
        {"model", req.model},
        {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    auto res = client.Post(parts.path + "/chat/completions", headers, payload.dump(),
                           "application/json");
    if (!res) {
      std::ostringstream msg;
      msg << "transport failure: " << httplib::to_string(res.error());
      return {0, msg.str()};
    }
    return {res->status, res->body};
  };
}

std::string cache_key_digest(const EndpointConfig& cfg, const Query& q) {
  std::ostringstream key;
  char temp[32];
  std::snprintf(temp, sizeof(temp), "%.6g", q.temperature);
  key << cfg.model_name << '\x1f' << q.prompt_text << '\x1f' << temp << '\x1f'
      << q.trial_key;
  return to_hex(fnv1a64(key.str()));
}

ProviderClient::ProviderClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  transport_ = default_http_transport();
  sleep_ms_ = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
}

ProviderClient::ProviderClient(EndpointConfig cfg, RandomUtilityConfig sim_cfg,
                               std::uint64_t sim_root_seed)
    : ProviderClient(std::move(cfg)) {
  sim_cfg_ = std::move(sim_cfg);
  sim_root_seed_ = sim_root_seed;
}

std::optional<RawCompletion> ProviderClient::cache_lookup(const Query& q) const {
  if (cfg_.cache_dir.empty()) return std::nullopt;
  const fs::path path = fs::path(cfg_.cache_dir) / (cache_key_digest(cfg_, q) + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json doc;
  try {
    in >> doc;
  } catch (const json::exception&) {
    return std::nullopt;  // corrupt entry: treat as miss
  }
  RawCompletion c;
  c.text = doc.value("text", "");
  c.finish_reason = doc.value("finish_reason", "stop");
  c.from_cache = true;
  c.attempt_count = 0;
  return c;
}

void ProviderClient::cache_store(const Query& q, const RawCompletion& c) const {
  if (cfg_.cache_dir.empty()) return;
  fs::create_directories(cfg_.cache_dir);
  const fs::path path = fs::path(cfg_.cache_dir) / (cache_key_digest(cfg_, q) + ".json");
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << json{{"text", c.text}, {"finish_reason", c.finish_reason}}.dump();
  }
  fs::rename(tmp, path);
}

void ProviderClient::rate_limit_acquire() {
  if (cfg_.rate_limit_rps <= 0.0) return;
  std::lock_guard lock(rate_mutex_);
  const double now = now_ms();
  if (rate_last_refill_ == 0.0) {
    rate_last_refill_ = now;
    rate_tokens_ = 1.0;
  }
  rate_tokens_ = std::min(cfg_.rate_limit_rps,
                          rate_tokens_ + (now - rate_last_refill_) / 1000.0 * cfg_.rate_limit_rps);
  rate_last_refill_ = now;
  if (rate_tokens_ < 1.0) {
    const int wait = static_cast<int>((1.0 - rate_tokens_) / cfg_.rate_limit_rps * 1000.0) + 1;
    sleep_ms_(wait);
    rate_tokens_ = 1.0;
  }
  rate_tokens_ -= 1.0;
}

RawCompletion ProviderClient::dispatch_simulated(const Query& q) {
  if (!sim_cfg_)
    throw ValidationError("sim: endpoint requires a simulator configuration");
  if (q.sim_option_ids.empty() || q.sim_option_ids.size() != q.sim_labels.size())
    throw ValidationError("sim: query is missing aligned option ids/labels");
  Arrangement arr{q.sim_option_ids};
  const auto seed = derive_seed(sim_root_seed_, q.trial_key);
  const auto outcome = simulate_choice(*sim_cfg_, arr, q.temperature, seed);
  RawCompletion c;
  for (std::size_t i = 0; i < arr.option_ids.size(); ++i)
    if (arr.option_ids[i] == outcome.chosen_id) c.text = q.sim_labels[i];
  c.finish_reason = "stop";
  c.attempt_count = 1;
  return c;
}

RawCompletion ProviderClient::dispatch_http(const Query& q) {
  ChatRequest req{cfg_.model_name, q.prompt_text, q.temperature,
                  q.max_tokens > 0 ? q.max_tokens : cfg_.max_tokens};
  std::string last_error;
  int backoff = cfg_.retry.backoff_initial_ms;
  for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
    rate_limit_acquire();
    const double t0 = now_ms();
    network_calls_.fetch_add(1);
    const ChatResponse res = transport_(cfg_, req);
    const double latency = now_ms() - t0;

    if (res.status >= 200 && res.status < 300) {
      json doc;
      try {
        doc = json::parse(res.body);
      } catch (const json::exception& e) {
        throw ProviderError(res.status, std::string("unparseable response body: ") + e.what());
      }
      RawCompletion c;
      try {
        const auto& choice = doc.at("choices").at(0);
        c.text = choice.at("message").at("content").get<std::string>();
        c.finish_reason = choice.value("finish_reason", "stop");
      } catch (const json::exception& e) {
        throw ProviderError(res.status, std::string("malformed completion: ") + e.what());
      }
      c.latency_ms = latency;
      c.attempt_count = attempt;
      return c;
    }

    const bool retryable = res.status == 0 || res.status == 429 || res.status >= 500;
    std::ostringstream msg;
    if (res.status == 0)
      msg << res.body;
    else
      msg << "HTTP " << res.status << ": " << res.body;
    last_error = msg.str();
    if (!retryable) throw ProviderError(res.status, last_error);
    if (attempt < cfg_.retry.max_attempts) {
      sleep_ms_(backoff);
      backoff = static_cast<int>(backoff * cfg_.retry.backoff_factor);
    }
  }
  if (last_error.find("timeout") != std::string::npos)
    throw TimeoutError(last_error + " (after " + std::to_string(cfg_.retry.max_attempts) +
                       " attempts)");
  throw TransportError(last_error + " (after " + std::to_string(cfg_.retry.max_attempts) +
                       " attempts)");
}

RawCompletion ProviderClient::dispatch(const Query& q) {
  if (auto cached = cache_lookup(q)) return *cached;
  RawCompletion c = cfg_.is_simulator() ? dispatch_simulated(q) : dispatch_http(q);
  cache_store(q, c);
  return c;
}

std::vector<RawCompletion> ProviderClient::batch_dispatch(const std::vector<Query>& queries) {
  std::vector<RawCompletion> results(queries.size());
  if (queries.empty()) return results;

  const int workers =
      std::min<int>(cfg_.max_concurrency, static_cast<int>(queries.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queries.size()) break;
      const int inflight = in_flight_.fetch_add(1) + 1;
      int expected = peak_in_flight_.load();
      while (inflight > expected &&
             !peak_in_flight_.compare_exchange_weak(expected, inflight)) {
      }
      try {
        results[i] = dispatch(queries[i]);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].error = e.what();
      }
      in_flight_.fetch_sub(1);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace posaudit
