#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "posaudit/client.hpp"
#include "posaudit/errors.hpp"

using namespace posaudit;
namespace fs = std::filesystem;

namespace {

std::string chat_body(const std::string& content) {
  return nlohmann::json{
      {"choices",
       {{{"message", {{"role", "assistant"}, {"content", content}}},
         {"finish_reason", "stop"}}}}}
      .dump();
}

EndpointConfig http_config() {
  EndpointConfig cfg;
  cfg.base_url = "http://test.invalid/v1";
  cfg.model_name = "test-model";
  cfg.retry.max_attempts = 3;
  cfg.retry.backoff_initial_ms = 250;
  return cfg;
}

Query query(const std::string& key) {
  Query q;
  q.prompt_text = "pick one";
  q.temperature = 1.0;
  q.trial_key = key;
  return q;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("posaudit-test-" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RandomUtilityConfig sim_config() {
  RandomUtilityConfig cfg;
  cfg.utilities = {{"a", 5.0}, {"b", 5.1}};
  cfg.position_boosts = {0.2, 0.0};
  return cfg;
}

}  // namespace

TEST_CASE("simulator endpoint answers with a presented label, deterministically") {
  EndpointConfig cfg;
  cfg.base_url = "sim:";
  ProviderClient client(cfg, sim_config(), 42);

  auto q = query("k1");
  q.sim_option_ids = {"a", "b"};
  q.sim_labels = {"Alpha", "Bravo"};
  const auto c1 = client.dispatch(q);
  CHECK((c1.text == "Alpha" || c1.text == "Bravo"));
  CHECK(client.dispatch(q).text == c1.text);
  CHECK(client.network_calls() == 0);

  // Different trial keys draw independent noise at T > 0.
  bool saw_different = false;
  for (int i = 0; i < 50 && !saw_different; ++i) {
    auto qi = q;
    qi.trial_key = "k" + std::to_string(i);
    if (client.dispatch(qi).text != c1.text) saw_different = true;
  }
  CHECK(saw_different);
}

TEST_CASE("simulator endpoint requires option context") {
  EndpointConfig cfg;
  cfg.base_url = "sim:";
  ProviderClient client(cfg, sim_config(), 42);
  CHECK_THROWS_AS(client.dispatch(query("k")), ValidationError);
}

TEST_CASE("http dispatch parses a chat completion") {
  ProviderClient client(http_config());
  client.set_transport([](const EndpointConfig&, const ChatRequest& req) -> ChatResponse {
    CHECK(req.model == "test-model");
    return {200, chat_body("Bravo")};
  });
  const auto c = client.dispatch(query("k"));
  CHECK(c.text == "Bravo");
  CHECK(c.attempt_count == 1);
  CHECK_FALSE(c.from_cache);
}

TEST_CASE("retry with exponential backoff on 429 and 5xx") {
  ProviderClient client(http_config());
  std::atomic<int> calls{0};
  client.set_transport([&](const EndpointConfig&, const ChatRequest&) -> ChatResponse {
    const int n = ++calls;
    if (n == 1) return {429, "slow down"};
    if (n == 2) return {503, "unavailable"};
    return {200, chat_body("Alpha")};
  });
  std::vector<int> sleeps;
  client.set_sleep_hook([&](int ms) { sleeps.push_back(ms); });

  const auto c = client.dispatch(query("k"));
  CHECK(c.text == "Alpha");
  CHECK(c.attempt_count == 3);
  CHECK(sleeps == std::vector<int>{250, 500});
}

TEST_CASE("non-retryable status fails immediately") {
  ProviderClient client(http_config());
  std::atomic<int> calls{0};
  client.set_transport([&](const EndpointConfig&, const ChatRequest&) -> ChatResponse {
    ++calls;
    return {400, "bad request"};
  });
  CHECK_THROWS_AS(client.dispatch(query("k")), ProviderError);
  CHECK(calls == 1);
}

TEST_CASE("attempt exhaustion raises a transport error") {
  auto cfg = http_config();
  cfg.retry.max_attempts = 2;
  ProviderClient client(cfg);
  client.set_sleep_hook([](int) {});
  client.set_transport(
      [](const EndpointConfig&, const ChatRequest&) -> ChatResponse { return {500, "boom"}; });
  CHECK_THROWS_AS(client.dispatch(query("k")), TransportError);
}

TEST_CASE("file cache: hit returns the stored completion without a network call") {
  TempDir dir("cache");
  auto cfg = http_config();
  cfg.cache_dir = dir.path.string();
  ProviderClient client(cfg);
  client.set_transport([](const EndpointConfig&, const ChatRequest&) -> ChatResponse {
    return {200, chat_body("Alpha")};
  });

  const auto first = client.dispatch(query("k"));
  CHECK_FALSE(first.from_cache);
  CHECK(client.network_calls() == 1);

  const auto second = client.dispatch(query("k"));
  CHECK(second.from_cache);
  CHECK(second.text == "Alpha");
  CHECK(client.network_calls() == 1);

  // A different trial key is a distinct cache entry (repetitions at T > 0
  // stay independent samples).
  client.dispatch(query("k2"));
  CHECK(client.network_calls() == 2);
}

TEST_CASE("cache key depends on model, prompt, temperature, and trial key") {
  const auto cfg = http_config();
  const auto base = cache_key_digest(cfg, query("k"));
  auto q2 = query("k");
  q2.temperature = 0.0;
  CHECK(cache_key_digest(cfg, q2) != base);
  auto q3 = query("k");
  q3.prompt_text = "different";
  CHECK(cache_key_digest(cfg, q3) != base);
  auto cfg2 = cfg;
  cfg2.model_name = "other";
  CHECK(cache_key_digest(cfg2, query("k")) != base);
  CHECK(cache_key_digest(cfg, query("k")) == base);
}

TEST_CASE("batch dispatch: bounded concurrency, order-aligned, failures isolated") {
  auto cfg = http_config();
  cfg.max_concurrency = 4;
  cfg.retry.max_attempts = 1;
  ProviderClient client(cfg);
  client.set_transport([](const EndpointConfig&, const ChatRequest& req) -> ChatResponse {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    if (req.prompt.find("poison") != std::string::npos) return {400, "bad"};
    return {200, chat_body(req.prompt)};
  });

  std::vector<Query> queries;
  for (int i = 0; i < 32; ++i) {
    auto q = query("k" + std::to_string(i));
    q.prompt_text = i == 13 ? "poison" : "q" + std::to_string(i);
    queries.push_back(std::move(q));
  }
  const auto results = client.batch_dispatch(queries);
  REQUIRE(results.size() == queries.size());
  CHECK(client.peak_in_flight() <= 4);
  CHECK(client.peak_in_flight() >= 2);
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i == 13) {
      CHECK_FALSE(results[i].ok);
      CHECK(!results[i].error.empty());
    } else {
      CHECK(results[i].ok);
      CHECK(results[i].text == "q" + std::to_string(i));
    }
  }
}

TEST_CASE("rate limiter paces sequential dispatches") {
  auto cfg = http_config();
  cfg.rate_limit_rps = 1.0;
  ProviderClient client(cfg);
  client.set_transport([](const EndpointConfig&, const ChatRequest&) -> ChatResponse {
    return {200, chat_body("x")};
  });
  int sleeps = 0;
  client.set_sleep_hook([&](int) { ++sleeps; });
  client.dispatch(query("k1"));
  client.dispatch(query("k2"));
  client.dispatch(query("k3"));
  CHECK(sleeps >= 2);  // the bucket starts with one token
}

TEST_CASE("default transport speaks chat-completions over HTTP") {
  httplib::Server server;
  std::string seen_auth, seen_body;
  server.Post("/v9/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_auth = req.get_header_value("Authorization");
                seen_body = req.body;
                res.set_content(chat_body("Pale Turquoise"), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("POSAUDIT_TEST_TOKEN", "sekrit", 1);
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v9";
  cfg.model_name = "test-model";
  cfg.auth_env = "POSAUDIT_TEST_TOKEN";
  ProviderClient client(cfg);

  auto q = query("k");
  q.max_tokens = 8;
  const auto c = client.dispatch(q);
  CHECK(c.text == "Pale Turquoise");
  CHECK(seen_auth == "Bearer sekrit");
  const auto payload = nlohmann::json::parse(seen_body);
  CHECK(payload.at("model") == "test-model");
  CHECK(payload.at("temperature") == 1.0);
  CHECK(payload.at("max_tokens") == 8);
  CHECK(payload.at("messages").at(0).at("content") == "pick one");

  server.stop();
  serve.join();
}

TEST_CASE("endpoint config validation") {
  EndpointConfig cfg;
  cfg.base_url = "sim:";
  cfg.max_concurrency = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(EndpointConfig{.base_url = "sim:fragile"}.is_simulator());
  CHECK_FALSE(EndpointConfig{.base_url = "https://x"}.is_simulator());
}
