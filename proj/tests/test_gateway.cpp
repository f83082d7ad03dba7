#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "spre/errors.hpp"
#include "spre/gateway.hpp"
#include "spre/http_backend.hpp"
#include "spre/mock_backend.hpp"
#include "spre/rng.hpp"
#include "test_helpers.hpp"

using namespace spre;

namespace {

ChatRequest synonyms_request() {
  return ChatRequest::user(
      "For a giving relation type: location, your objective is to create 10 synonyms about this "
      "relation.",
      1.2, Stage::Synonyms);
}

}  // namespace

TEST_CASE("mock backend returns identical text on repeated calls") {
  MockBackend mock({.seed = 42});
  ChatRequest request = synonyms_request();
  RawChat first = mock.chat_once(request);
  RawChat second = mock.chat_once(request);
  CHECK(first.text == second.text);

  MockBackend again({.seed = 42});
  CHECK(again.chat_once(request).text == first.text);

  MockBackend other({.seed = 43});
  CHECK(other.chat_once(request).text != first.text);
}

TEST_CASE("mock embeddings are deterministic and finite") {
  MockBackend mock({.seed = 42, .embed_dim = 16});
  auto v1 = mock.embed_text("abc");
  auto v2 = mock.embed_text("abc");
  auto v3 = mock.embed_text("abd");
  CHECK(v1 == v2);
  CHECK(v1 != v3);
  CHECK(v1.size() == 16);
  for (float x : v1) {
    CHECK(std::isfinite(x));
  }
}

TEST_CASE("mock token counts are whitespace word counts") {
  CHECK(word_count("one two  three\nfour") == 4);
  CHECK(word_count("") == 0);
  CHECK(word_count("   ") == 0);

  MockBackend mock;
  ChatRequest request = ChatRequest::user("count these five words now", 0.0, Stage::Inference);
  RawChat raw = mock.chat_once(request);
  CHECK(raw.usage.prompt_tokens == 5);
  CHECK(raw.usage.completion_tokens == word_count(raw.text));
}

TEST_CASE("gateway retries transient failures then succeeds") {
  int failures_left = 2;
  auto backend = std::make_shared<test::FnBackend>([&failures_left](const ChatRequest&) {
    if (failures_left > 0) {
      --failures_left;
      throw TransientBackendError("status 429");
    }
    return test::plain_reply("ok");
  });
  Gateway gateway(backend, test::fast_gateway_config());
  ChatRequest request = ChatRequest::user("hi", 0.0, Stage::Inference);
  request.max_retries = 3;
  CHECK(gateway.chat(request).text == "ok");
  CHECK(backend->chat_calls == 3);
}

TEST_CASE("gateway throws BackendUnavailable after retries exhaust") {
  auto backend = std::make_shared<test::FnBackend>(
      [](const ChatRequest&) -> RawChat { throw TransientBackendError("status 500"); });
  Gateway gateway(backend, test::fast_gateway_config());
  ChatRequest request = ChatRequest::user("hi", 0.0, Stage::Inference);
  request.max_retries = 3;
  CHECK_THROWS_AS(gateway.chat(request), BackendUnavailable);
  CHECK(backend->chat_calls == 4);  // initial attempt + 3 retries
}

TEST_CASE("gateway rejects empty requests and bad temperatures") {
  Gateway gateway(std::make_shared<MockBackend>(), test::fast_gateway_config());
  ChatRequest empty;
  CHECK_THROWS_AS(gateway.chat(empty), Error);
  ChatRequest hot = ChatRequest::user("x", 2.7, Stage::Inference);
  CHECK_THROWS_AS(gateway.chat(hot), Error);
}

TEST_CASE("embedding cache collapses repeated texts into one backend call") {
  auto backend = std::make_shared<test::FnBackend>(
      nullptr, [](const std::vector<std::string>& texts) {
        std::vector<std::vector<float>> out;
        for (const auto& text : texts) {
          out.push_back({static_cast<float>(text.size()), 1.0f});
        }
        return out;
      });
  Gateway gateway(backend, test::fast_gateway_config());

  auto vectors = gateway.embed({"a", "a"});
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0].values == vectors[1].values);
  CHECK(backend->embed_calls == 1);

  gateway.embed({"a", "b", "a", "b"});
  CHECK(backend->embed_calls == 2);  // only "b" was new

  CHECK_THROWS_AS(gateway.embed({}), Error);
}

TEST_CASE("embedding cache property: backend calls equal distinct new texts") {
  int served_texts = 0;
  auto backend = std::make_shared<test::FnBackend>(
      nullptr, [&served_texts](const std::vector<std::string>& texts) {
        std::vector<std::vector<float>> out;
        for (const auto& text : texts) {
          ++served_texts;
          out.push_back({static_cast<float>(text.size()), 2.0f});
        }
        return out;
      });
  Gateway gateway(backend, test::fast_gateway_config());
  rng::SmallRng gen(11);
  std::set<std::string> distinct;
  for (int round = 0; round < 20; ++round) {
    std::vector<std::string> batch;
    for (int i = 0; i < 8; ++i) {
      std::string text = "t" + std::to_string(gen.next_below(12));
      distinct.insert(text);
      batch.push_back(std::move(text));
    }
    gateway.embed(batch);
  }
  CHECK(served_texts == static_cast<int>(distinct.size()));
}

TEST_CASE("embed rejects non-finite vector values") {
  auto backend = std::make_shared<test::FnBackend>(
      nullptr, [](const std::vector<std::string>& texts) {
        std::vector<std::vector<float>> out;
        for (std::size_t i = 0; i < texts.size(); ++i) {
          out.push_back({1.0f, std::numeric_limits<float>::quiet_NaN()});
        }
        return out;
      });
  Gateway gateway(backend, test::fast_gateway_config());
  CHECK_THROWS_AS(gateway.embed({"x"}), MalformedResponse);
}

TEST_CASE("embed rejects inconsistent backend dimensions") {
  auto backend = std::make_shared<test::FnBackend>(
      nullptr, [](const std::vector<std::string>& texts) {
        std::vector<std::vector<float>> out;
        for (std::size_t i = 0; i < texts.size(); ++i) {
          out.push_back(std::vector<float>(i + 1, 0.5f));
        }
        return out;
      });
  Gateway gateway(backend, test::fast_gateway_config());
  CHECK_THROWS_AS(gateway.embed({"a", "b"}), DimensionMismatch);
}

TEST_CASE("meter aggregates per stage and recomputes cost from totals") {
  Gateway gateway(std::make_shared<MockBackend>(), test::fast_gateway_config());
  MeterSummary empty = gateway.meter_summary();
  CHECK(empty.stages.empty());
  CHECK(empty.cost_usd == 0.0);

  // Two stages with (10k, 20k) and (5k, 5k) tokens at prices (0.001, 0.002):
  // costs $0.050 and $0.015, total $0.065.
  gateway.meter().record(Stage::Generation, 10000, 20000, gateway.config().pricing);
  gateway.meter().record(Stage::Rephrase, 5000, 5000, gateway.config().pricing);
  MeterSummary summary = gateway.meter_summary();
  REQUIRE(summary.stages.size() == 2);
  CHECK(summary.stages[0].stage == Stage::Generation);
  CHECK(summary.stages[0].cost_usd == doctest::Approx(0.050).epsilon(1e-12));
  CHECK(summary.stages[1].cost_usd == doctest::Approx(0.015).epsilon(1e-12));
  CHECK(summary.cost_usd == doctest::Approx(0.065).epsilon(1e-12));
}

TEST_CASE("cost linearity: meter total equals the sum of per-call costs") {
  Gateway gateway(std::make_shared<MockBackend>(), test::fast_gateway_config());
  rng::SmallRng gen(3);
  double per_call_sum = 0.0;
  for (int i = 0; i < 200; ++i) {
    Stage stage = static_cast<Stage>(gen.next_below(5));
    long long prompt = static_cast<long long>(gen.next_below(4000));
    long long completion = static_cast<long long>(gen.next_below(4000));
    per_call_sum += gateway.meter().record(stage, prompt, completion,
                                           gateway.config().pricing).cost_usd;
  }
  CHECK(std::abs(gateway.meter_summary().cost_usd - per_call_sum) < 1e-9);
}

TEST_CASE("meter is consistent under concurrent recording") {
  Gateway gateway(std::make_shared<MockBackend>(), test::fast_gateway_config());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&gateway] {
      for (int i = 0; i < 1000; ++i) {
        gateway.meter().record(Stage::Inference, 3, 2, gateway.config().pricing);
      }
    });
  }
  for (auto& thread : threads) {
    thread.join();
  }
  MeterSummary summary = gateway.meter_summary();
  CHECK(summary.prompt_tokens == 12000);
  CHECK(summary.completion_tokens == 8000);
}

TEST_CASE("http backend: 429 twice then 200 succeeds after 2 retries") {
  httplib::Server server;
  int hits = 0;
  server.Post("/v1/chat/completions", [&hits](const httplib::Request&, httplib::Response& res) {
    ++hits;
    if (hits <= 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"fine"}}],)"
                    R"("usage":{"prompt_tokens":7,"completion_tokens":2}})",
                    "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.chat_path = "/v1/chat/completions";
  config.api_key_env = "SPRE_TEST_KEY_UNSET";
  Gateway gateway(std::make_shared<HttpBackend>(config), test::fast_gateway_config());

  ChatRequest request = ChatRequest::user("ping", 0.0, Stage::Inference);
  request.max_retries = 3;
  ChatResponse response = gateway.chat(request);
  CHECK(response.text == "fine");
  CHECK(response.usage.prompt_tokens == 7);
  CHECK(response.usage.completion_tokens == 2);
  CHECK(hits == 3);

  server.stop();
  server_thread.join();
}

TEST_CASE("http backend: persistent 500s exhaust retries") {
  httplib::Server server;
  int hits = 0;
  server.Post("/v1/chat/completions", [&hits](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.api_key_env = "SPRE_TEST_KEY_UNSET";
  Gateway gateway(std::make_shared<HttpBackend>(config), test::fast_gateway_config());

  ChatRequest request = ChatRequest::user("ping", 0.0, Stage::Inference);
  request.max_retries = 3;
  CHECK_THROWS_AS(gateway.chat(request), BackendUnavailable);
  CHECK(hits == 4);

  server.stop();
  server_thread.join();
}

TEST_CASE("http backend: a 200 without a completion is malformed") {
  httplib::Server server;
  server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[]})", "application/json");
  });
  server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"data":[{"index":0,"embedding":[0.25,0.5]}],"usage":{"prompt_tokens":3}})",
                    "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.api_key_env = "SPRE_TEST_KEY_UNSET";
  Gateway gateway(std::make_shared<HttpBackend>(config), test::fast_gateway_config());

  CHECK_THROWS_AS(gateway.chat(ChatRequest::user("x", 0.0, Stage::Inference)), MalformedResponse);

  auto vectors = gateway.embed({"hello"});
  REQUIRE(vectors.size() == 1);
  CHECK(vectors[0].values == std::vector<float>{0.25f, 0.5f});

  server.stop();
  server_thread.join();
}
