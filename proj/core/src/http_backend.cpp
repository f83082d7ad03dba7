#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "spre/http_backend.hpp"

#include <cstdlib>
#include <iostream>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"

namespace spre {
namespace {

using json = nlohmann::json;

bool is_transient_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

struct HttpBackend::Impl {
  explicit Impl(HttpBackendConfig cfg) : config(std::move(cfg)), client(config.base_url) {
    client.set_connection_timeout(config.timeout_seconds);
    client.set_read_timeout(config.timeout_seconds);
    client.set_write_timeout(config.timeout_seconds);
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
      api_key = key;
    } else {
      std::cerr << "[spre] warning: environment variable " << config.api_key_env
                << " is not set; sending unauthenticated requests\n";
    }
  }

  json post(const std::string& path, const json& body) {
    httplib::Headers headers;
    if (!api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key);
    }
    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result) {
      throw TransientBackendError("http transport error: " + httplib::to_string(result.error()));
    }
    if (is_transient_status(result->status)) {
      throw TransientBackendError("http status " + std::to_string(result->status));
    }
    if (result->status >= 400) {
      throw Error("http status " + std::to_string(result->status) + ": " + result->body);
    }
    try {
      return json::parse(result->body);
    } catch (const json::exception& ex) {
      throw MalformedResponse(std::string("response is not JSON: ") + ex.what());
    }
  }

  HttpBackendConfig config;
  httplib::Client client;
  std::string api_key;
};

HttpBackend::HttpBackend(HttpBackendConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::name() const {
  return "http:" + impl_->config.base_url + ":" + impl_->config.chat_model;
}

RawChat HttpBackend::chat_once(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& msg : request.messages) {
    messages.push_back({{"role", msg.role == ChatMessage::Role::System ? "system" : "user"},
                        {"content", msg.text}});
  }
  json body{{"model", impl_->config.chat_model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature}};
  json payload = impl_->post(impl_->config.chat_path, body);

  RawChat raw;
  try {
    raw.text = payload.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw MalformedResponse("chat response lacks choices[0].message.content");
  }
  if (payload.contains("usage")) {
    raw.usage.prompt_tokens = payload["usage"].value("prompt_tokens", 0LL);
    raw.usage.completion_tokens = payload["usage"].value("completion_tokens", 0LL);
  }
  return raw;
}

std::vector<std::vector<float>> HttpBackend::embed_once(const std::vector<std::string>& texts,
                                                        BackendUsage& usage) {
  json body{{"model", impl_->config.embed_model}, {"input", texts}};
  json payload = impl_->post(impl_->config.embed_path, body);

  if (!payload.contains("data") || !payload["data"].is_array() ||
      payload["data"].size() != texts.size()) {
    throw MalformedResponse("embedding response lacks a data entry per input");
  }
  std::vector<std::vector<float>> out(texts.size());
  for (const auto& item : payload["data"]) {
    std::size_t index = item.value("index", out.size());
    if (index >= out.size() || !item.contains("embedding")) {
      throw MalformedResponse("embedding entry has a bad index or no embedding");
    }
    auto& vec = out[index];
    for (const auto& value : item["embedding"]) {
      vec.push_back(value.get<float>());
    }
  }
  if (payload.contains("usage")) {
    usage.prompt_tokens += payload["usage"].value("prompt_tokens", 0LL);
  }
  return out;
}

}  // namespace spre
