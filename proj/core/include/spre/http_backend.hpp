#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spre/gateway.hpp"

namespace spre {

/// Chat-completions/embeddings endpoints following the widely adopted
/// completions API schema. The API key is read from the environment variable
/// named in api_key_env; the base URL is configurable so compatible servers
/// work unchanged.
struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string chat_path = "/v1/chat/completions";
  std::string embed_path = "/v1/embeddings";
  std::string chat_model = "gpt-3.5-turbo";
  std::string embed_model = "text-embedding-ada-002";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::string name() const override;
  RawChat chat_once(const ChatRequest& request) override;
  std::vector<std::vector<float>> embed_once(const std::vector<std::string>& texts,
                                             BackendUsage& usage) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spre
