#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "spre/gateway.hpp"
#include "spre/types.hpp"

namespace spre {

struct MockConfig {
  std::uint64_t seed = 42;
  int embed_dim = 32;
  std::string model_id = "mock-chat";
  std::string embed_model_id = "mock-embedding";
};

/// Offline stand-in for a chat/embedding service. Responses are a pure
/// function of (seed, request bytes): the same request always yields the same
/// bytes, across calls and across runs. The chat side pattern-matches the
/// stage tag and emits well-formed stage outputs (bracketed synonym lists,
/// Sentence/Relation blocks, numbered paraphrases, a candidate answer) so the
/// whole pipeline runs without network access. Token counts are
/// whitespace-delimited word counts.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockConfig config = {});

  std::string name() const override;
  RawChat chat_once(const ChatRequest& request) override;
  std::vector<std::vector<float>> embed_once(const std::vector<std::string>& texts,
                                             BackendUsage& usage) override;

  /// Deterministic embedding for one text; exposed for tests.
  std::vector<float> embed_text(const std::string& text) const;

 private:
  std::string respond(const ChatRequest& request) const;
  MockConfig config_;
};

/// MockBackend variant whose inference-stage answers are looked up from a
/// gold table keyed on (sentence, head, tail). Every other stage delegates to
/// the plain mock. Used to drive the pipeline to a known-perfect score.
class GoldEchoBackend : public Backend {
 public:
  GoldEchoBackend(const std::vector<RelationDef>& schema,
                  const std::vector<TestInstance>& instances, MockConfig config = {});

  std::string name() const override;
  RawChat chat_once(const ChatRequest& request) override;
  std::vector<std::vector<float>> embed_once(const std::vector<std::string>& texts,
                                             BackendUsage& usage) override;

 private:
  MockBackend delegate_;
  std::unordered_map<std::string, std::string> gold_names_;
};

}  // namespace spre
