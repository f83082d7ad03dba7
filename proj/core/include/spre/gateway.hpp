#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "spre/types.hpp"

namespace spre {

/// Pipeline stage a call is billed to.
enum class Stage { Synonyms, Generation, Rephrase, Embedding, Inference };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);

struct ChatMessage {
  enum class Role { System, User };
  Role role = Role::User;
  std::string text;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_retries = 3;
  Stage tag = Stage::Generation;

  static ChatRequest user(std::string text, double temperature, Stage tag, int max_retries = 3);
};

struct UsageRecord {
  Stage stage = Stage::Generation;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  double cost_usd = 0.0;
};

struct ChatResponse {
  std::string text;
  UsageRecord usage;
};

struct EmbeddingVector {
  std::vector<float> values;
  int dim() const { return static_cast<int>(values.size()); }
};

/// Per-1K-token unit prices. The arithmetic, not the numbers, is the contract;
/// defaults follow gpt-3.5-turbo pricing.
struct Pricing {
  double prompt_usd_per_1k = 0.001;
  double completion_usd_per_1k = 0.002;

  double cost(long long prompt_tokens, long long completion_tokens) const {
    return static_cast<double>(prompt_tokens) / 1000.0 * prompt_usd_per_1k +
           static_cast<double>(completion_tokens) / 1000.0 * completion_usd_per_1k;
  }
};

struct BackendUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
};

struct RawChat {
  std::string text;
  BackendUsage usage;
};

/// Single-attempt transport. Implementations throw TransientBackendError for
/// conditions worth retrying; the Gateway owns the retry policy.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual RawChat chat_once(const ChatRequest& request) = 0;
  virtual std::vector<std::vector<float>> embed_once(const std::vector<std::string>& texts,
                                                     BackendUsage& usage) = 0;
};

struct MeterSummary {
  std::vector<UsageRecord> stages;  // one row per stage seen, enum order
  long long prompt_tokens = 0;      // grand totals
  long long completion_tokens = 0;
  double cost_usd = 0.0;
};

/// Internally synchronized per-stage token/cost accumulator.
class UsageMeter {
 public:
  UsageRecord record(Stage stage, long long prompt_tokens, long long completion_tokens,
                     const Pricing& pricing);
  void add(const UsageRecord& rec);
  MeterSummary summary(const Pricing& pricing) const;

 private:
  mutable std::mutex mutex_;
  std::map<Stage, BackendUsage> sums_;
};

struct GatewayConfig {
  Pricing pricing;
  int max_in_flight = 4;        // bound on concurrent backend calls
  int default_max_retries = 3;  // used by embed() and ChatRequest defaults
  int backoff_base_ms = 200;    // 0 disables sleeping between retries
  double backoff_multiplier = 2.0;
  int backoff_cap_ms = 10000;
  std::string embed_model = "mock-embedding";
};

/// Uniform access to a chat/embedding backend: retries with exponential
/// backoff, a semaphore bounding in-flight calls, a content-hash embedding
/// cache, and per-stage usage metering. Thread-safe; embedding calls
/// serialize so the distinct-text cache contract holds under concurrency.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {});
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Throws BackendUnavailable after request.max_retries failed retries;
  /// MalformedResponse passes through untouched.
  ChatResponse chat(const ChatRequest& request);

  /// One vector per input, same order, uniform dimension. Repeated texts are
  /// served from the cache and cost zero backend calls.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

  MeterSummary meter_summary() const { return meter_.summary(config_.pricing); }
  UsageMeter& meter() { return meter_; }
  const GatewayConfig& config() const { return config_; }
  const std::string& backend_name() const { return backend_name_; }

  std::uint64_t embed_hash(std::string_view text) const;
  static std::uint64_t content_hash(std::string_view model_id, std::string_view text);

  /// Cache snapshot sorted by hash; used for index persistence.
  std::vector<std::pair<std::uint64_t, EmbeddingVector>> export_embedding_cache() const;
  void import_embedding_cache(const std::vector<std::pair<std::uint64_t, EmbeddingVector>>& entries);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  GatewayConfig config_;
  std::string backend_name_;
  UsageMeter meter_;
};

/// Whitespace-delimited token count; the mock backends bill with this.
long long word_count(std::string_view text);

}  // namespace spre
