#include "spre/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <semaphore>
#include <thread>
#include <unordered_map>

#include "spre/errors.hpp"
#include "spre/rng.hpp"

namespace spre {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Synonyms: return "synonyms";
    case Stage::Generation: return "generation";
    case Stage::Rephrase: return "rephrase";
    case Stage::Embedding: return "embedding";
    case Stage::Inference: return "inference";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  if (name == "synonyms") return Stage::Synonyms;
  if (name == "generation") return Stage::Generation;
  if (name == "rephrase") return Stage::Rephrase;
  if (name == "embedding") return Stage::Embedding;
  if (name == "inference") return Stage::Inference;
  throw Error("unknown stage: " + std::string(name));
}

ChatRequest ChatRequest::user(std::string text, double temperature, Stage tag, int max_retries) {
  ChatRequest req;
  req.messages.push_back({ChatMessage::Role::User, std::move(text)});
  req.temperature = temperature;
  req.tag = tag;
  req.max_retries = max_retries;
  return req;
}

long long word_count(std::string_view text) {
  long long count = 0;
  bool in_word = false;
  for (char raw : text) {
    bool space = std::isspace(static_cast<unsigned char>(raw)) != 0;
    if (!space && !in_word) {
      ++count;
    }
    in_word = !space;
  }
  return count;
}

UsageRecord UsageMeter::record(Stage stage, long long prompt_tokens, long long completion_tokens,
                               const Pricing& pricing) {
  UsageRecord rec{stage, prompt_tokens, completion_tokens,
                  pricing.cost(prompt_tokens, completion_tokens)};
  add(rec);
  return rec;
}

void UsageMeter::add(const UsageRecord& rec) {
  std::lock_guard lock(mutex_);
  auto& sums = sums_[rec.stage];
  sums.prompt_tokens += rec.prompt_tokens;
  sums.completion_tokens += rec.completion_tokens;
}

MeterSummary UsageMeter::summary(const Pricing& pricing) const {
  std::lock_guard lock(mutex_);
  MeterSummary out;
  for (const auto& [stage, sums] : sums_) {
    out.stages.push_back({stage, sums.prompt_tokens, sums.completion_tokens,
                          pricing.cost(sums.prompt_tokens, sums.completion_tokens)});
    out.prompt_tokens += sums.prompt_tokens;
    out.completion_tokens += sums.completion_tokens;
  }
  out.cost_usd = pricing.cost(out.prompt_tokens, out.completion_tokens);
  return out;
}

struct Gateway::Impl {
  explicit Impl(std::shared_ptr<Backend> backend, int max_in_flight)
      : backend(std::move(backend)),
        in_flight(std::max(1, max_in_flight)) {}

  std::shared_ptr<Backend> backend;
  std::counting_semaphore<> in_flight;
  std::mutex embed_mutex_;
  mutable std::mutex cache_mutex_;
  std::unordered_map<std::uint64_t, EmbeddingVector> cache_;
};

namespace {

class SemaphoreSlot {
 public:
  explicit SemaphoreSlot(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SemaphoreSlot() { sem_.release(); }
  SemaphoreSlot(const SemaphoreSlot&) = delete;
  SemaphoreSlot& operator=(const SemaphoreSlot&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

void backoff_sleep(const GatewayConfig& config, int attempt) {
  if (config.backoff_base_ms <= 0) {
    return;
  }
  double ms = config.backoff_base_ms * std::pow(config.backoff_multiplier, attempt);
  ms = std::min(ms, static_cast<double>(config.backoff_cap_ms));
  std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(ms)));
}

}  // namespace

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config)
    : impl_(std::make_unique<Impl>(std::move(backend), config.max_in_flight)),
      config_(std::move(config)),
      backend_name_(impl_->backend->name()) {}

Gateway::~Gateway() = default;

ChatResponse Gateway::chat(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw Error("chat: request has no messages");
  }
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw Error("chat: temperature outside [0, 2]");
  }
  const int max_retries = std::max(0, request.max_retries);
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    try {
      RawChat raw;
      {
        SemaphoreSlot slot(impl_->in_flight);
        raw = impl_->backend->chat_once(request);
      }
      ChatResponse response;
      response.text = std::move(raw.text);
      response.usage = meter_.record(request.tag, raw.usage.prompt_tokens,
                                     raw.usage.completion_tokens, config_.pricing);
      return response;
    } catch (const TransientBackendError& ex) {
      last_error = ex.what();
      if (attempt == max_retries) {
        break;
      }
      backoff_sleep(config_, attempt);
    }
  }
  throw BackendUnavailable("chat failed after " + std::to_string(max_retries) +
                           " retries: " + last_error);
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw Error("embed: empty input");
  }
  std::lock_guard embed_lock(impl_->embed_mutex_);

  std::vector<std::uint64_t> hashes(texts.size());
  std::vector<std::string> misses;
  std::vector<std::uint64_t> miss_hashes;
  {
    std::lock_guard cache_lock(impl_->cache_mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      hashes[i] = embed_hash(texts[i]);
      if (impl_->cache_.count(hashes[i]) == 0 &&
          std::find(miss_hashes.begin(), miss_hashes.end(), hashes[i]) == miss_hashes.end()) {
        misses.push_back(texts[i]);
        miss_hashes.push_back(hashes[i]);
      }
    }
  }

  if (!misses.empty()) {
    BackendUsage usage;
    std::vector<std::vector<float>> vectors;
    const int max_retries = config_.default_max_retries;
    std::string last_error;
    for (int attempt = 0;; ++attempt) {
      try {
        SemaphoreSlot slot(impl_->in_flight);
        usage = {};
        vectors = impl_->backend->embed_once(misses, usage);
        break;
      } catch (const TransientBackendError& ex) {
        last_error = ex.what();
        if (attempt >= max_retries) {
          throw BackendUnavailable("embed failed after " + std::to_string(max_retries) +
                                   " retries: " + last_error);
        }
        backoff_sleep(config_, attempt);
      }
    }
    if (vectors.size() != misses.size()) {
      throw MalformedResponse("embed: backend returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(misses.size()) + " inputs");
    }
    std::lock_guard cache_lock(impl_->cache_mutex_);
    std::size_t dim = vectors.front().size();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != dim || vectors[i].empty()) {
        throw DimensionMismatch("embed: backend returned inconsistent dimensions");
      }
      for (float value : vectors[i]) {
        if (!std::isfinite(value)) {
          throw MalformedResponse("embed: backend returned a non-finite value");
        }
      }
      impl_->cache_[miss_hashes[i]] = EmbeddingVector{std::move(vectors[i])};
    }
    meter_.record(Stage::Embedding, usage.prompt_tokens, usage.completion_tokens, config_.pricing);
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::lock_guard cache_lock(impl_->cache_mutex_);
  int dim = -1;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& vec = impl_->cache_.at(hashes[i]);
    if (dim >= 0 && vec.dim() != dim) {
      throw DimensionMismatch("embed: cached vectors have inconsistent dimensions");
    }
    dim = vec.dim();
    out.push_back(vec);
  }
  return out;
}

std::uint64_t Gateway::content_hash(std::string_view model_id, std::string_view text) {
  return rng::mix(rng::fnv1a64(model_id), rng::fnv1a64(text));
}

std::uint64_t Gateway::embed_hash(std::string_view text) const {
  return content_hash(config_.embed_model, text);
}

std::vector<std::pair<std::uint64_t, EmbeddingVector>> Gateway::export_embedding_cache() const {
  std::lock_guard lock(impl_->cache_mutex_);
  std::vector<std::pair<std::uint64_t, EmbeddingVector>> out(impl_->cache_.begin(),
                                                             impl_->cache_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void Gateway::import_embedding_cache(
    const std::vector<std::pair<std::uint64_t, EmbeddingVector>>& entries) {
  std::lock_guard lock(impl_->cache_mutex_);
  for (const auto& [hash, vec] : entries) {
    impl_->cache_[hash] = vec;
  }
}

}  // namespace spre
